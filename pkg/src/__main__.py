"""Entry point for running the MCP server as a module."""

from src.server import run

if __name__ == "__main__":
    run()
