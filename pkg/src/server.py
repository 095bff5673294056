"""MCP Server for the cache cluster simulator."""

import asyncio
import json
import logging
import sys
from mcp.server import Server
from mcp.server.stdio import stdio_server
from mcp.types import Tool, TextContent

from src.tools.simulation import get_run_simulation_tool, run_simulation
from src.tools.presets import get_figure_preset_tool, get_figure_preset
from src.tools.bounds import (
    get_lower_bound_tool, get_lower_bound,
    get_value_weight_curve_tool, get_value_weight_curve,
    get_order_envelope_tool, get_order_envelope,
)
from src.config.settings import settings
from src.utils.exceptions import InvalidParameterError

logger = logging.getLogger(__name__)

# Create MCP server
server = Server("cache-cluster-sim")

TOOL_HANDLERS = {
    "run_simulation": run_simulation,
    "get_figure_preset": get_figure_preset,
    "get_lower_bound": get_lower_bound,
    "get_value_weight_curve": get_value_weight_curve,
    "get_order_envelope": get_order_envelope,
}


def configure_logging() -> None:
    """Log to stderr (stdout carries JSON-RPC) and to LOG_FILE when set."""
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if settings.LOG_FILE:
        handlers.append(logging.FileHandler(settings.LOG_FILE))
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
    )


@server.list_tools()
async def handle_list_tools() -> list[Tool]:
    """List all available tools."""
    return [
        get_run_simulation_tool(),
        get_figure_preset_tool(),
        get_lower_bound_tool(),
        get_value_weight_curve_tool(),
        get_order_envelope_tool(),
    ]


async def dispatch(name: str, arguments: dict) -> dict:
    """Route a tool call to its handler."""
    handler = TOOL_HANDLERS.get(name)
    if not handler:
        raise InvalidParameterError(f"Unknown tool: {name}")
    return await handler(arguments or {})


@server.call_tool()
async def handle_call_tool(name: str, arguments: dict) -> list[TextContent]:
    """Handle tool calls."""
    try:
        logger.info(f"Tool called: {name} with arguments: {arguments}")
        result = await dispatch(name, arguments)
        logger.info(f"Tool {name} completed successfully")
        return [TextContent(type="text", text=json.dumps(result, indent=2))]
    except Exception as e:
        # Let MCP SDK handle the exception properly
        logger.error(f"Error handling tool {name}: {str(e)}", exc_info=True)
        raise


async def main():
    """Main entry point for the MCP server."""
    configure_logging()
    logger.info("Starting cache cluster simulator MCP server...")
    async with stdio_server() as (read_stream, write_stream):
        await server.run(
            read_stream,
            write_stream,
            server.create_initialization_options(),
        )


def run() -> None:
    """Console-script entry."""
    asyncio.run(main())


if __name__ == "__main__":
    run()
