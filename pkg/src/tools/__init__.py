"""MCP tools for the cache cluster simulator."""
