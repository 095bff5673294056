"""Tool for figure presets."""

from typing import Any
from mcp.types import Tool
from src.sim.config import figure_preset, load_presets, spec_to_dict


def get_figure_preset_tool() -> Tool:
    """Get figure preset tool definition."""
    return Tool(
        name="get_figure_preset",
        description="Return the config of a figure preset, or the list of presets when no name is given.",
        inputSchema={
            "type": "object",
            "properties": {
                "name": {
                    "type": "string",
                    "description": "Preset name (fig8i, fig8ii, fig8iii, fig9i, fig9ii, fig9iii)",
                },
            },
        },
    )


async def get_figure_preset(args: dict[str, Any]) -> dict[str, Any]:
    """
    Look up a preset.

    Args:
        args: Dictionary with optional 'name' key

    Returns:
        Dictionary with the preset config, or the available names
    """
    name = args.get("name")
    if not name:
        return {"presets": sorted(load_presets())}
    spec = figure_preset(str(name))
    return {"name": spec.name, "config": spec_to_dict(spec)}
