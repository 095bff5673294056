"""Tool for running simulations."""

import asyncio
from dataclasses import asdict
from typing import Any
from mcp.types import Tool
from src.config.settings import settings
from src.sim.config import figure_preset, spec_from_dict, spec_to_dict
from src.sim.harness import run_experiment
from src.utils.exceptions import InvalidParameterError


def get_run_simulation_tool() -> Tool:
    """Get run simulation tool definition."""
    return Tool(
        name="run_simulation",
        description=(
            "Run a Monte Carlo simulation of a cache cluster (placement + delivery policy) "
            "and return the mean server rate per sweep point."
        ),
        inputSchema={
            "type": "object",
            "properties": {
                "config": {
                    "type": "object",
                    "description": "Flat config: n, m|c, r|rho, k, a, beta, delta, placement, delivery, iterations, seed, sweep, series",
                },
                "preset": {
                    "type": "string",
                    "description": "Figure preset (fig8i, fig8ii, fig8iii, fig9i, fig9ii, fig9iii)",
                },
                "overrides": {
                    "type": "object",
                    "description": "Keys replacing those of the config or preset (e.g. {\"iterations\": 100})",
                },
                "workers": {
                    "type": "integer",
                    "description": "Worker processes",
                    "default": settings.WORKERS,
                },
            },
        },
    )


async def run_simulation(args: dict[str, Any]) -> dict[str, Any]:
    """
    Run an experiment.

    Args:
        args: Dictionary with 'config' or 'preset', optional 'overrides' and 'workers'

    Returns:
        Dictionary with the result rows and metadata
    """
    config, preset = args.get("config"), args.get("preset")
    if (config is None) == (preset is None):
        raise InvalidParameterError("Give exactly one of config and preset")
    data = dict(config) if config is not None else spec_to_dict(figure_preset(str(preset)))

    overrides = dict(args.get("overrides") or {})
    for key, other in (("m", "c"), ("c", "m"), ("r", "rho"), ("rho", "r")):
        if key in overrides:
            data.pop(other, None)
    data.update(overrides)

    spec = spec_from_dict(data)
    workers = int(args.get("workers") or settings.WORKERS)
    table = await asyncio.to_thread(run_experiment, spec, workers)
    return {
        "name": spec.name,
        "config": spec_to_dict(spec),
        "rows": [asdict(row) for row in table.rows],
        "metadata": table.metadata,
    }
