"""Tools for rate lower bounds and reference curves."""

from typing import Any, Optional
from mcp.types import Tool
from src.sim.bounds import (
    ENVELOPE_REGIMES,
    BoundInputs,
    EnvelopeParams,
    expected_distinct_requests,
    order_envelope,
    pooling_threshold,
    prop1_lower_bound,
    value_weight_curve,
)
from src.sim.popularity import zipf_profile
from src.utils.exceptions import InvalidParameterError
from src.utils.helpers import format_number
from src.utils.validators import validate_beta, validate_count


def _count(args: dict[str, Any], name: str, default: Optional[int] = None) -> int:
    value = args.get(name, default)
    if value is None:
        raise InvalidParameterError(f"{name} is required")
    return validate_count(value, name)


def _number(args: dict[str, Any], name: str, default: Optional[float] = None) -> float:
    value = args.get(name, default)
    if value is None:
        raise InvalidParameterError(f"{name} is required")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise InvalidParameterError(f"{name} must be a number, got {value!r}")


def get_lower_bound_tool() -> Tool:
    """Get lower bound tool definition."""
    return Tool(
        name="get_lower_bound",
        description="Knapsack lower bound on the expected server rate of any uncoded placement and delivery.",
        inputSchema={
            "type": "object",
            "properties": {
                "n": {"type": "integer", "description": "Number of contents"},
                "beta": {"type": "number", "description": "Zipf exponent"},
                "m": {"type": "integer", "description": "Number of caches"},
                "k": {"type": "integer", "description": "Storage per cache (file units)", "default": 1},
                "a": {"type": "integer", "description": "Service limit per cache", "default": 1},
                "r": {"type": "integer", "description": "Requests per slot"},
                "sizes": {
                    "type": "array",
                    "items": {"type": "number"},
                    "description": "Optional per-content sizes in file units",
                },
            },
            "required": ["n", "beta", "m", "r"],
        },
    )


async def get_lower_bound(args: dict[str, Any]) -> dict[str, Any]:
    """
    Compute the knapsack lower bound.

    Args:
        args: Dictionary with n, beta, m, k, a, r and optional sizes

    Returns:
        Dictionary with the bound and the uncached rate for comparison
    """
    profile = zipf_profile(_count(args, "n"), validate_beta(_number(args, "beta")))
    k = args.get("k", 1)
    if not isinstance(k, int) or k < 0:
        raise InvalidParameterError(f"k must be a nonnegative integer, got {k!r}")
    sizes = args.get("sizes")
    inputs = BoundInputs(
        profile=profile,
        m=_count(args, "m"),
        k=k,
        a=_count(args, "a", 1),
        r=_count(args, "r"),
        b=tuple(float(x) for x in sizes) if sizes is not None else None,
    )
    return {
        "lower_bound": prop1_lower_bound(inputs),
        "uncached_rate": expected_distinct_requests(profile, inputs.r, inputs.b),
        "n": profile.n,
        "m": inputs.m,
        "k": inputs.k,
        "a": inputs.a,
        "r": inputs.r,
    }


def get_value_weight_curve_tool() -> Tool:
    """Get value-weight curve tool definition."""
    return Tool(
        name="get_value_weight_curve",
        description="Value-to-weight ratio of each content in the lower-bound knapsack and its predicted peak.",
        inputSchema={
            "type": "object",
            "properties": {
                "n": {"type": "integer", "description": "Number of contents"},
                "beta": {"type": "number", "description": "Zipf exponent (> 0)"},
                "r": {"type": "integer", "description": "Requests per slot"},
                "a": {"type": "integer", "description": "Service limit per cache", "default": 1},
                "limit": {
                    "type": "integer",
                    "description": "Return ratios for the first `limit` contents",
                    "default": 50,
                },
            },
            "required": ["n", "beta", "r"],
        },
    )


async def get_value_weight_curve(args: dict[str, Any]) -> dict[str, Any]:
    """
    Compute the value-to-weight curve.

    Args:
        args: Dictionary with n, beta, r, a and limit

    Returns:
        Dictionary with the leading ratios, predicted peak and observed argmax
    """
    profile = zipf_profile(_count(args, "n"), validate_beta(_number(args, "beta")))
    curve = value_weight_curve(profile, _count(args, "r"), _count(args, "a", 1))
    limit = _count(args, "limit", 50)
    return {
        "z": [format_number(float(x), 8) for x in curve.z[:limit]],
        "peak_index": curve.peak_index,
        "argmax": curve.argmax,
        "guarded": list(curve.guarded),
    }


def get_order_envelope_tool() -> Tool:
    """Get order envelope tool definition."""
    return Tool(
        name="get_order_envelope",
        description="Reference curve of an asymptotic rate order, for overlaying on simulated rates.",
        inputSchema={
            "type": "object",
            "properties": {
                "regime": {"type": "string", "enum": list(ENVELOPE_REGIMES)},
                "n": {"type": "integer", "description": "Number of contents"},
                "k": {"type": "number", "description": "Storage per cache"},
                "a": {"type": "integer", "description": "Service limit per cache", "default": 1},
                "c": {"type": "number", "description": "Contents per cache, n / m", "default": 1.0},
                "beta": {"type": "number", "description": "Zipf exponent (thm2/thm3 regimes)"},
                "c1": {"type": "number", "default": 1.0},
                "c2": {"type": "number", "default": 1.0},
                "gamma": {"type": "number", "description": "log_m a", "default": 0.0},
                "scale": {"type": "number", "default": 1.0},
            },
            "required": ["regime", "n", "k"],
        },
    )


async def get_order_envelope(args: dict[str, Any]) -> dict[str, Any]:
    """
    Evaluate an order envelope.

    Args:
        args: Dictionary with regime, n, k, a and the envelope constants

    Returns:
        Dictionary with the envelope value and the pooling threshold ln n
    """
    n = _count(args, "n")
    beta = args.get("beta")
    params = EnvelopeParams(
        c1=_number(args, "c1", 1.0),
        c2=_number(args, "c2", 1.0),
        gamma=_number(args, "gamma", 0.0),
        c=_number(args, "c", 1.0),
        beta=float(beta) if beta is not None else None,
        scale=_number(args, "scale", 1.0),
    )
    regime = str(args.get("regime", ""))
    value = order_envelope(regime, params, n, _number(args, "k"), _count(args, "a", 1))
    return {
        "regime": regime,
        "value": value,
        "pooling_threshold": pooling_threshold(n),
    }
