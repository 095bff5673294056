"""Experiment configuration: validated parameters and the config-file format."""

import json
from typing import Any, Dict, List, Optional
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from src.config.settings import settings
from src.sim.placement import default_delta
from src.utils.exceptions import InvalidParameterError, OutputError
from src.utils.helpers import format_sweep, parse_sweep
from src.utils.validators import validate_delivery, validate_placement, validate_sweep

# axes whose values are counts
INTEGER_AXES = ("k", "a", "ak", "n")
SERIES_AXES = ("k", "a", "n", "beta")


class SimConfig(BaseModel):
    """
    One experiment point.

    Exactly one of m / c (c = n / m) and one of r / rho (r = rho m) is given;
    the resolved counts are `caches` and `requests`.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    n: int = Field(..., ge=1)
    m: Optional[int] = Field(default=None, ge=1)
    c: Optional[float] = Field(default=None, gt=0)
    r: Optional[int] = Field(default=None, ge=1)
    rho: Optional[float] = Field(default=None, gt=0, le=1)
    k: int = Field(default=1, ge=1)
    a: int = Field(default=1, ge=1)
    beta: float = Field(default=0.3, ge=0)
    delta: Optional[float] = Field(default=None, gt=0)
    placement: str = "pp"
    delivery: str = "mlp"
    iterations: int = Field(default=settings.DEFAULT_ITERATIONS, ge=1)
    seed: int = Field(default=settings.DEFAULT_SEED, ge=0, le=settings.MAX_SEED)

    @field_validator("placement")
    @classmethod
    def _placement(cls, v: str) -> str:
        return validate_placement(v)

    @field_validator("delivery")
    @classmethod
    def _delivery(cls, v: str) -> str:
        return validate_delivery(v)

    @model_validator(mode="after")
    def _resolve(self) -> "SimConfig":
        if (self.m is None) == (self.c is None):
            raise ValueError("give exactly one of m and c")
        if (self.r is None) == (self.rho is None):
            raise ValueError("give exactly one of r and rho")
        if self.placement == "ks":
            if self.beta <= 1:
                raise ValueError("ks placement needs beta > 1")
            if self.delta is not None and not self.delta < self.beta - 1:
                raise ValueError(f"delta must lie in (0, {self.beta - 1:g})")
        return self

    @property
    def caches(self) -> int:
        if self.m is not None:
            return self.m
        return max(1, round(self.n / self.c))

    @property
    def requests(self) -> int:
        if self.r is not None:
            return self.r
        return max(1, round(self.rho * self.caches))

    @property
    def effective_delta(self) -> Optional[float]:
        """delta used by Knapsack Storage, defaulting to (beta - 1) / 2."""
        if self.placement != "ks":
            return None
        return self.delta if self.delta is not None else default_delta(self.beta)

    def with_axis(self, axis: str, value: float) -> "SimConfig":
        """Copy with one sweep axis set (ak is resolved by the harness)."""
        if axis in ("k", "a", "n"):
            return self.model_copy(update={axis: int(value)})
        if axis == "beta":
            return self.model_copy(update={"beta": float(value)})
        raise InvalidParameterError(f"Axis {axis!r} cannot be set directly")


class SweepSpec(BaseModel):
    """
    A base config, an optional sweep, and the delivery policies to run.

    An optional series repeats the whole sweep once per value of a second
    parameter, giving one curve per value (e.g. one per a in a sweep over k).
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = ""
    base: SimConfig
    axis: Optional[str] = None
    values: List[float] = Field(default_factory=list)
    series_axis: Optional[str] = None
    series_values: List[float] = Field(default_factory=list)
    deliveries: List[str] = Field(default_factory=list)
    lower_bound: bool = False

    @model_validator(mode="after")
    def _check(self) -> "SweepSpec":
        if self.axis is not None:
            validate_sweep(self.axis, self.values)
            if self.axis in INTEGER_AXES and any(v != int(v) for v in self.values):
                raise ValueError(f"{self.axis} sweep values must be integers")
        elif self.values:
            raise ValueError("sweep values given without an axis")
        if self.series_axis is not None:
            validate_sweep(self.series_axis, self.series_values)
            if self.series_axis not in SERIES_AXES:
                raise ValueError(f"series axis must be one of: {', '.join(SERIES_AXES)}")
            if self.series_axis == self.axis:
                raise ValueError("series and sweep must use different axes")
            if self.axis == "ak" and self.series_axis in ("a", "k"):
                raise ValueError("an ak sweep picks a and k itself; series cannot fix either")
            if self.series_axis in INTEGER_AXES and any(v != int(v) for v in self.series_values):
                raise ValueError(f"{self.series_axis} series values must be integers")
        elif self.series_values:
            raise ValueError("series values given without an axis")
        for d in self.deliveries:
            validate_delivery(d)
        return self

    @property
    def policies(self) -> List[str]:
        return list(self.deliveries) or [self.base.delivery]

    @property
    def series_points(self) -> List[Optional[float]]:
        """Series values, or [None] when the sweep runs once."""
        return list(self.series_values) if self.series_axis is not None else [None]


SIM_KEYS = tuple(SimConfig.model_fields)
SPEC_KEYS = ("name", "sweep", "series", "lower_bound")


def spec_from_dict(data: Dict[str, Any]) -> SweepSpec:
    """
    Build a SweepSpec from the flat config-file mapping.

    Keys mirror the command-line flags: the SimConfig fields, `delivery` as a
    name or list of names, `sweep` and `series` as "axis=v1,v2,...", plus
    `name` and `lower_bound`. Unknown keys are rejected.
    """
    unknown = sorted(set(data) - set(SIM_KEYS) - set(SPEC_KEYS))
    if unknown:
        raise InvalidParameterError(f"Unknown config keys: {', '.join(unknown)}")
    fields = {key: data[key] for key in SIM_KEYS if data.get(key) is not None}
    deliveries: List[str] = []
    if isinstance(fields.get("delivery"), list):
        deliveries = [str(d).lower() for d in fields["delivery"]]
        if not deliveries:
            raise InvalidParameterError("delivery list is empty")
        fields["delivery"] = deliveries[0]
    axis, values = None, []
    if data.get("sweep"):
        axis, values = parse_sweep(str(data["sweep"]))
    series_axis, series_values = None, []
    if data.get("series"):
        series_axis, series_values = parse_sweep(str(data["series"]))
    try:
        return SweepSpec(
            name=str(data.get("name") or ""),
            base=SimConfig(**fields),
            axis=axis,
            values=values,
            series_axis=series_axis,
            series_values=series_values,
            deliveries=deliveries,
            lower_bound=bool(data.get("lower_bound", False)),
        )
    except ValidationError as e:
        err = e.errors()[0]
        where = ".".join(str(p) for p in err.get("loc", ()))
        raise InvalidParameterError(f"Invalid config ({where or 'model'}): {err['msg']}")


def spec_to_dict(spec: SweepSpec) -> Dict[str, Any]:
    """Inverse of spec_from_dict."""
    data: Dict[str, Any] = {}
    if spec.name:
        data["name"] = spec.name
    data.update(spec.base.model_dump(exclude_none=True))
    if spec.deliveries:
        data["delivery"] = list(spec.deliveries)
    if spec.axis is not None:
        data["sweep"] = format_sweep(spec.axis, spec.values)
    if spec.series_axis is not None:
        data["series"] = format_sweep(spec.series_axis, spec.series_values)
    if spec.lower_bound:
        data["lower_bound"] = True
    return data


def load_config(path: str) -> SweepSpec:
    """
    Read a JSON config file.

    Args:
        path: Path to the file

    Returns:
        SweepSpec
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise InvalidParameterError(f"Cannot read config {path}: {e}")
    except json.JSONDecodeError as e:
        raise InvalidParameterError(f"Config {path} is not valid JSON: {e}")
    if not isinstance(data, dict):
        raise InvalidParameterError("Config file must hold a JSON object")
    return spec_from_dict(data)


def dump_config(spec: SweepSpec) -> str:
    """Serialize a SweepSpec in the config-file format."""
    return json.dumps(spec_to_dict(spec), indent=2, sort_keys=True) + "\n"


def save_config(spec: SweepSpec, path: str) -> None:
    """Write a SweepSpec to a JSON config file."""
    try:
        with open(path, "w", encoding="utf-8") as f:
            f.write(dump_config(spec))
    except OSError as e:
        raise OutputError(f"Cannot write config {path}: {e}")


def load_presets() -> Dict[str, Dict[str, Any]]:
    """Raw figure presets keyed by name."""
    with open(settings.PRESETS_FILE, "r", encoding="utf-8") as f:
        return json.load(f)["presets"]


def figure_preset(name: str) -> SweepSpec:
    """
    Sweep specification reproducing one simulation figure.

    Args:
        name: fig8i, fig8ii, fig8iii, fig9i, fig9ii or fig9iii

    Returns:
        SweepSpec
    """
    presets = load_presets()
    key = name.lower().strip()
    if key not in presets:
        raise InvalidParameterError(
            f"Unknown preset {name!r}; expected one of {', '.join(sorted(presets))}"
        )
    return spec_from_dict({"name": key, **presets[key]})
