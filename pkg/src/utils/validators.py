"""Input validation utilities."""

import math
from typing import List, Optional, Tuple
from pydantic import BaseModel, Field, ValidationError, field_validator
from src.config.settings import settings
from src.utils.exceptions import InvalidParameterError


class CountValidator(BaseModel):
    """Validator for a positive integer count (files, caches, requests, ...)."""

    value: int = Field(..., ge=1)


class ExponentValidator(BaseModel):
    """Validator for the Zipf exponent."""

    beta: float = Field(..., ge=0)

    @field_validator("beta")
    @classmethod
    def validate_beta(cls, v: float) -> float:
        """Reject infinities and NaN."""
        if not math.isfinite(v):
            raise ValueError("beta must be finite")
        return v


class SeedValidator(BaseModel):
    """Validator for a 64-bit master seed."""

    seed: int = Field(default=settings.DEFAULT_SEED, ge=0, le=settings.MAX_SEED)


class PolicyValidator(BaseModel):
    """Validator for placement / delivery policy names."""

    placement: Optional[str] = None
    delivery: Optional[str] = None

    @field_validator("placement")
    @classmethod
    def validate_placement(cls, v: Optional[str]) -> Optional[str]:
        """Validate placement policy name."""
        if v is None:
            return v
        name = v.lower().strip()
        if name not in settings.PLACEMENT_POLICIES:
            raise ValueError(
                f"Placement must be one of: {', '.join(settings.PLACEMENT_POLICIES)}"
            )
        return name

    @field_validator("delivery")
    @classmethod
    def validate_delivery(cls, v: Optional[str]) -> Optional[str]:
        """Validate delivery policy name."""
        if v is None:
            return v
        name = v.lower().strip()
        if name not in settings.DELIVERY_POLICIES:
            raise ValueError(
                f"Delivery must be one of: {', '.join(settings.DELIVERY_POLICIES)}"
            )
        return name


class SweepValidator(BaseModel):
    """Validator for a parameter sweep."""

    axis: str
    values: List[float] = Field(..., min_length=1)

    @field_validator("axis")
    @classmethod
    def validate_axis(cls, v: str) -> str:
        """Validate sweep axis."""
        axis = v.lower().strip()
        if axis not in settings.SWEEP_AXES:
            raise ValueError(f"Sweep axis must be one of: {', '.join(settings.SWEEP_AXES)}")
        return axis

    @field_validator("values")
    @classmethod
    def validate_values(cls, v: List[float]) -> List[float]:
        """Sweep values must be finite and positive."""
        bad = [x for x in v if not math.isfinite(x) or x <= 0]
        if bad:
            raise ValueError(f"Invalid sweep values: {bad}")
        return v


def _first_error(e: ValidationError) -> str:
    err = e.errors()[0]
    where = ".".join(str(p) for p in err.get("loc", ()))
    return f"{where}: {err['msg']}" if where else err["msg"]


def validate_count(value: int, name: str = "value") -> int:
    """Quick positive-count validation."""
    if isinstance(value, bool):
        raise InvalidParameterError(f"{name} must be an integer >= 1")
    try:
        return CountValidator(value=value).value
    except ValidationError:
        raise InvalidParameterError(f"{name} must be an integer >= 1, got {value!r}")


def validate_beta(beta: float) -> float:
    """Quick Zipf exponent validation."""
    try:
        return ExponentValidator(beta=beta).beta
    except ValidationError as e:
        raise InvalidParameterError(f"Invalid beta {beta!r}: {_first_error(e)}")


def validate_seed(seed: int) -> int:
    """Quick seed validation."""
    try:
        return SeedValidator(seed=seed).seed
    except ValidationError as e:
        raise InvalidParameterError(f"Invalid seed {seed!r}: {_first_error(e)}")


def validate_placement(name: str) -> str:
    """Quick placement policy validation."""
    try:
        return PolicyValidator(placement=name).placement
    except ValidationError as e:
        raise InvalidParameterError(_first_error(e))


def validate_delivery(name: str) -> str:
    """Quick delivery policy validation."""
    try:
        return PolicyValidator(delivery=name).delivery
    except ValidationError as e:
        raise InvalidParameterError(_first_error(e))


def validate_sweep(axis: str, values: List[float]) -> Tuple[str, List[float]]:
    """Quick sweep validation."""
    try:
        validator = SweepValidator(axis=axis, values=values)
    except ValidationError as e:
        raise InvalidParameterError(_first_error(e))
    return validator.axis, validator.values
