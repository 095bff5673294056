"""Lower bounds and reference curves for the server transmission rate."""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple
import numpy as np
from src.sim.knapsack import greedy_fractions
from src.sim.popularity import PopularityProfile
from src.utils.exceptions import InvalidParameterError

ENVELOPE_REGIMES = ("thm1_upper", "thm1_lower", "thm2_lower", "thm3_upper")


@dataclass(frozen=True)
class BoundInputs:
    """System parameters for the knapsack lower bound. b holds file sizes in units."""

    profile: PopularityProfile
    m: int
    k: int
    a: int
    r: int
    b: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.m < 1 or self.a < 1 or self.r < 1 or self.k < 0:
            raise InvalidParameterError("Need m, a, r >= 1 and k >= 0")
        if self.b is not None:
            if len(self.b) != self.profile.n:
                raise InvalidParameterError("Need one file size per content")
            if any(not (x > 0) for x in self.b):
                raise InvalidParameterError("File sizes must be positive")

    @property
    def sizes(self) -> np.ndarray:
        if self.b is None:
            return np.ones(self.profile.n)
        return np.asarray(self.b, dtype=np.float64)


@dataclass(frozen=True)
class EnvelopeParams:
    """Order constants for the asymptotic reference curves; a = m^gamma, c = n/m."""

    c1: float = 1.0
    c2: float = 1.0
    gamma: float = 0.0
    c: float = 1.0
    beta: Optional[float] = None
    scale: float = 1.0

    def __post_init__(self):
        if not (self.c1 > 0 and self.c2 > 0 and self.c > 0 and self.scale > 0):
            raise InvalidParameterError("c1, c2, c and scale must be positive")
        if not 0 <= self.gamma <= 1:
            raise InvalidParameterError(f"gamma must lie in [0, 1], got {self.gamma!r}")


@dataclass(frozen=True)
class ValueWeightCurve:
    """Value-to-weight ratio per content, its predicted peak, and guarded indices."""

    z: np.ndarray
    peak_index: int
    guarded: Tuple[int, ...] = field(default=())

    @property
    def argmax(self) -> int:
        """1-based index of the largest ratio."""
        return int(np.argmax(self.z)) + 1


def knapsack_weights(profile: PopularityProfile, r: int, a: int) -> np.ndarray:
    """max(floor(r p_i / a), 1): slots needed to serve content i's expected requests."""
    return np.maximum(np.floor(r * profile.p / a), 1.0)


def prop1_lower_bound(inputs: BoundInputs) -> float:
    """
    Lower bound on the expected rate of any uncoded policy.

    sum_i b_i (1 - (1 - p_i)^r) minus the optimum of the fractional knapsack
    with per-unit value 1 - (1 - p_i)^r, weight max(floor(r p_i / a), 1) and
    capacity m k. The units of one file are identical items, so they are
    solved as one item of value b_i v_i and weight b_i w_i.

    Args:
        inputs: BoundInputs

    Returns:
        Bound in file units, never negative
    """
    profile = inputs.profile
    b = inputs.sizes
    v = profile.request_probability(inputs.r)
    w = knapsack_weights(profile, inputs.r, inputs.a)
    ids = np.arange(1, profile.n + 1)

    x, _, _ = greedy_fractions(b * v, b * w, ids, float(inputs.m * inputs.k))
    total = math.fsum(b * v)
    stored = math.fsum(x * b * v)
    return max(total - stored, 0.0)


def value_weight_curve(profile: PopularityProfile, r: int, a: int) -> ValueWeightCurve:
    """
    Value-to-weight ratio z_i of the lower-bound knapsack.

    z_i = (1 - (1 - p_i)^r) / floor(r p_i / a) for i <= i~ and 1 - (1 - p_i)^r
    beyond, with i~ = ceil((r p_1 / (2a))^(1/beta)). Indices i <= i~ whose floor
    is 0 use the second branch and are reported in `guarded`.

    Args:
        profile: Zipf profile with beta > 0
        r: Requests per slot
        a: Service limit per cache

    Returns:
        ValueWeightCurve
    """
    beta = profile.beta
    if beta is None or beta <= 0:
        raise InvalidParameterError(f"Need a Zipf profile with beta > 0, got {beta}")
    peak = max(1, math.ceil((r * profile.p1 / (2 * a)) ** (1 / beta)))
    peak = min(peak, profile.n)

    v = profile.request_probability(r)
    floors = np.floor(r * profile.p / a)
    ranks = np.arange(1, profile.n + 1)
    head = (ranks <= peak) & (floors > 0)
    z = np.where(head, v / np.where(floors > 0, floors, 1.0), v)
    guarded = tuple(int(i) for i in ranks[(ranks <= peak) & (floors == 0)])
    return ValueWeightCurve(z=z, peak_index=peak, guarded=guarded)


def order_envelope(regime: str, params: EnvelopeParams, n: int, k: float, a: int) -> float:
    """
    Reference curve for an asymptotic order result.

    thm1_upper: n if k < c, else min(n, n k exp(-c1 a k)).
    thm1_lower: n if k < c, else n exp(-c2 a k ln(a k)).
    thm2_lower / thm3_upper: n^(2 - beta) if k < c; n^((2 - beta - gamma) / beta)
    if k = c; 0 (lower) or 1 (upper) if k > c.
    Every value is multiplied by params.scale.

    Args:
        regime: One of ENVELOPE_REGIMES
        params: EnvelopeParams (beta required for thm2/thm3)
        n: Number of files
        k: Storage per cache
        a: Service limit per cache

    Returns:
        Envelope value
    """
    if regime not in ENVELOPE_REGIMES:
        raise InvalidParameterError(
            f"Unknown regime {regime!r}; expected one of {', '.join(ENVELOPE_REGIMES)}"
        )
    at_c = math.isclose(k, params.c)
    below = k < params.c and not at_c

    if regime == "thm1_upper":
        value = n if below else min(n, n * k * math.exp(-params.c1 * a * k))
    elif regime == "thm1_lower":
        ak = a * k
        value = n if below else n * math.exp(-params.c2 * ak * math.log(ak))
    else:
        beta = params.beta
        if beta is None:
            raise InvalidParameterError(f"{regime} needs beta")
        if below:
            value = n ** (2 - beta)
        elif at_c:
            value = n ** ((2 - beta - params.gamma) / beta)
        else:
            value = 0.0 if regime == "thm2_lower" else 1.0
    return params.scale * value


def pooling_threshold(n: int) -> float:
    """ln n: the a k product beyond which PP+OMR's rate vanishes for beta < 1."""
    return math.log(n)


def expected_distinct_requests(profile: PopularityProfile, r: int,
                               b: Optional[Sequence[float]] = None) -> float:
    """sum_i b_i (1 - (1 - p_i)^r): the rate with nothing cached."""
    v = profile.request_probability(r)
    sizes = np.ones(profile.n) if b is None else np.asarray(b, dtype=np.float64)
    return math.fsum(sizes * v)
