"""Zipf popularity profiles and i.i.d. request batches."""

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union
import numpy as np
from src.utils.exceptions import InvalidParameterError
from src.utils.helpers import seed_to_int
from src.utils.validators import validate_beta, validate_count

SeedLike = Union[int, np.random.SeedSequence]


@dataclass(frozen=True)
class PopularityProfile:
    """
    Request probabilities over a catalog of n files.

    p[i - 1] is the probability of file rank i. Arrays are read-only so a
    profile can be shared between trials and worker processes.
    """

    n: int
    beta: Optional[float]
    p: np.ndarray
    cdf: np.ndarray

    @property
    def p1(self) -> float:
        """Probability of the most popular file."""
        return float(self.p[0])

    def expected_requests(self, r: int) -> np.ndarray:
        """Expected request count per file in a batch of r, i.e. r * p_i."""
        return r * self.p

    def request_probability(self, r: int) -> np.ndarray:
        """Probability each file is requested at least once in a batch of r."""
        with np.errstate(divide="ignore"):
            return -np.expm1(r * np.log1p(-self.p))


@dataclass(frozen=True)
class RequestBatch:
    """One slot's requests: r file ranks in 1..n."""

    requests: np.ndarray
    slot_seed: int

    @property
    def r(self) -> int:
        return int(self.requests.size)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _build(p: np.ndarray, beta: Optional[float]) -> PopularityProfile:
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    return PopularityProfile(n=int(p.size), beta=beta, p=_freeze(p), cdf=_freeze(cdf))


def zipf_profile(n: int, beta: float) -> PopularityProfile:
    """
    Zipf profile p_i = p_1 * i^(-beta) with p_1 = (sum_{i<=n} i^(-beta))^(-1).

    Args:
        n: Number of files
        beta: Zipf exponent (>= 0, finite)

    Returns:
        Normalized PopularityProfile
    """
    n = validate_count(n, "n")
    beta = validate_beta(beta)

    weights = np.arange(1, n + 1, dtype=np.float64) ** (-beta)
    p1 = 1.0 / math.fsum(weights)
    return _build(p1 * weights, float(beta))


def profile_from_probabilities(p: Sequence[float]) -> PopularityProfile:
    """
    Build a profile from an explicit probability sequence.

    Args:
        p: Nonnegative probabilities summing to 1 (within 1e-9), indexed by rank

    Returns:
        PopularityProfile with beta = None
    """
    arr = np.asarray(p, dtype=np.float64).copy()
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidParameterError("Probability sequence must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidParameterError("Probabilities must be finite and nonnegative")
    total = math.fsum(arr)
    if abs(total - 1.0) > 1e-9:
        raise InvalidParameterError(f"Probabilities must sum to 1, got {total!r}")
    return _build(arr / total, None)


def sample_batch(profile: PopularityProfile, r: int, seed: SeedLike) -> RequestBatch:
    """
    Draw r i.i.d. file ranks from a profile.

    Draws use inverse-CDF lookup (binary search over the cumulative sum) on
    uniforms from numpy's PCG64 generator seeded by `seed`; the same
    (profile, r, seed) always yields the same batch.

    Args:
        profile: Popularity profile
        r: Batch size
        seed: Integer seed or SeedSequence

    Returns:
        RequestBatch of ranks in 1..n
    """
    r = validate_count(r, "r")
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng = np.random.default_rng(seq)
    u = rng.random(r)
    ranks = np.searchsorted(profile.cdf, u, side="right") + 1
    np.minimum(ranks, profile.n, out=ranks)
    return RequestBatch(requests=_freeze(ranks.astype(np.int64)), slot_seed=seed_to_int(seq))


def request_counts(batch: RequestBatch, n: int) -> np.ndarray:
    """
    Tally requests per file.

    Args:
        batch: Request batch
        n: Catalog size

    Returns:
        Array of n counts; counts[i - 1] is the multiplicity of rank i
    """
    req = np.asarray(batch.requests)
    if req.size and (req.min() < 1 or req.max() > n):
        raise InvalidParameterError(f"Request ranks must lie in 1..{n}")
    return np.bincount(req, minlength=n + 1)[1:]

