"""Placement policies: Proportional Placement and Knapsack Storage."""

import heapq
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Tuple
import numpy as np
from src.sim.knapsack import KnapsackSolution, greedy_fractions
from src.sim.popularity import PopularityProfile, SeedLike
from src.utils.exceptions import (
    ConsistencyError,
    InvalidParameterError,
    PlacementInfeasibleError,
)
from src.utils.validators import validate_count

logger = logging.getLogger(__name__)


class SubFileId(NamedTuple):
    """Part `part` (1..a) of file rank `content` (1..n); size 1/a file units."""

    content: int
    part: int

    def linear_index(self, a: int) -> int:
        """(content - 1) * a + part."""
        return (self.content - 1) * a + self.part

    @classmethod
    def from_linear_index(cls, index: int, a: int) -> "SubFileId":
        content, part = divmod(index - 1, a)
        return cls(content + 1, part + 1)

    def __str__(self) -> str:
        return f"{self.content}:{self.part}"


@dataclass(frozen=True)
class PlacementPlan:
    """
    What every cache stores. Cache ids run 1..m; stores[c - 1] is cache c.

    Immutable once built; delivery trials share it read-only.
    """

    m: int
    a: int
    k: int
    stores: Tuple[FrozenSet[SubFileId], ...]

    def store(self, cache_id: int) -> FrozenSet[SubFileId]:
        return self.stores[cache_id - 1]

    def load(self, cache_id: int) -> int:
        """Sub-files held by a cache."""
        return len(self.stores[cache_id - 1])

    @property
    def slot_capacity(self) -> int:
        """Sub-files a cache can hold (k units of 1/a-size parts)."""
        return self.a * self.k

    @property
    def total_units(self) -> float:
        """Stored data over all caches, in file units."""
        return sum(len(s) for s in self.stores) / self.a

    @cached_property
    def holders(self) -> Dict[SubFileId, Tuple[int, ...]]:
        """Sorted ids of the caches storing each sub-file."""
        index: Dict[SubFileId, List[int]] = {}
        for cache_id, store in enumerate(self.stores, start=1):
            for sub in store:
                index.setdefault(sub, []).append(cache_id)
        return {sub: tuple(ids) for sub, ids in index.items()}

    def holders_of(self, sub: SubFileId) -> Tuple[int, ...]:
        return self.holders.get(sub, ())


@dataclass(frozen=True)
class ReplicationCounts:
    """d[i - 1] caches hold each sub-file of content i."""

    d: Tuple[int, ...]
    m: int
    k: int
    undersupplied: bool = False

    @property
    def total(self) -> int:
        return sum(self.d)


@dataclass(frozen=True)
class StorageSelection:
    """Contents chosen by the storage knapsack, as (content, copies) pairs in rank order."""

    entries: Tuple[Tuple[int, int], ...]
    solution: KnapsackSolution = field(repr=False)

    @property
    def total_copies(self) -> int:
        return sum(c for _, c in self.entries)


def _check_system(m: int, k: int, a: int) -> Tuple[int, int, int]:
    return validate_count(m, "m"), validate_count(k, "k"), validate_count(a, "a")


def _largest_remainder(target: np.ndarray, total: int) -> np.ndarray:
    """Round target to integers summing to total; larger remainders first, ties to lower rank."""
    d = np.floor(target).astype(np.int64)
    short = total - int(d.sum())
    if short > 0:
        rem = target - d
        order = np.lexsort((np.arange(d.size), -rem))
        d[order[:short]] += 1
    return d


def pp_replication_counts(
    profile: PopularityProfile, m: int, k: int, a: int
) -> ReplicationCounts:
    """
    Replication counts d_i ~ m k p_i for Proportional Placement.

    Counts are rounded by largest remainder so they sum to m k, then clamped
    to [1, floor(m / a)] (each of the a parts needs d_i distinct caches).
    Any excess the lower clamp creates is taken one copy at a time from the
    largest count, the least popular of equal counts first. When n > m k not
    every file can get a copy; the lower clamp is skipped and the result is
    flagged as undersupplied.

    Args:
        profile: Popularity profile
        m: Number of caches
        k: Storage per cache (file units)
        a: Service limit per cache (parts per file)

    Returns:
        ReplicationCounts
    """
    m, k, a = _check_system(m, k, a)
    budget = m * k
    cap = max(1, m // a)
    undersupplied = profile.n > budget

    d = _largest_remainder(budget * profile.p, budget)
    lower = 0 if undersupplied else 1
    d = np.clip(d, lower, cap)

    excess = int(d.sum()) - budget
    if excess > 0:
        heap = [(-int(c), -i) for i, c in enumerate(d)]
        heapq.heapify(heap)
        while excess > 0 and heap:
            neg_c, neg_i = heapq.heappop(heap)
            if -neg_c <= lower:
                break
            d[-neg_i] -= 1
            excess -= 1
            heapq.heappush(heap, (neg_c + 1, neg_i))

    if undersupplied:
        logger.warning(
            "PP: %d files but only %d cache units; %d files get no copy",
            profile.n, budget, int(np.sum(d == 0)),
        )
    return ReplicationCounts(
        d=tuple(int(x) for x in d), m=m, k=k, undersupplied=undersupplied
    )


def pp_place(counts: ReplicationCounts, m: int, a: int, seed: SeedLike) -> PlacementPlan:
    """
    Spread every part of every content over d_i distinct caches.

    Contents go in rank order and parts in order; copies are dealt round-robin
    starting at a seeded random cache, probing past caches that are full or
    already hold a part of the same content.

    Args:
        counts: Replication counts
        m: Number of caches
        a: Parts per file
        seed: Integer seed or SeedSequence for the starting cache

    Returns:
        PlacementPlan
    """
    m = validate_count(m, "m")
    a = validate_count(a, "a")
    if counts.m != m:
        raise InvalidParameterError(f"Counts were built for m={counts.m}, not m={m}")
    capacity = a * counts.k
    rng = np.random.default_rng(seed)
    cursor = int(rng.integers(m))

    stores: List[set] = [set() for _ in range(m)]
    contents_on: List[set] = [set() for _ in range(m)]
    for content, d in enumerate(counts.d, start=1):
        for part in range(1, a + 1):
            for _ in range(d):
                for step in range(m):
                    c = (cursor + step) % m
                    if len(stores[c]) < capacity and content not in contents_on[c]:
                        break
                else:
                    raise PlacementInfeasibleError(content)
                stores[c].add(SubFileId(content, part))
                contents_on[c].add(content)
                cursor = (c + 1) % m

    return PlacementPlan(m=m, a=a, k=counts.k, stores=tuple(frozenset(s) for s in stores))


def default_delta(beta: float) -> float:
    """(beta - 1) / 2, the midpoint of the admissible (0, beta - 1)."""
    return (beta - 1.0) / 2.0


def ks_weights(
    profile: PopularityProfile, m: int, r: int, a: int, delta: Optional[float] = None
) -> np.ndarray:
    """
    Number of caches each content would occupy if stored.

    w_1 = ceil(m / a); w_i = ceil((1 + p_1 / 2) r p_i / a) for 1 < i <= n_1;
    ceil(4 p_1 (ln m)^2 / a) for n_1 < i <= n_2; ceil(4 / (a delta)) beyond,
    with n_1 = floor((r p_1)^(1/beta) / (ln m)^(2/beta)) and
    n_2 = min(n, floor(m^((1 + delta) / beta))). Weights are clipped to [1, m]:
    a cache never holds two copies of one sub-file.

    Args:
        profile: Zipf profile with beta > 1
        m: Number of caches
        r: Requests per slot
        a: Service limit per cache
        delta: Band parameter in (0, beta - 1); defaults to (beta - 1) / 2

    Returns:
        Integer weight per content (length n)
    """
    m = validate_count(m, "m")
    r = validate_count(r, "r")
    a = validate_count(a, "a")
    beta = profile.beta
    if beta is None or beta <= 1:
        raise InvalidParameterError(
            f"Knapsack Storage needs a Zipf profile with beta > 1, got beta={beta}"
        )
    if delta is None:
        delta = default_delta(beta)
    if not (0 < delta < beta - 1):
        raise InvalidParameterError(f"delta must lie in (0, {beta - 1:g}), got {delta!r}")

    n = profile.n
    p1 = profile.p1
    log_m = math.log(m)
    if log_m > 0:
        n1 = min(n, math.floor((r * p1) ** (1 / beta) / log_m ** (2 / beta)))
    else:
        n1 = n
    n2 = min(n, math.floor(m ** ((1 + delta) / beta)))

    ranks = np.arange(1, n + 1)
    band2 = np.ceil((1 + p1 / 2) * r * profile.p / a)
    band3 = math.ceil(4 * p1 * log_m**2 / a)
    band4 = math.ceil(4 / (a * delta))
    w = np.select(
        [ranks == 1, ranks <= n1, ranks <= n2],
        [math.ceil(m / a), band2, band3],
        default=band4,
    )
    return np.clip(w, 1, m).astype(np.int64)


def ks_select(
    profile: PopularityProfile, weights: Sequence[int], m: int, k: int, r: int
) -> StorageSelection:
    """
    Choose how many copies of each content to store.

    Solves the fractional knapsack with value 1 - (1 - p_i)^r (chance content i
    is requested in the slot), weight w_i and capacity m k; contents taken
    whole get w_i copies, the fractional one gets none.

    Args:
        profile: Popularity profile
        weights: Output of ks_weights
        m: Number of caches
        k: Storage per cache
        r: Requests per slot

    Returns:
        StorageSelection
    """
    m = validate_count(m, "m")
    k = validate_count(k, "k")
    w = np.asarray(weights, dtype=np.float64)
    if w.size != profile.n or np.any(w <= 0):
        raise InvalidParameterError("Need one positive weight per content")
    v = profile.request_probability(r)
    ids = np.arange(1, profile.n + 1)

    x, cut, left = greedy_fractions(v, w, ids, float(m * k))
    solution = KnapsackSolution(
        fractions=tuple(float(f) for f in x),
        objective=math.fsum(x * v),
        cut_index=None if cut is None else int(ids[cut]),
        remaining_capacity=left,
    )
    entries = tuple(
        (int(i), int(wi)) for i, xi, wi in zip(ids, x, w) if xi == 1.0
    )
    return StorageSelection(entries=entries, solution=solution)


def ks_place(selection: Iterable[Tuple[int, int]], m: int, a: int, k: int) -> PlacementPlan:
    """
    Deal the selected copies onto caches.

    Copies are sorted by content index and split into parts a, b, ...; the
    sub-file copy ranked l goes to cache ((l - 1) mod m) + 1, or the next cache
    with room that does not already hold that sub-file.

    Args:
        selection: (content, copies) pairs, e.g. StorageSelection.entries
        m: Number of caches
        a: Parts per file
        k: Storage per cache

    Returns:
        PlacementPlan
    """
    m, k, a = _check_system(m, k, a)
    entries = selection.entries if isinstance(selection, StorageSelection) else selection
    capacity = a * k
    total = sum(copies for _, copies in entries) * a
    if total > m * capacity:
        raise PlacementInfeasibleError(
            0, f"{total} sub-file copies exceed the {m * capacity} sub-file slots"
        )

    stores: List[set] = [set() for _ in range(m)]
    l = 0
    for content, copies in sorted(entries):
        for _ in range(copies):
            for part in range(1, a + 1):
                sub = SubFileId(content, part)
                target = l % m
                for step in range(m):
                    c = (target + step) % m
                    if len(stores[c]) < capacity and sub not in stores[c]:
                        break
                else:
                    raise PlacementInfeasibleError(content)
                stores[c].add(sub)
                l += 1

    return PlacementPlan(m=m, a=a, k=k, stores=tuple(frozenset(s) for s in stores))


def build_placement(
    policy: str,
    profile: PopularityProfile,
    m: int,
    k: int,
    a: int,
    r: int,
    delta: Optional[float] = None,
    seed: SeedLike = 0,
) -> PlacementPlan:
    """
    Run a placement policy end to end.

    Args:
        policy: "pp" or "ks"
        profile: Popularity profile
        m, k, a, r: System parameters
        delta: Knapsack Storage band parameter
        seed: Seed for PP's starting cache

    Returns:
        PlacementPlan
    """
    if policy == "pp":
        counts = pp_replication_counts(profile, m, k, a)
        plan = pp_place(counts, m, a, seed)
    elif policy == "ks":
        weights = ks_weights(profile, m, r, a, delta)
        selection = ks_select(profile, weights, m, k, r)
        plan = ks_place(selection, m, a, k)
    else:
        raise InvalidParameterError(f"Unknown placement policy: {policy}")
    logger.debug(
        "%s placement: m=%d k=%d a=%d, %.1f of %d units used",
        policy.upper(), m, k, a, plan.total_units, m * k,
    )
    return plan


def validate_plan(plan: PlacementPlan, distinct_parts: bool = False) -> None:
    """
    Check the storage invariants of a plan.

    Args:
        plan: Plan to check
        distinct_parts: Also require at most one part of any file per cache (PP)

    Raises:
        ConsistencyError: listing every violation found
    """
    problems = []
    if len(plan.stores) != plan.m:
        problems.append(f"{len(plan.stores)} stores for m={plan.m}")
    for cache_id, store in enumerate(plan.stores, start=1):
        if len(store) > plan.slot_capacity:
            problems.append(f"cache {cache_id} holds {len(store)} > {plan.slot_capacity} sub-files")
        for sub in store:
            if not 1 <= sub.part <= plan.a or sub.content < 1:
                problems.append(f"cache {cache_id} holds malformed sub-file {sub}")
        if distinct_parts:
            contents = [sub.content for sub in store]
            if len(contents) != len(set(contents)):
                problems.append(f"cache {cache_id} holds two parts of one file")
    if plan.total_units > plan.m * plan.k + 1e-9:
        problems.append(f"{plan.total_units} units stored on {plan.m * plan.k} units of cache")
    if problems:
        raise ConsistencyError("Placement invariants violated: " + "; ".join(problems))


def plan_to_text(plan: PlacementPlan) -> str:
    """One line per cache: cache_id<TAB>content:part,content:part,..."""
    lines = []
    for cache_id, store in enumerate(plan.stores, start=1):
        parts = ",".join(str(sub) for sub in sorted(store))
        lines.append(f"{cache_id}\t{parts}")
    return "\n".join(lines) + ("\n" if lines else "")


def plan_from_text(text: str, a: int, k: int) -> PlacementPlan:
    """Parse the output of plan_to_text."""
    stores: List[FrozenSet[SubFileId]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cache_id, _, body = line.partition("\t")
        if int(cache_id) != len(stores) + 1:
            raise InvalidParameterError(f"Line {lineno}: expected cache {len(stores) + 1}")
        subs = []
        for token in filter(None, body.split(",")):
            content, _, part = token.partition(":")
            subs.append(SubFileId(int(content), int(part)))
        stores.append(frozenset(subs))
    return PlacementPlan(m=len(stores), a=a, k=k, stores=tuple(stores))
