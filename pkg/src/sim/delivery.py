"""Delivery policies: matching a slot's sub-requests to cache service slots."""

from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, NamedTuple, Optional, Sequence, Tuple
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching
from src.sim.placement import PlacementPlan, SubFileId
from src.sim.popularity import RequestBatch, SeedLike
from src.utils.exceptions import ConsistencyError, InvalidParameterError
from src.utils.validators import validate_count

# Assignment entry for sub-requests left to the central server
SERVER = 0


class SubRequest(NamedTuple):
    """Request `request_id` (1..r) asking for one sub-file."""

    request_id: int
    target: SubFileId


@dataclass(frozen=True)
class Assignment:
    """caches[j] is the cache id (1..m) serving sub-request j, or SERVER."""

    caches: Tuple[int, ...]

    @property
    def served(self) -> int:
        return sum(1 for c in self.caches if c != SERVER)

    def cache_usage(self, m: int) -> np.ndarray:
        """Sub-requests served per cache; index 0 counts SERVER."""
        return np.bincount(np.asarray(self.caches, dtype=np.int64), minlength=m + 1)


@dataclass(frozen=True)
class DeliveryOutcome:
    """Assignment plus what the server has to send, in file units."""

    assignment: Assignment
    server_subfiles: FrozenSet[SubFileId]
    rate: float

    @property
    def cache_served(self) -> int:
        return self.assignment.served

    @property
    def server_subrequests(self) -> int:
        return len(self.assignment.caches) - self.assignment.served


def split_requests(batch: RequestBatch, a: int) -> List[SubRequest]:
    """
    Expand every request into one sub-request per part.

    Args:
        batch: Request batch
        a: Parts per file

    Returns:
        r * a sub-requests ordered by (request_id, part)
    """
    a = validate_count(a, "a")
    return [
        SubRequest(request_id, SubFileId(int(content), part))
        for request_id, content in enumerate(batch.requests, start=1)
        for part in range(1, a + 1)
    ]


def _group(subrequests: Sequence[SubRequest]) -> Dict[SubFileId, List[int]]:
    groups: Dict[SubFileId, List[int]] = {}
    for j, sr in enumerate(subrequests):
        groups.setdefault(sr.target, []).append(j)
    return groups


class _SlotState:
    """Mutable cache-slot bookkeeping with an undo journal."""

    def __init__(self, plan: PlacementPlan, subrequests: Sequence[SubRequest],
                 caches: List[int], a: int):
        self.plan = plan
        self.subrequests = subrequests
        self.caches = caches
        self.a = a
        self.members: Dict[int, set] = {c: set() for c in range(1, plan.m + 1)}
        for j, c in enumerate(caches):
            if c != SERVER:
                self.members[c].add(j)
        self.journal: List[Tuple[int, int]] = []

    def move(self, j: int, cache: int) -> None:
        old = self.caches[j]
        if old != SERVER:
            self.members[old].discard(j)
        if cache != SERVER:
            self.members[cache].add(j)
        self.caches[j] = cache
        self.journal.append((j, old))

    def rollback(self, mark: int) -> None:
        while len(self.journal) > mark:
            j, old = self.journal.pop()
            cur = self.caches[j]
            if cur != SERVER:
                self.members[cur].discard(j)
            if old != SERVER:
                self.members[old].add(j)
            self.caches[j] = old

    def augment(self, j: int) -> bool:
        """Route unmatched sub-request j to a cache along a shortest augmenting path."""
        parent: Dict[int, Tuple[int, Optional[int]]] = {}
        queue = deque()
        for c in self.plan.holders_of(self.subrequests[j].target):
            parent[c] = (j, None)
            queue.append(c)
        while queue:
            c = queue.popleft()
            if len(self.members[c]) < self.a:
                while c is not None:
                    q, prev = parent[c]
                    self.move(q, c)
                    c = prev
                return True
            for q in self.members[c]:
                for c2 in self.plan.holders_of(self.subrequests[q].target):
                    if c2 not in parent:
                        parent[c2] = (q, c)
                        queue.append(c2)
        return False


def _augment_unmatched(state: _SlotState) -> None:
    # one pass suffices: a sub-request with no augmenting path never gains one later
    for j, sr in enumerate(state.subrequests):
        if state.caches[j] == SERVER and state.plan.holders_of(sr.target):
            state.augment(j)
    state.journal.clear()


def _refine_broadcast(state: _SlotState, groups: Dict[SubFileId, List[int]]) -> None:
    """
    Reuse slots held by sub-files the server broadcasts anyway.

    A sub-file with any unmatched sub-request is sent by the server once and
    covers all its requesters, so its cache-served copies are freed. Each such
    sub-file, least popular first, is then retried for full cache service;
    partial success is rolled back. Augmenting paths never unmatch a served
    sub-request, so fully served sub-files stay fully served.
    """
    caches = state.caches
    broadcast = [t for t, pos in groups.items() if any(caches[j] == SERVER for j in pos)]
    for t in broadcast:
        for j in groups[t]:
            if caches[j] != SERVER:
                state.move(j, SERVER)

    for t in sorted(broadcast, key=lambda s: s.linear_index(state.a), reverse=True):
        if not state.plan.holders_of(t):
            continue
        mark = len(state.journal)
        if not all(state.augment(j) for j in groups[t]):
            state.rollback(mark)
    state.journal.clear()


def maximum_matching(plan: PlacementPlan, subrequests: Sequence[SubRequest],
                     a: int) -> List[int]:
    """
    Maximum-cardinality matching of sub-requests to cache service slots.

    The bipartite graph joins every sub-request to the a service slots of
    each cache storing its exact sub-file; scipy's Hopcroft-Karp picks the
    matching.

    Returns:
        Cache id per sub-request, SERVER where unmatched
    """
    rows: List[int] = []
    cols: List[int] = []
    for j, sr in enumerate(subrequests):
        for c in plan.holders_of(sr.target):
            base = (c - 1) * a
            rows.extend([j] * a)
            cols.extend(range(base, base + a))
    graph = csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(len(subrequests), plan.m * a)
    )
    matched = maximum_bipartite_matching(graph, perm_type="column")
    return [SERVER if slot < 0 else int(slot) // a + 1 for slot in matched]


def omr_match(plan: PlacementPlan, subrequests: Sequence[SubRequest], a: int,
              seed: SeedLike = 0, refine: bool = True) -> Assignment:
    """
    Optimal Matching Routing.

    The default starts from the MLP assignment drawn with the same seed and
    grows it to a maximum-cardinality matching by augmenting paths. Served
    sub-requests stay served along every path, so each sub-file MLP fully
    serves is still fully served and the rate never exceeds MLP's. The slots
    of sub-files that end up broadcast are then recycled (_refine_broadcast)
    and the leftovers augmented once more, which keeps the matching maximum.

    With refine=False the result is a plain maximum matching with no regard
    for which sub-files end up broadcast.

    Args:
        plan: Placement plan
        subrequests: Slot sub-requests
        a: Service slots per cache
        seed: Seed of the starting MLP assignment
        refine: Start from MLP and recycle broadcast slots

    Returns:
        Assignment
    """
    if not subrequests:
        return Assignment(caches=())
    if not refine:
        return Assignment(caches=tuple(maximum_matching(plan, subrequests, a)))

    start = mlp_match(plan, subrequests, a, seed)
    state = _SlotState(plan, subrequests, list(start.caches), a)
    _augment_unmatched(state)
    _refine_broadcast(state, _group(subrequests))
    _augment_unmatched(state)
    return Assignment(caches=tuple(state.caches))


def mlp_match(plan: PlacementPlan, subrequests: Sequence[SubRequest], a: int,
              seed: SeedLike) -> Assignment:
    """
    Match Least Popular.

    Sub-files are visited from the highest linear index (least popular) down.
    If a sub-file has more sub-requests than idle slots on the caches storing
    it, all of them go to the server; otherwise each takes an idle slot drawn
    uniformly at random.

    Args:
        plan: Placement plan
        subrequests: Slot sub-requests
        a: Service slots per cache
        seed: Seed for slot choices, consumed in visiting order

    Returns:
        Assignment
    """
    rng = np.random.default_rng(seed)
    idle = np.full(plan.m + 1, a, dtype=np.int64)
    idle[SERVER] = 0
    caches = [SERVER] * len(subrequests)
    groups = _group(subrequests)

    for target in sorted(groups, key=lambda s: s.linear_index(a), reverse=True):
        holders = np.asarray(plan.holders_of(target), dtype=np.int64)
        if holders.size == 0:
            continue
        positions = groups[target]
        free = idle[holders]
        if len(positions) > int(free.sum()):
            continue
        pool = np.repeat(holders, free)
        picks = pool[rng.choice(pool.size, size=len(positions), replace=False)]
        for j, c in zip(positions, picks):
            caches[j] = int(c)
            idle[c] -= 1
    return Assignment(caches=tuple(caches))


def _online(plan: PlacementPlan, subrequests: Sequence[SubRequest], a: int,
            seed: SeedLike, least_loaded: bool) -> Assignment:
    # one uniform per sub-request, drawn up front in (request, part) order
    u = np.random.default_rng(seed).random(len(subrequests))
    busy = [0] * (plan.m + 1)
    caches = [SERVER] * len(subrequests)
    for j, sr in enumerate(subrequests):
        candidates = [c for c in plan.holders_of(sr.target) if busy[c] < a]
        if not candidates:
            continue
        if least_loaded:
            low = min(busy[c] for c in candidates)
            candidates = [c for c in candidates if busy[c] == low]
        c = candidates[int(u[j] * len(candidates))]
        caches[j] = c
        busy[c] += 1
    return Assignment(caches=tuple(caches))


def orr_match(plan: PlacementPlan, subrequests: Sequence[SubRequest], a: int,
              seed: SeedLike) -> Assignment:
    """
    Online Randomized Routing: each sub-request, in order, goes to a random
    cache that stores its sub-file and still has an idle slot.
    """
    return _online(plan, subrequests, a, seed, least_loaded=False)


def ollr_match(plan: PlacementPlan, subrequests: Sequence[SubRequest], a: int,
               seed: SeedLike) -> Assignment:
    """
    Online Least-Loaded Routing: as ORR, but among eligible caches with the
    fewest busy slots, ties broken at random.
    """
    return _online(plan, subrequests, a, seed, least_loaded=True)


def validate_assignment(plan: PlacementPlan, subrequests: Sequence[SubRequest],
                        assignment: Assignment, a: int) -> None:
    """
    Check slot and storage consistency of an assignment.

    Raises:
        ConsistencyError: on the first class of violation found
    """
    if len(assignment.caches) != len(subrequests):
        raise ConsistencyError(
            f"Assignment covers {len(assignment.caches)} of {len(subrequests)} sub-requests"
        )
    bad = [c for c in assignment.caches if not 0 <= c <= plan.m]
    if bad:
        raise ConsistencyError(f"Unknown cache ids in assignment: {sorted(set(bad))}")
    usage = assignment.cache_usage(plan.m)
    over = [c for c in range(1, plan.m + 1) if usage[c] > a]
    if over:
        raise ConsistencyError(f"Caches serving more than {a} sub-requests: {over}")
    for sr, c in zip(subrequests, assignment.caches):
        if c != SERVER and sr.target not in plan.store(c):
            raise ConsistencyError(f"Cache {c} does not store {sr.target}")


def finalize(assignment: Assignment, subrequests: Sequence[SubRequest], a: int,
             plan: Optional[PlacementPlan] = None) -> DeliveryOutcome:
    """
    Work out what the server transmits.

    Each sub-file with at least one server-assigned sub-request is sent once;
    the rate is the number of such sub-files divided by a.

    Args:
        assignment: Policy output
        subrequests: The sub-requests it assigns
        a: Parts per file
        plan: When given, slot and storage consistency are checked too

    Returns:
        DeliveryOutcome
    """
    if len(assignment.caches) != len(subrequests) or any(c < 0 for c in assignment.caches):
        raise ConsistencyError("Assignment does not cover every sub-request")
    if plan is not None:
        validate_assignment(plan, subrequests, assignment, a)
    server = frozenset(
        sr.target for sr, c in zip(subrequests, assignment.caches) if c == SERVER
    )
    return DeliveryOutcome(assignment=assignment, server_subfiles=server, rate=len(server) / a)


def deliver(policy: str, plan: PlacementPlan, subrequests: Sequence[SubRequest], a: int,
            seed: SeedLike = 0, validate: bool = False) -> DeliveryOutcome:
    """
    Run a delivery policy and finalize its outcome.

    Args:
        policy: "omr", "mlp", "orr" or "ollr"
        plan: Placement plan
        subrequests: Slot sub-requests
        a: Service slots per cache
        seed: Seed for the randomized policies
        validate: Check the assignment against the plan

    Returns:
        DeliveryOutcome
    """
    if policy == "omr":
        assignment = omr_match(plan, subrequests, a, seed)
    elif policy == "mlp":
        assignment = mlp_match(plan, subrequests, a, seed)
    elif policy == "orr":
        assignment = orr_match(plan, subrequests, a, seed)
    elif policy == "ollr":
        assignment = ollr_match(plan, subrequests, a, seed)
    else:
        raise InvalidParameterError(f"Unknown delivery policy: {policy}")
    return finalize(assignment, subrequests, a, plan if validate else None)
