"""Fractional knapsack solver."""

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple
import numpy as np
from src.config.settings import settings
from src.utils.exceptions import InvalidParameterError


@dataclass(frozen=True)
class KnapsackItem:
    """An item with nonnegative value and positive weight."""

    id: int
    value: float
    weight: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0):
            raise InvalidParameterError(f"Item {self.id}: value must be >= 0, got {self.value!r}")
        if not (math.isfinite(self.weight) and self.weight > 0):
            raise InvalidParameterError(f"Item {self.id}: weight must be > 0, got {self.weight!r}")

    @property
    def ratio(self) -> float:
        return self.value / self.weight


@dataclass(frozen=True)
class KnapsackSolution:
    """
    LP-optimal fractional selection.

    fractions are aligned with the input items; cut_index is the id of the
    single item taken fractionally, if any.
    """

    fractions: Tuple[float, ...]
    objective: float
    cut_index: Optional[int]
    remaining_capacity: float

    def selected(self) -> Tuple[int, ...]:
        """Positions of items taken whole."""
        return tuple(i for i, x in enumerate(self.fractions) if x == 1.0)


def greedy_fractions(
    values: np.ndarray, weights: np.ndarray, ids: np.ndarray, capacity: float
) -> Tuple[np.ndarray, Optional[int], float]:
    """
    Array form of the greedy used by solve_fractional.

    Args:
        values: Item values
        weights: Item weights (> 0)
        ids: Item ids, used to break ratio ties (smaller first)
        capacity: Knapsack capacity

    Returns:
        (fractions aligned with inputs, position of the fractional item or None,
        unused capacity)
    """
    x = np.zeros(values.size, dtype=np.float64)
    if values.size == 0:
        return x, None, float(capacity)

    # nonincreasing ratio, then smaller id; value-0 items sort last
    order = np.lexsort((ids, -(values / weights)))
    cum = np.cumsum(weights[order])
    limit = capacity + settings.KNAPSACK_REL_TOL * capacity

    whole = int(np.searchsorted(cum, limit, side="right"))
    x[order[:whole]] = 1.0
    used = float(cum[whole - 1]) if whole else 0.0
    left = max(capacity - used, 0.0)

    cut = None
    if whole < order.size and left > settings.KNAPSACK_REL_TOL * capacity:
        pos = int(order[whole])
        x[pos] = left / float(weights[pos])
        cut = pos
        left = 0.0
    return x, cut, left


def solve_fractional(items: Sequence[KnapsackItem], capacity: float) -> KnapsackSolution:
    """
    Solve max sum x_j v_j subject to sum x_j w_j <= W, 0 <= x_j <= 1.

    Items are taken whole in nonincreasing value/weight order until the next
    one no longer fits; that item is taken fractionally and the rest are
    left out.

    Args:
        items: Knapsack items
        capacity: Capacity W (>= 0)

    Returns:
        KnapsackSolution
    """
    if not math.isfinite(capacity) or capacity < 0:
        raise InvalidParameterError(f"Capacity must be >= 0, got {capacity!r}")

    values = np.array([it.value for it in items], dtype=np.float64)
    weights = np.array([it.weight for it in items], dtype=np.float64)
    ids = np.array([it.id for it in items], dtype=np.int64)

    x, cut, left = greedy_fractions(values, weights, ids, float(capacity))
    return KnapsackSolution(
        fractions=tuple(float(v) for v in x),
        objective=math.fsum(x * values),
        cut_index=None if cut is None else int(ids[cut]),
        remaining_capacity=left,
    )
