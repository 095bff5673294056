"""Experiment orchestration: Monte Carlo trials, parameter sweeps and result tables."""

import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import repeat
from typing import Any, Dict, List, Optional, Sequence, Tuple
import numpy as np
import pandas as pd
from src.config.settings import settings
from src.sim.bounds import BoundInputs, prop1_lower_bound
from src.sim.config import SimConfig, SweepSpec
from src.sim.delivery import DeliveryOutcome, deliver, split_requests
from src.sim.placement import PlacementPlan, build_placement
from src.sim.popularity import PopularityProfile, sample_batch, zipf_profile
from src.utils.cache import cache_manager
from src.utils.exceptions import InvalidParameterError, OutputError, PlacementInfeasibleError
from src.utils.helpers import placement_seed, trial_seed
from src.utils.validators import validate_sweep

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RateSummary:
    """Monte Carlo statistics of the per-slot rate, in file units."""

    mean: float
    stddev: float
    ci95_halfwidth: float
    iterations: int
    zero_rate_fraction: float

    @classmethod
    def from_rates(cls, rates: Sequence[float]) -> "RateSummary":
        """
        Summarize trial rates.

        Sums run over the sorted rates so the result does not depend on the
        order trials finished in.
        """
        xs = sorted(rates)
        count = len(xs)
        if count == 0:
            raise InvalidParameterError("Need at least one trial")
        mean = math.fsum(xs) / count
        if count > 1:
            stddev = math.sqrt(math.fsum((x - mean) ** 2 for x in xs) / (count - 1))
        else:
            stddev = 0.0
        return cls(
            mean=mean,
            stddev=stddev,
            ci95_halfwidth=settings.CI_Z * stddev / math.sqrt(count),
            iterations=count,
            zero_rate_fraction=sum(1 for x in xs if x == 0) / count,
        )


@dataclass(frozen=True)
class SweepRow:
    """One sweep point: the value, the config actually run and its summary."""

    value: float
    config: SimConfig
    summary: RateSummary


@dataclass(frozen=True)
class ResultRow:
    """One output line; fields are the CSV columns in order."""

    axis: str
    value: Optional[float]
    placement: str
    delivery: str
    mean_rate: float
    stddev: float
    ci95: float
    iterations: int
    seed: int
    lower_bound: Optional[float]

    def to_record(self) -> Dict[str, str]:
        """Text cells; floats use repr so parsing returns the same numbers."""
        def cell(x: Any) -> str:
            if x is None:
                return ""
            return repr(float(x)) if isinstance(x, float) else str(x)
        return {name: cell(getattr(self, name)) for name in settings.CSV_COLUMNS}

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "ResultRow":
        def opt(x: Any) -> Optional[float]:
            return None if x in ("", None) else float(x)
        return cls(
            axis=str(record["axis"]),
            value=opt(record["value"]),
            placement=str(record["placement"]),
            delivery=str(record["delivery"]),
            mean_rate=float(record["mean_rate"]),
            stddev=float(record["stddev"]),
            ci95=float(record["ci95"]),
            iterations=int(record["iterations"]),
            seed=int(record["seed"]),
            lower_bound=opt(record["lower_bound"]),
        )


@dataclass(frozen=True)
class ResultTable:
    """Rows plus free-form metadata (kept by the JSON format only)."""

    rows: Tuple[ResultRow, ...] = ()
    metadata: Dict[str, Any] = field(default_factory=dict)


def get_profile(n: int, beta: float) -> PopularityProfile:
    """Zipf profile, cached per (n, beta)."""
    key = cache_manager.generate_key(n, beta)
    return cache_manager.get_or_build("profile", key, lambda: zipf_profile(n, beta))


def build_plan(config: SimConfig) -> PlacementPlan:
    """
    Placement plan of a config, built once per placement parameters and seed.

    Args:
        config: Experiment config

    Returns:
        PlacementPlan
    """
    key = cache_manager.generate_key(
        config.placement, config.n, config.beta, config.caches, config.k, config.a,
        config.requests if config.placement == "ks" else None,
        config.effective_delta, config.seed,
    )
    return cache_manager.get_or_build("placement", key, lambda: build_placement(
        config.placement,
        get_profile(config.n, config.beta),
        config.caches,
        config.k,
        config.a,
        config.requests,
        config.effective_delta,
        placement_seed(config.seed),
    ))


def simulate_slot(config: SimConfig, plan: PlacementPlan, trial_index: int) -> DeliveryOutcome:
    """
    Sample one slot and run the configured delivery policy on it.

    The trial stream trial_seed(seed, trial_index) is split into two children:
    the first draws the batch, the second drives the delivery policy.

    Args:
        config: Experiment config
        plan: Placement plan built from the config
        trial_index: Zero-based trial number

    Returns:
        DeliveryOutcome
    """
    batch_seq, delivery_seq = trial_seed(config.seed, trial_index).spawn(2)
    batch = sample_batch(get_profile(config.n, config.beta), config.requests, batch_seq)
    subrequests = split_requests(batch, config.a)
    return deliver(config.delivery, plan, subrequests, config.a, delivery_seq)


def run_trial(config: SimConfig, plan: PlacementPlan, trial_index: int) -> float:
    """Server rate of one trial, in file units."""
    return simulate_slot(config, plan, trial_index).rate


def _run_chunk(config: SimConfig, plan: PlacementPlan, indices: Sequence[int]) -> List[float]:
    return [run_trial(config, plan, int(i)) for i in indices]


def run_monte_carlo(config: SimConfig, workers: Optional[int] = None,
                    plan: Optional[PlacementPlan] = None) -> RateSummary:
    """
    Run `config.iterations` independent trials.

    Args:
        config: Experiment config
        workers: Worker processes (default settings.WORKERS)
        plan: Prebuilt plan; built from the config when omitted

    Returns:
        RateSummary, identical for any worker count
    """
    plan = plan or build_plan(config)
    workers = workers or settings.WORKERS
    indices = np.arange(config.iterations)
    if workers <= 1 or config.iterations < 2:
        rates = _run_chunk(config, plan, indices)
    else:
        chunks = [c for c in np.array_split(indices, workers * 4) if c.size]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rates = [
                rate
                for part in pool.map(_run_chunk, repeat(config), repeat(plan), chunks)
                for rate in part
            ]
    return RateSummary.from_rates(rates)


def lower_bound_for(config: SimConfig) -> float:
    """Knapsack lower bound on the expected rate for a config's system, cached."""
    key = cache_manager.generate_key(
        config.n, config.beta, config.caches, config.k, config.a, config.requests
    )
    inputs = BoundInputs(
        profile=get_profile(config.n, config.beta),
        m=config.caches,
        k=config.k,
        a=config.a,
        r=config.requests,
    )
    return cache_manager.get_or_build("bound", key, lambda: prop1_lower_bound(inputs))


def _factor_pairs(product: int) -> List[Tuple[int, int]]:
    return [(a, product // a) for a in range(1, product + 1) if product % a == 0]


def run_sweep(base: SimConfig, axis: str, values: Sequence[float],
              workers: Optional[int] = None) -> List[SweepRow]:
    """
    Run the base config at every value of one parameter.

    For axis "ak" every (a, k) with a * k equal to the value is run and the
    pair with the smallest mean rate is kept (smaller a on ties).

    Args:
        base: Base config
        axis: k, a, ak, n or beta
        values: Axis values

    Returns:
        One SweepRow per value, in order
    """
    axis, values = validate_sweep(axis, list(values))
    rows = []
    for value in values:
        if axis == "ak":
            best: Optional[SweepRow] = None
            for a, k in _factor_pairs(int(value)):
                config = base.model_copy(update={"a": a, "k": k})
                try:
                    summary = run_monte_carlo(config, workers)
                except PlacementInfeasibleError as e:
                    logger.warning("ak=%d: skipping a=%d k=%d (%s)", int(value), a, k, e.message)
                    continue
                if best is None or summary.mean < best.summary.mean:
                    best = SweepRow(value=float(value), config=config, summary=summary)
            if best is None:
                raise PlacementInfeasibleError(0, f"No feasible (a, k) pair for ak={int(value)}")
            row = best
        else:
            config = base.with_axis(axis, value)
            row = SweepRow(value=float(value), config=config,
                           summary=run_monte_carlo(config, workers))
        logger.info(
            "%s+%s %s=%g: mean rate %.4f (+/- %.4f)",
            row.config.placement.upper(), row.config.delivery.upper(), axis, value,
            row.summary.mean, row.summary.ci95_halfwidth,
        )
        rows.append(row)
    return rows


def _result_row(axis: str, row: SweepRow, lower_bound: Optional[float]) -> ResultRow:
    return ResultRow(
        axis=axis,
        value=row.value if axis else None,
        placement=row.config.placement,
        delivery=row.config.delivery,
        mean_rate=row.summary.mean,
        stddev=row.summary.stddev,
        ci95=row.summary.ci95_halfwidth,
        iterations=row.summary.iterations,
        seed=row.config.seed,
        lower_bound=lower_bound,
    )


def run_experiment(spec: SweepSpec, workers: Optional[int] = None) -> ResultTable:
    """
    Run every delivery policy of a SweepSpec over its sweep.

    Rows come out grouped by policy, then series value, then sweep value.

    Args:
        spec: SweepSpec (from a config file, a preset or the command line)
        workers: Worker processes

    Returns:
        ResultTable; metadata records the series axis and, per row, the series
        value and the resolved m, r, a, k and delta
    """
    rows: List[ResultRow] = []
    details: List[Dict[str, Any]] = []
    for policy in spec.policies:
        policy_base = spec.base.model_copy(update={"delivery": policy})
        for series_value in spec.series_points:
            base = policy_base
            if series_value is not None:
                base = policy_base.with_axis(spec.series_axis, series_value)
                logger.info("%s series %s=%g", policy.upper(), spec.series_axis, series_value)
            if spec.axis is None:
                points = [SweepRow(value=0.0, config=base, summary=run_monte_carlo(base, workers))]
            else:
                points = run_sweep(base, spec.axis, spec.values, workers)
            for point in points:
                cfg = point.config
                bound = lower_bound_for(cfg) if spec.lower_bound else None
                rows.append(_result_row(spec.axis or "", point, bound))
                details.append({
                    "series": series_value,
                    "n": cfg.n, "m": cfg.caches, "r": cfg.requests, "k": cfg.k, "a": cfg.a,
                    "beta": cfg.beta, "delta": cfg.effective_delta,
                    "zero_rate_fraction": point.summary.zero_rate_fraction,
                })
    metadata = {"name": spec.name, "series_axis": spec.series_axis, "rows": details}
    return ResultTable(rows=tuple(rows), metadata=metadata)


def emit(table: ResultTable, fmt: str = "csv") -> bytes:
    """
    Serialize a result table.

    CSV has exactly the columns of settings.CSV_COLUMNS, "\\n" line endings
    and "." decimals; JSON also carries the metadata.

    Args:
        table: ResultTable
        fmt: "csv" or "json"

    Returns:
        Encoded bytes
    """
    if fmt == "csv":
        frame = pd.DataFrame(
            [row.to_record() for row in table.rows], columns=settings.CSV_COLUMNS
        )
        return frame.to_csv(index=False, lineterminator="\n").encode("utf-8")
    if fmt == "json":
        payload = {"metadata": table.metadata, "rows": [asdict(row) for row in table.rows]}
        return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")
    raise InvalidParameterError(f"Unknown format {fmt!r}; expected csv or json")


def parse_table(data: bytes, fmt: str = "csv") -> ResultTable:
    """Inverse of emit."""
    if fmt == "csv":
        frame = pd.read_csv(io.BytesIO(data), dtype=str, keep_default_na=False)
        if list(frame.columns) != settings.CSV_COLUMNS:
            raise InvalidParameterError(f"Unexpected CSV columns: {list(frame.columns)}")
        rows = tuple(ResultRow.from_record(rec) for rec in frame.to_dict("records"))
        return ResultTable(rows=rows)
    if fmt == "json":
        payload = json.loads(data.decode("utf-8"))
        rows = tuple(ResultRow.from_record(rec) for rec in payload["rows"])
        return ResultTable(rows=rows, metadata=payload.get("metadata", {}))
    raise InvalidParameterError(f"Unknown format {fmt!r}; expected csv or json")


def write_output(data: bytes, path: str) -> None:
    """Write emitted bytes to a file."""
    try:
        with open(path, "wb") as f:
            f.write(data)
    except OSError as e:
        raise OutputError(f"Cannot write {path}: {e}")
