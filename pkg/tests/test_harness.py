"""Tests for Monte Carlo trials, sweeps and result tables."""

import math
import numpy as np
import pytest
from src.config.settings import settings
from src.sim.config import SimConfig, SweepSpec, spec_from_dict
from src.sim.harness import (
    RateSummary,
    ResultRow,
    ResultTable,
    build_plan,
    emit,
    lower_bound_for,
    parse_table,
    run_experiment,
    run_monte_carlo,
    run_sweep,
    run_trial,
    simulate_slot,
    write_output,
)
from src.utils.exceptions import InvalidParameterError, OutputError

HEADER = "axis,value,placement,delivery,mean_rate,stddev,ci95,iterations,seed,lower_bound\n"


def _config(**overrides):
    fields = dict(n=60, m=30, r=24, k=2, a=2, beta=0.6, delivery="mlp", iterations=20, seed=7)
    fields.update(overrides)
    return SimConfig(**fields)


def _row(**overrides):
    fields = dict(
        axis="k", value=2.0, placement="pp", delivery="mlp", mean_rate=1.25, stddev=0.5,
        ci95=0.098, iterations=100, seed=3, lower_bound=None,
    )
    fields.update(overrides)
    return ResultRow(**fields)


def test_rate_summary():
    """Test mean and confidence interval."""
    summary = RateSummary.from_rates([3.0, 0.0, 1.0, 2.0])
    assert summary.mean == 1.5
    assert summary.stddev == pytest.approx(math.sqrt(5 / 3))
    assert summary.ci95_halfwidth == pytest.approx(1.96 * math.sqrt(5 / 3) / 2)
    assert summary.iterations == 4
    assert summary.zero_rate_fraction == 0.25


def test_rate_summary_single_trial():
    """A single trial has a zero-width interval."""
    summary = RateSummary.from_rates([2.5])
    assert (summary.mean, summary.stddev, summary.ci95_halfwidth) == (2.5, 0.0, 0.0)


def test_rate_summary_needs_trials():
    """Test an empty rate list is rejected."""
    with pytest.raises(InvalidParameterError):
        RateSummary.from_rates([])


def test_build_plan_is_cached():
    """Test the plan is built once per configuration."""
    config = _config()
    assert build_plan(config) is build_plan(config.model_copy(update={"delivery": "orr"}))


def test_simulate_slot_deterministic():
    """Test a slot repeats for the same trial index."""
    config = _config()
    plan = build_plan(config)
    first = simulate_slot(config, plan, 3)
    again = simulate_slot(config, plan, 3)
    assert first == again
    assert run_trial(config, plan, 3) == first.rate
    rates = {run_trial(config, plan, i) for i in range(20)}
    assert len(rates) > 1


def test_monte_carlo_independent_of_worker_count():
    """Results do not depend on the worker count."""
    config = _config(iterations=30)
    serial = run_monte_carlo(config, workers=1)
    parallel = run_monte_carlo(config, workers=3)
    assert serial == parallel
    assert serial.iterations == 30


def test_sweep_over_k():
    """Test a sweep over k."""
    rows = run_sweep(_config(), "k", [1, 2, 3])
    assert [row.value for row in rows] == [1.0, 2.0, 3.0]
    assert [row.config.k for row in rows] == [1, 2, 3]


def test_sweep_ak_keeps_best_factor_pair():
    """Test the ak sweep keeps the best factor pair."""
    base = _config(n=40, m=40, r=32, beta=0.3, delivery="omr", iterations=15)
    (row,) = run_sweep(base, "ak", [4])
    assert row.config.a * row.config.k == 4
    means = [
        run_monte_carlo(base.model_copy(update={"a": a, "k": k})).mean
        for a, k in [(1, 4), (2, 2), (4, 1)]
    ]
    assert row.summary.mean == min(means)


def test_sweep_n_keeps_cache_ratio():
    """An n sweep keeps m and r proportional to n."""
    base = SimConfig(n=100, c=5.0, rho=1.0, k=3, placement="ks", beta=1.4, iterations=5)
    rows = run_sweep(base, "n", [50, 200])
    assert [(row.config.caches, row.config.requests) for row in rows] == [(10, 10), (40, 40)]


def test_sweep_rejects_unknown_axis():
    """Test an unknown sweep axis."""
    with pytest.raises(InvalidParameterError):
        run_sweep(_config(), "m", [1, 2])


def test_run_experiment_rows_and_bounds():
    """Test experiment rows with the lower bound column."""
    spec = spec_from_dict({
        "name": "small", "n": 200, "m": 40, "rho": 1.0, "k": 2, "a": 1, "beta": 1.4,
        "placement": "ks", "delivery": ["mlp", "orr"], "sweep": "k=1,2",
        "iterations": 10, "seed": 1, "lower_bound": True,
    })
    table = run_experiment(spec)
    assert [(row.delivery, row.value) for row in table.rows] == [
        ("mlp", 1.0), ("mlp", 2.0), ("orr", 1.0), ("orr", 2.0),
    ]
    bound_k1 = lower_bound_for(spec.base.with_axis("k", 1))
    assert table.rows[0].lower_bound == bound_k1
    assert table.rows[2].lower_bound == bound_k1
    assert table.metadata["name"] == "small"
    assert table.metadata["rows"][0]["m"] == 40
    assert table.metadata["rows"][0]["delta"] == pytest.approx(0.2)


def test_run_experiment_single_point():
    """Test an experiment without a sweep."""
    spec = SweepSpec(base=_config(iterations=5))
    (row,) = run_experiment(spec).rows
    assert row.axis == ""
    assert row.value is None
    assert row.lower_bound is None
    assert row.iterations == 5


def test_run_experiment_series_repeats_sweep():
    """One sweep per series value, recorded in the metadata."""
    spec = spec_from_dict({
        "n": 40, "m": 40, "r": 32, "beta": 0.3, "placement": "pp",
        "delivery": ["mlp", "orr"], "sweep": "k=1,2", "series": "a=1,2",
        "iterations": 5, "seed": 4,
    })
    table = run_experiment(spec)
    assert len(table.rows) == 8
    assert [row.value for row in table.rows[:4]] == [1.0, 2.0, 1.0, 2.0]
    assert [row.delivery for row in table.rows] == ["mlp"] * 4 + ["orr"] * 4
    details = table.metadata["rows"]
    assert table.metadata["series_axis"] == "a"
    assert [(d["series"], d["a"], d["k"]) for d in details[:4]] == [
        (1.0, 1, 1), (1.0, 1, 2), (2.0, 2, 1), (2.0, 2, 2),
    ]


def test_emit_csv_layout():
    """Test the CSV header and row layout."""
    table = ResultTable(rows=(_row(), _row(value=3.0, lower_bound=0.75)))
    text = emit(table, "csv").decode("utf-8")
    lines = text.split("\n")
    assert lines[0] + "\n" == HEADER
    assert lines[1] == "k,2.0,pp,mlp,1.25,0.5,0.098,100,3,"
    assert lines[2] == "k,3.0,pp,mlp,1.25,0.5,0.098,100,3,0.75"
    assert text.endswith("\n") and "\r" not in text


def test_emit_empty_table_is_header_only():
    """An empty table emits only the header."""
    assert emit(ResultTable(), "csv").decode("utf-8") == HEADER


def test_csv_round_trip_keeps_floats_exact():
    """Floats survive a CSV round trip exactly."""
    rows = (_row(mean_rate=1 / 3, stddev=2 / 7, ci95=1e-17), _row(axis="", value=None))
    table = ResultTable(rows=rows)
    assert parse_table(emit(table, "csv"), "csv").rows == rows


def test_json_round_trip_keeps_metadata():
    """Test JSON output keeps its metadata."""
    table = ResultTable(rows=(_row(),), metadata={"name": "fig8i", "rows": [{"a": 2, "delta": None}]})
    assert parse_table(emit(table, "json"), "json") == table


def test_emit_unknown_format():
    """Test an unknown output format."""
    with pytest.raises(InvalidParameterError):
        emit(ResultTable(), "xml")


def test_parse_rejects_other_columns():
    """Tables with other columns are rejected."""
    with pytest.raises(InvalidParameterError):
        parse_table(b"a,b\n1,2\n", "csv")


def test_write_output(tmp_path):
    """Test writing a table to a file."""
    path = tmp_path / "out.csv"
    write_output(b"x\n", str(path))
    assert path.read_bytes() == b"x\n"
    with pytest.raises(OutputError):
        write_output(b"x\n", str(tmp_path / "missing" / "out.csv"))


def test_csv_columns_match_settings():
    """CSV columns follow the settings."""
    assert HEADER.strip().split(",") == settings.CSV_COLUMNS


# Rate trends from the figure presets, at reduced scale

AK_VALUES = [1, 2, 3, 4, 5, 6, 8, 10, 12]
# KS+MLP over the bound on the n sweep; the band weights leave a gap near 10x here
KS_BOUND_GAP = 15.0


def _nonincreasing(rows):
    for earlier, later in zip(rows, rows[1:]):
        slack = earlier.summary.ci95_halfwidth + later.summary.ci95_halfwidth
        if later.summary.mean > earlier.summary.mean + slack:
            return False
    return True


@pytest.fixture(scope="module")
def ak_sweeps():
    base = SimConfig(n=100, m=100, r=80, beta=0.3, placement="pp", iterations=150, seed=0)
    return {
        policy: run_sweep(base.model_copy(update={"delivery": policy}), "ak", AK_VALUES)
        for policy in settings.DELIVERY_POLICIES
    }


@pytest.fixture(scope="module")
def ks_n_sweep():
    base = SimConfig(n=1000, c=5.0, rho=1.0, k=3, a=1, beta=1.4, placement="ks",
                     delivery="mlp", iterations=300, seed=0)
    return run_sweep(base, "n", [250, 500, 1000, 2000])


@pytest.mark.slow
def test_pp_rate_falls_with_storage():
    """Rate is nonincreasing in k at fixed a."""
    base = _config(n=300, m=300, r=240, a=2, beta=0.3, iterations=200, seed=0)
    rows = run_sweep(base, "k", [1, 2, 4, 8])
    assert _nonincreasing(rows)
    assert rows[-1].summary.mean < rows[0].summary.mean


@pytest.mark.slow
@pytest.mark.parametrize("delivery", ["mlp", "ollr"])
def test_pp_rate_falls_with_service_limit(delivery):
    """Rate is nonincreasing in a at fixed k."""
    base = _config(n=300, m=300, r=240, k=1, beta=0.3, delivery=delivery,
                   iterations=200, seed=0)
    rows = run_sweep(base, "a", [1, 2, 3, 4])
    assert _nonincreasing(rows)
    assert rows[-1].summary.mean < rows[0].summary.mean


@pytest.mark.slow
@pytest.mark.parametrize("delivery", ["omr", "mlp", "orr", "ollr"])
def test_pp_rate_decays_exponentially_in_ak(ak_sweeps, delivery):
    """ln(mean rate) falls linearly in ak while the rate exceeds one file."""
    points = [(row.value, row.summary.mean) for row in ak_sweeps[delivery]
              if row.summary.mean > 1]
    assert len(points) >= 3
    ak = np.array([p[0] for p in points])
    log_rate = np.log([p[1] for p in points])
    slope, _ = np.polyfit(ak, log_rate, 1)
    r_squared = np.corrcoef(ak, log_rate)[0, 1] ** 2
    assert slope < 0
    assert r_squared >= 0.9


@pytest.mark.slow
def test_policy_ordering_over_ak(ak_sweeps):
    """OMR never loses to MLP; MLP beats the online policies within the CI."""
    for i in range(len(AK_VALUES)):
        omr, mlp = ak_sweeps["omr"][i].summary, ak_sweeps["mlp"][i].summary
        assert omr.mean <= mlp.mean
        for online in ("orr", "ollr"):
            other = ak_sweeps[online][i].summary
            assert mlp.mean <= other.mean + mlp.ci95_halfwidth + other.ci95_halfwidth


@pytest.mark.slow
def test_omr_not_worse_than_heuristics_on_average():
    """At a fixed (a, k), OMR's mean is no worse than any heuristic."""
    base = _config(n=100, m=100, r=80, a=2, k=2, beta=0.3, iterations=300, seed=5)
    results = {
        policy: run_monte_carlo(base.model_copy(update={"delivery": policy}))
        for policy in settings.DELIVERY_POLICIES
    }
    omr = results["omr"]
    assert omr.mean <= results["mlp"].mean
    for policy in ("orr", "ollr"):
        other = results[policy]
        assert omr.mean <= other.mean + omr.ci95_halfwidth + other.ci95_halfwidth


@pytest.mark.slow
def test_ks_rate_grows_as_n_to_two_minus_beta(ks_n_sweep):
    """Log-log slope of the mean rate in n is near 2 - beta."""
    n = np.array([row.config.n for row in ks_n_sweep], dtype=float)
    rate = np.array([row.summary.mean for row in ks_n_sweep])
    slope, _ = np.polyfit(np.log(n), np.log(rate), 1)
    assert abs(slope - (2 - 1.4)) <= 0.25


@pytest.mark.slow
def test_ks_rate_tracks_lower_bound(ks_n_sweep):
    """KS+MLP stays above the bound and within a fixed factor of it."""
    for row in ks_n_sweep:
        bound = lower_bound_for(row.config)
        assert row.summary.mean >= bound - row.summary.ci95_halfwidth
        assert row.summary.mean <= KS_BOUND_GAP * max(bound, 1.0)


@pytest.mark.slow
def test_knapsack_storage_stays_above_lower_bound():
    """The bound holds along the k sweep."""
    for k in (2, 4, 8):
        config = SimConfig(n=500, m=100, rho=1.0, k=k, a=1, beta=1.4, placement="ks",
                           delivery="mlp", iterations=400, seed=2)
        summary = run_monte_carlo(config)
        assert summary.mean >= lower_bound_for(config) - summary.ci95_halfwidth


@pytest.mark.slow
def test_ks_mlp_rate_falls_with_beta():
    """Along the beta sweep the rate is nonincreasing and above the bound."""
    base = SimConfig(n=1000, m=200, rho=1.0, k=3, a=1, beta=1.4, placement="ks",
                     delivery="mlp", iterations=200, seed=0)
    rows = run_sweep(base, "beta", [1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9])
    assert _nonincreasing(rows)
    for row in rows:
        assert row.summary.mean >= lower_bound_for(row.config) - row.summary.ci95_halfwidth
