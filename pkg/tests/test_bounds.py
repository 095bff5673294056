"""Tests for the knapsack lower bound and reference curves."""

import math
import numpy as np
import pytest
from src.sim.bounds import (
    BoundInputs,
    EnvelopeParams,
    expected_distinct_requests,
    knapsack_weights,
    order_envelope,
    pooling_threshold,
    prop1_lower_bound,
    value_weight_curve,
)
from src.sim.popularity import zipf_profile
from src.utils.exceptions import InvalidParameterError


def _reference_bound(n, m, k, a, r, beta):
    """Literal scalar evaluation: distinct-request mass minus the greedy knapsack optimum."""
    norm = math.fsum(i ** (-beta) for i in range(1, n + 1))
    p = [i ** (-beta) / norm for i in range(1, n + 1)]
    v = [1 - (1 - pi) ** r for pi in p]
    w = [max(math.floor(r * pi / a), 1) for pi in p]
    order = sorted(range(n), key=lambda i: (-v[i] / w[i], i))
    room, best = float(m * k), 0.0
    for i in order:
        take = min(1.0, room / w[i])
        if take <= 0:
            break
        best += take * v[i]
        room -= take * w[i]
    return max(sum(v) - best, 0.0)


def test_lower_bound_matches_reference():
    """Test the lower bound against a hand-computed knapsack."""
    profile = zipf_profile(10, 1.5)
    bound = prop1_lower_bound(BoundInputs(profile, m=5, k=1, a=1, r=5))
    assert bound == pytest.approx(_reference_bound(10, 5, 1, 1, 5, 1.5), abs=1e-12)
    assert bound > 0


@pytest.mark.parametrize("n,m,k,a,r,beta", [(200, 40, 2, 2, 40, 1.3), (1000, 100, 3, 1, 100, 1.7)])
def test_lower_bound_matches_reference_larger(n, m, k, a, r, beta):
    """Test the lower bound on a larger reference instance."""
    bound = prop1_lower_bound(BoundInputs(zipf_profile(n, beta), m=m, k=k, a=a, r=r))
    assert bound == pytest.approx(_reference_bound(n, m, k, a, r, beta), rel=1e-9, abs=1e-9)


def test_lower_bound_zero_when_everything_fits():
    """The bound is zero once every content fits in storage."""
    profile = zipf_profile(10, 1.2)
    weights = knapsack_weights(profile, r=10, a=1)
    k = int(weights.sum())
    assert prop1_lower_bound(BoundInputs(profile, m=1, k=k, a=1, r=10)) == 0


def test_lower_bound_without_storage_is_expected_distinct_requests():
    """Without storage the bound is the expected number of distinct requests."""
    profile = zipf_profile(50, 0.9)
    bound = prop1_lower_bound(BoundInputs(profile, m=10, k=0, a=1, r=20))
    assert bound == pytest.approx(expected_distinct_requests(profile, 20), rel=1e-12)


def test_lower_bound_monotone():
    """The bound never rises with k, m or a and stays within the distinct requests."""
    profile = zipf_profile(300, 1.4)

    def bound(m=30, k=2, a=1):
        return prop1_lower_bound(BoundInputs(profile, m=m, k=k, a=a, r=30))

    ks = [bound(k=k) for k in range(0, 8)]
    ms = [bound(m=m) for m in (5, 10, 20, 40, 80)]
    as_ = [bound(a=a) for a in range(1, 7)]
    for series in (ks, ms, as_):
        assert all(y <= x + 1e-12 for x, y in zip(series, series[1:]))
    total = expected_distinct_requests(profile, 30)
    assert all(0 <= b <= total for b in ks + ms + as_)


def test_lower_bound_with_file_sizes():
    """Test the bound with per-file sizes."""
    profile = zipf_profile(20, 1.2)
    ones = prop1_lower_bound(BoundInputs(profile, m=4, k=1, a=1, r=4, b=(1.0,) * 20))
    assert ones == pytest.approx(prop1_lower_bound(BoundInputs(profile, m=4, k=1, a=1, r=4)))
    sizes = tuple(float(s) for s in range(1, 21))
    empty = prop1_lower_bound(BoundInputs(profile, m=4, k=0, a=1, r=4, b=sizes))
    assert empty == pytest.approx(expected_distinct_requests(profile, 4, sizes))


@pytest.mark.parametrize(
    "kwargs",
    [dict(m=0, k=1, a=1, r=1), dict(m=1, k=-1, a=1, r=1), dict(m=1, k=1, a=1, r=1, b=(1.0,)),
     dict(m=1, k=1, a=1, r=1, b=(1.0, 0.0, 1.0))],
)
def test_bound_inputs_rejected(kwargs):
    """Invalid bound inputs raise InvalidParameterError."""
    with pytest.raises(InvalidParameterError):
        BoundInputs(zipf_profile(3, 1.0), **kwargs)


def test_value_weight_curve_peak():
    """n = m = r = 100, beta = 1.2: peak at i~ = 9, then strictly decreasing."""
    curve = value_weight_curve(zipf_profile(100, 1.2), r=100, a=1)
    assert curve.peak_index == 9
    assert abs(curve.argmax - curve.peak_index) <= 1
    assert curve.guarded == ()
    tail = curve.z[curve.peak_index:]
    assert np.all(np.diff(tail) < 0)


def test_value_weight_curve_single_branch():
    """With many parts the curve peaks at the first content and then falls."""
    profile = zipf_profile(30, 1.5)
    a = math.ceil(10 * profile.p1) + 1
    curve = value_weight_curve(profile, r=10, a=a)
    assert curve.peak_index == 1
    assert curve.guarded == (1,)
    assert np.all(np.diff(curve.z) <= 0)


def test_value_weight_curve_peak_on_random_configs():
    """Test the curve peak on random configurations."""
    rng = np.random.default_rng(31)
    for _ in range(50):
        n = int(rng.integers(200, 2001))
        r = int(rng.integers(50, 501))
        beta = float(rng.uniform(1.05, 1.95))
        curve = value_weight_curve(zipf_profile(n, beta), r=r, a=1)
        assert abs(curve.argmax - curve.peak_index) <= 1
        assert np.all(np.diff(curve.z[curve.peak_index:]) < 0)


def test_value_weight_curve_needs_positive_beta():
    """The curve rejects a non-positive exponent."""
    with pytest.raises(InvalidParameterError):
        value_weight_curve(zipf_profile(10, 0.0), r=10, a=1)


def test_envelope_thm1_upper():
    """The upper envelope decays exponentially in a·k."""
    params = EnvelopeParams(c1=0.5, c=2.0)
    assert order_envelope("thm1_upper", params, n=1000, k=1, a=1) == 1000
    k, a = 8, 2
    base = order_envelope("thm1_upper", params, n=1000, k=k, a=a)
    doubled = order_envelope("thm1_upper", params, n=1000, k=2 * k, a=a)
    assert doubled / base == pytest.approx(2 * math.exp(-params.c1 * a * k))


def test_envelope_thm1_lower():
    """Test the lower envelope and its cap at n for small k."""
    params = EnvelopeParams(c2=0.1, c=1.0)
    assert order_envelope("thm1_lower", params, n=500, k=0.5, a=1) == 500
    value = order_envelope("thm1_lower", params, n=500, k=2, a=3)
    assert value == pytest.approx(500 * math.exp(-0.1 * 6 * math.log(6)))


def test_envelope_thm2_thm3_regimes():
    """Test the heavy-tail envelopes and their cutoffs in k."""
    params = EnvelopeParams(c=3.0, gamma=0.25, beta=1.5, scale=2.0)
    n = 10_000
    assert order_envelope("thm2_lower", params, n, k=1, a=1) == pytest.approx(2 * n ** 0.5)
    assert order_envelope("thm3_upper", params, n, k=3.0, a=1) == pytest.approx(2 * n ** (0.25 / 1.5))
    assert order_envelope("thm2_lower", params, n, k=5, a=1) == 0
    assert order_envelope("thm3_upper", params, n, k=5, a=1) == 2.0


def test_envelope_errors():
    """Unknown regimes and bad envelope parameters are rejected."""
    with pytest.raises(InvalidParameterError):
        order_envelope("thm9", EnvelopeParams(), 10, 1, 1)
    with pytest.raises(InvalidParameterError):
        order_envelope("thm2_lower", EnvelopeParams(), 10, 1, 1)
    with pytest.raises(InvalidParameterError):
        EnvelopeParams(gamma=1.5)
    with pytest.raises(InvalidParameterError):
        EnvelopeParams(c1=0)


def test_pooling_threshold():
    """Test the pooling threshold."""
    assert pooling_threshold(1000) == pytest.approx(6.907755, abs=1e-6)
