from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from femtosim.spectrum import (SpectrumPlan, TrafficState, allocate_spectrum, generate_femto_traffic,
                               generate_macro_load, spectrum_rows, truncated_poisson_mean,
                               utilization)


def brute_truncated_mean(lam, cap):
    # direct summation with exact factorial recursion
    total, pmf, k = 0.0, np.exp(-lam), 0
    mass = 0.0
    while k < cap:
        total += k * pmf
        mass += pmf
        k += 1
        pmf *= lam / k
    return total + cap * (1.0 - mass)


def test_baseline_share():
    plan = SpectrumPlan()
    assert plan.per_femto_khz == pytest.approx(20.8333, abs=1e-4)
    assert plan.macro_allocated_khz == 500.0
    assert plan.allocated_total() == 1000


def test_balanced_loads_keep_baseline():
    plan = SpectrumPlan()
    out = allocate_spectrum(0.5, [0.5] * 24, plan)
    assert out.macro_allocated_khz == 500.0
    assert out.femto_allocated_khz == plan.femto_allocated_khz


def test_hot_macro_takes_idle_femto():
    out = allocate_spectrum(1.0, [0.0] * 24)
    assert out.macro_allocated_khz == pytest.approx(1000.0)
    assert out.allocated_total() == 1000


def test_hot_femto_borrows():
    utils = [0.0] * 24
    utils[5] = 1.0
    out = allocate_spectrum(0.0, utils)
    assert out.femto_allocated_khz[5] == pytest.approx(20.8333 + 500, abs=1e-3)
    assert out.allocated_total() == 1000


def test_allocation_rejects_bad_input():
    with pytest.raises(ValueError):
        allocate_spectrum(0.5, [0.5] * 3)
    with pytest.raises(ValueError):
        allocate_spectrum(1.5, [0.5] * 24)


@given(st.floats(0, 1), st.lists(st.floats(0, 1), min_size=24, max_size=24))
def test_allocation_conserves_and_covers_load(macro, utils):
    plan = SpectrumPlan()
    out = allocate_spectrum(macro, utils, plan)
    assert out.allocated_total() == Fraction(1000)
    assert sum(out.borrowing_ticks) == 0
    base = [plan.macro_allocated_khz] + plan.femto_allocated_khz
    alloc = [out.macro_allocated_khz] + out.femto_allocated_khz
    for load, b, a in zip([macro] + utils, base, alloc):
        assert a >= load * b - 1e-9


def test_plan_validation():
    with pytest.raises(ValueError):
        SpectrumPlan(n_femto=0)
    with pytest.raises(ValueError):
        SpectrumPlan(n_femto=2, borrowing_ticks=(1, 0, 0))
    with pytest.raises(ValueError):
        SpectrumPlan(macro_share_khz=1200)


def test_traffic_zero_rate():
    s = generate_femto_traffic(np.random.default_rng(0), 0.0, 24)
    assert s.active.sum() == 0
    assert np.all(utilization(s) == 0.0)


def test_utilization_values():
    s = TrafficState(active=[0, 18, 20])
    np.testing.assert_allclose(utilization(s), [0.0, 0.9, 1.0])
    with pytest.raises(ValueError):
        TrafficState(active=[21])


def test_busy_traffic_hits_cap():
    s = generate_femto_traffic(np.random.default_rng(1), 18.0, 1000)
    u = utilization(s)
    assert np.mean(u >= 0.9) > 0.2
    assert u.max() == 1.0


@pytest.mark.parametrize("lam", [0.5, 5.0, 18.0, 30.0])
def test_truncated_mean_oracle(lam):
    assert truncated_poisson_mean(lam) == pytest.approx(brute_truncated_mean(lam, 20), rel=1e-10)


def test_truncated_mean_sampling():
    s = generate_femto_traffic(np.random.default_rng(2), 5.0, 100_000)
    assert s.active.mean() == pytest.approx(truncated_poisson_mean(5.0), rel=0.01)


def test_macro_load_clipped():
    rng = np.random.default_rng(4)
    vals = [generate_macro_load(rng, 0.5, 2.0) for _ in range(500)]
    assert min(vals) == 0.0 and max(vals) == 1.0


def test_rows():
    s = TrafficState(active=[20, 0], macro_load=0.3)
    plan = allocate_spectrum(0.3, utilization(s), SpectrumPlan(n_femto=2))
    rows = spectrum_rows(s, plan)
    assert rows[0][0] == "macro"
    assert sum(r[3] for r in rows) == pytest.approx(1000.0)


@settings(max_examples=25)
@given(st.integers(1, 40), st.floats(0, 1), st.integers(0, 2 ** 16))
def test_conservation_any_size(n, macro, seed):
    rng = np.random.default_rng(seed)
    out = allocate_spectrum(macro, rng.uniform(0, 1, n), SpectrumPlan(n_femto=n))
    assert out.allocated_total() == 1000
