import math
from dataclasses import replace

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from femtosim.analysis import (AnalysisParams, CapacityParams, QuadratureError, adaptive_simpson,
                               capacity_imperfect, capacity_perfect, capacity_relation_residual,
                               cell_averaged_outage, outage_at, outage_profile_literal,
                               sir_from_distances, worst_case_distances, worst_case_sir_formula)


def mp_outage(ratio, p):
    margin = p.threshold_sir_db - 10 * p.pathloss_exponent * mpmath.log10(ratio) + p.interference_margin_db
    return mpmath.erfc(margin / p.sigma_total_db / mpmath.sqrt(2)) / 2


def mp_cell_average(p):
    R, d0 = mpmath.mpf(p.cell_radius), mpmath.mpf(p.reference_distance)
    inner = mp_outage(1, p) * (d0 / R) ** 2
    outer = mpmath.quad(lambda r: mp_outage(r / d0, p) * 2 * r / R ** 2, [d0, R])
    return float(inner + outer)


# outage at a distance --------------------------------------------------------------

def test_outage_half_at_zero_margin():
    p = AnalysisParams()
    ratio = 10 ** (18 / 40)
    assert outage_at(ratio, p) == pytest.approx(0.5, abs=1e-12)


def test_outage_at_reference_distance():
    p = AnalysisParams()
    assert outage_at(1.0, p) == pytest.approx(float(mp_outage(1, p)), rel=1e-12)


@pytest.mark.parametrize("ratio", [1.0, 1.7, 3.0, 5.0])
@pytest.mark.parametrize("k", [4.0, 5.0])
def test_outage_matches_mpmath(ratio, k):
    p = AnalysisParams(pathloss_exponent=k)
    assert outage_at(ratio, p) == pytest.approx(float(mp_outage(ratio, p)), rel=1e-11)


def test_outage_tail():
    assert outage_at(1e6, AnalysisParams()) == pytest.approx(1.0, abs=1e-12)


def test_outage_rejects_ratio_below_one():
    with pytest.raises(ValueError):
        outage_at(0.99, AnalysisParams())
    with pytest.raises(ValueError):
        outage_at(np.array([1.0, math.nan]), AnalysisParams())


@given(st.floats(1, 50), st.floats(1, 50), st.floats(2, 6))
def test_outage_monotone_in_distance(a, b, k):
    p = AnalysisParams(pathloss_exponent=k)
    lo, hi = sorted((a, b))
    assert outage_at(lo, p) <= outage_at(hi, p)


@given(st.floats(1, 50), st.floats(2, 5.9))
def test_outage_monotone_in_exponent(ratio, k):
    lo = outage_at(ratio, AnalysisParams(pathloss_exponent=k))
    hi = outage_at(ratio, AnalysisParams(pathloss_exponent=k + 0.1))
    assert hi >= lo


def test_params_validation():
    with pytest.raises(ValueError):
        AnalysisParams(sigma_total_db=0)
    with pytest.raises(ValueError):
        AnalysisParams(cell_radius=50, reference_distance=100)


# cell average ------------------------------------------------------------------

@pytest.mark.parametrize("k", [4.0, 5.0])
def test_cell_average_matches_mpmath_quad(k):
    p = AnalysisParams(pathloss_exponent=k)
    assert cell_averaged_outage(p) == pytest.approx(mp_cell_average(p), abs=1e-8)


def test_cell_average_bounded_by_extremes():
    p = AnalysisParams()
    v = cell_averaged_outage(p)
    assert outage_at(1.0, p) <= v <= outage_at(p.cell_radius / p.reference_distance, p)


def test_cell_average_huge_sigma():
    assert cell_averaged_outage(AnalysisParams(sigma_total_db=1e9)) == pytest.approx(0.5, abs=1e-6)


def test_cell_average_k5_dominates():
    assert cell_averaged_outage(AnalysisParams(pathloss_exponent=5)) >= \
        cell_averaged_outage(AnalysisParams(pathloss_exponent=4))


def test_adaptive_simpson_polynomial_and_failure():
    assert adaptive_simpson(lambda x: x ** 3, 0, 2) == pytest.approx(4.0, abs=1e-12)
    with pytest.raises(QuadratureError):
        adaptive_simpson(lambda x: math.sin(1 / x) if x else 0.0, 0.0, 1.0, tol=1e-14, max_intervals=50)


# literal profile -----------------------------------------------------------------

def test_literal_profile_overflows_at_default_sigma():
    with pytest.raises(ArithmeticError):
        outage_profile_literal(1.0, AnalysisParams())


def test_literal_profile_finite_for_small_sigma():
    p = AnalysisParams(sigma_total_db=2.0)
    v = outage_profile_literal(1.0, p)
    assert math.isfinite(v)
    # term-by-term evaluation of the closed form
    s2 = 4.0
    bracket = 2 * math.pi * math.exp((-18 + math.exp((s2 / 2) ** 2 / 2)) / s2) - math.sqrt(2 * math.pi)
    assert v == pytest.approx((math.exp(-0.5) - math.exp(-0.5)) * bracket, abs=1e-12)
    assert math.isfinite(outage_profile_literal(2.0, p, form="boundary"))
    with pytest.raises(ValueError):
        outage_profile_literal(2.0, p, form="edge")
    with pytest.raises(ValueError):
        outage_profile_literal(0.5, p)


# worst-case S/I ----------------------------------------------------------------

def test_worst_case_formula():
    assert worst_case_sir_formula(4.6) == pytest.approx(54.3243, rel=1e-5)
    assert 10 * math.log10(worst_case_sir_formula(4.6)) == pytest.approx(17.35, abs=0.01)
    assert worst_case_sir_formula(1e4) > 1e14
    with pytest.raises(ValueError):
        worst_case_sir_formula(1.0)


def test_sir_from_distances():
    assert sir_from_distances(1.0, [1.0]) == 1.0
    assert sir_from_distances(500.0, [4.6 * 500] * 6) == pytest.approx(4.6 ** 4 / 6, rel=1e-12)
    s = sir_from_distances(1.0, worst_case_distances(4.6))
    brute = 1 / sum(d ** -4 for d in (3.6, 3.6, 4.1, 4.6, 5.1, 5.6))
    assert s == pytest.approx(brute, rel=1e-14)
    assert s == pytest.approx(49.56, rel=0.005)
    with pytest.raises(ValueError):
        sir_from_distances(1.0, [])
    with pytest.raises(ValueError):
        sir_from_distances(1.0, [0.0])


@given(st.floats(0.1, 1e4), st.lists(st.floats(0.5, 20), min_size=1, max_size=10))
def test_sir_scale_invariant(R, rel):
    a = sir_from_distances(1.0, rel)
    b = sir_from_distances(R, [R * r for r in rel])
    assert b == pytest.approx(a, rel=1e-9)


# capacity ----------------------------------------------------------------------

def test_capacity_perfect_arithmetic():
    p = CapacityParams(processing_gain_gp=256, ebio_db=10, snr_db=26, reuse_efficiency_nf=1.0)
    assert capacity_perfect(p) == pytest.approx(1 + 25.6 - 10 ** -2.6, rel=1e-12)


def test_capacity_perfect_unit_ratio():
    p = CapacityParams(processing_gain_gp=10.0, ebio_db=10.0, snr_db=300.0)
    assert capacity_perfect(p) == pytest.approx(1 + p.reuse_efficiency_nf)


def test_capacity_imperfect_arithmetic():
    p = CapacityParams()
    expected = 1 + 10 ** -0.1 * 0.65 * (3 * 256 / 10 ** 0.7 - 10 ** -2.6) / 0.05
    assert capacity_imperfect(p) == pytest.approx(expected, rel=1e-12)


def test_capacity_orderings():
    p = CapacityParams()
    by_cd = [capacity_imperfect(replace(p, pce_cd_db=c)) for c in (1, 2, 3)]
    by_sf = [capacity_imperfect(replace(p, source_activity_sf=s)) for s in (0.01, 0.02, 0.05)]
    by_eb = [capacity_perfect(replace(p, ebio_db=e)) for e in (1, 5, 10)]
    for seq in (by_cd, by_sf, by_eb):
        assert all(a > b for a, b in zip(seq, seq[1:]))


@given(st.floats(1, 6), st.floats(16, 4096), st.floats(0.1, 1), st.floats(0.01, 1),
       st.floats(0, 20), st.floats(0, 40))
@settings(max_examples=60)
def test_capacity_identity_at_zero_cd(q, gp, nf, sf, eb, snr):
    p = CapacityParams(sectors_q=q, processing_gain_gp=gp, reuse_efficiency_nf=nf,
                       source_activity_sf=sf, ebio_db=eb, snr_db=snr)
    scale = nf * gp * q / 10 ** (eb / 10)
    assert abs(capacity_relation_residual(p)) <= 1e-9 * max(1.0, scale)


@given(st.floats(0.01, 10))
def test_capacity_cd_degrades(cd):
    p = CapacityParams()
    assert capacity_imperfect(replace(p, pce_cd_db=cd)) < capacity_imperfect(replace(p, pce_cd_db=0.0))


def test_capacity_validation():
    with pytest.raises(ValueError):
        CapacityParams(source_activity_sf=0)
    with pytest.raises(ValueError):
        CapacityParams(source_activity_sf=1.5)
    with pytest.raises(ValueError):
        CapacityParams(pce_cd_db=-1)
