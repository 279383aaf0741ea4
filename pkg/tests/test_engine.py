import math

import numpy as np
import pytest

from femtosim.engine import (ALL_VARIANTS, OutageEstimate, Variant, _femto_counts,
                             _macro_counts, capacity_comparison, density_tradeoff,
                             estimate_femto_outage, estimate_macro_outage, monte_carlo_counts,
                             sweep, traffic_snapshots, trial_normals)

import toy

FAST = {"run.trials": 3000}


@pytest.fixture(scope="module")
def fast(scenario):
    return scenario.with_overrides(FAST)


def test_trial_normals_prefix_and_independence():
    a = trial_normals(1, 1, 5, 10)
    b = trial_normals(1, 1, 5, 40)
    np.testing.assert_array_equal(a, b[:10])
    assert not np.array_equal(a, trial_normals(1, 1, 6, 10))
    assert not np.array_equal(a, trial_normals(2, 1, 5, 10))
    assert not np.array_equal(a, trial_normals(1, 2, 5, 10))


def test_counts_match_trial_by_trial():
    def kernel(z):
        return z[:, 0] > 0.3
    n = 5000
    expected = sum(trial_normals(4, 9, i, 1)[0] > 0.3 for i in range(n))
    assert monte_carlo_counts(kernel, 1, n, 4, 9)[0] == expected


def test_counts_validation():
    with pytest.raises(ValueError):
        monte_carlo_counts(lambda z: z[:, 0] > 0, 1, 0, 1, 1)


def test_toy_enumeration_oracle():
    exact = toy.exact_outage()
    assert 0.05 < exact < 0.95
    n = 40_000
    c = monte_carlo_counts(toy.kernel, toy.WIDTH, n, 3, 77)[0]
    p = c / n
    assert abs(p - exact) <= 3 * math.sqrt(exact * (1 - exact) / n)


def test_estimate_from_counts():
    e = OutageEstimate.from_counts(25, 100, "h", 3)
    assert e.p_hat == 0.25
    assert e.stderr == pytest.approx(math.sqrt(0.25 * 0.75 / 100))


def test_no_interference_no_macro_outage(fast):
    sc = fast.with_overrides({"n_femto": 0, "macro_users": 0, "out_of_cell_mean_dbm": -300})
    assert estimate_macro_outage(sc).p_hat == 0.0


def test_no_interference_no_femto_outage(fast):
    sc = fast.with_overrides({"n_macro_interferers": 0, "femto_users": 0})
    assert estimate_femto_outage(sc).p_hat == 0.0


def test_femto_outage_needs_a_femto(fast):
    with pytest.raises(ValueError):
        estimate_femto_outage(fast.with_overrides({"n_femto": 0}))


def test_estimates_are_deterministic(fast):
    a, b = estimate_macro_outage(fast), estimate_macro_outage(fast)
    assert a == b
    assert a.fingerprint == fast.fingerprint()


def test_workers_do_not_change_counts(scenario):
    sc = scenario.with_overrides({"run.trials": 9000})
    serial = _macro_counts(sc, ALL_VARIANTS)
    parallel = _macro_counts(sc.with_overrides({"run.workers": 4}), ALL_VARIANTS)
    np.testing.assert_array_equal(serial, parallel)
    np.testing.assert_array_equal(_femto_counts(sc, ALL_VARIANTS),
                                  _femto_counts(sc.with_overrides({"run.workers": 3}), ALL_VARIANTS))


def test_variant_counts_match_single_estimates(fast):
    counts = _macro_counts(fast, ALL_VARIANTS)
    for v, c in zip(ALL_VARIANTS, counts):
        sc = fast.with_overrides({"sectors.n_sectors": v.n_sectors, "outage.cpc": v.cpc})
        assert estimate_macro_outage(sc).outages == c


def test_macro_outage_monotone_in_femto_count(fast):
    prev = None
    for n in range(0, 25, 4):
        c = _macro_counts(fast.with_overrides({"n_femto": n}), ALL_VARIANTS)
        if prev is not None:
            assert np.all(c >= prev)
        prev = c


def test_femto_outage_monotone_in_interferers(fast):
    plain = [v for v in ALL_VARIANTS if not v.cpc]
    prev = None
    for m in (0, 5, 15, 30, 50):
        c = _femto_counts(fast.with_overrides({"n_macro_interferers": m}), plain)
        if prev is not None:
            assert np.all(c >= prev)
        prev = c


def test_orderings(fast):
    c = dict(zip([v.label for v in ALL_VARIANTS], _macro_counts(fast, ALL_VARIANTS)))
    assert c["omni"] > c["120"] > c["90"]
    for s in ("omni", "120", "90"):
        assert c[s + "+cpc"] <= c[s]
    f = dict(zip([v.label for v in ALL_VARIANTS], _femto_counts(fast, ALL_VARIANTS)))
    assert f["90+cpc"] < f["omni"]


def test_sweep_sector_mode(fast):
    rep = sweep(fast, "sector_mode", ["omni", "120", "90"])
    p = [pt.estimate.p_hat for pt in rep.points]
    assert [pt.value for pt in rep.points] == ["omni", "120", "90"]
    assert p[0] > p[1] > p[2]


def test_sweep_cpc_and_femto_count(fast):
    rep = sweep(fast, "cpc_on_off", ["off", "on"])
    assert rep.estimate("on").p_hat <= rep.estimate("off").p_hat
    rep = sweep(fast, "femto_count", [1, 24])
    assert len(rep.points) == 2 * len(ALL_VARIANTS)
    assert rep.estimate(24, "omni").p_hat >= rep.estimate(1, "omni").p_hat
    assert len(rep.series("90+cpc")) == 2


def test_sweep_macro_interferers_defaults_to_femto(fast):
    rep = sweep(fast, "macro_interferers", [25, 50])
    assert rep.points[0].tier == "femto"
    assert rep.estimate(50, "omni").p_hat > rep.estimate(25, "omni").p_hat


def test_sweep_errors(fast):
    with pytest.raises(ValueError):
        sweep(fast, "bogus", [1])
    with pytest.raises(ValueError):
        sweep(fast, "femto_count", [])
    with pytest.raises(ValueError):
        sweep(fast, "cpc_on_off", ["maybe"])


def test_report_dict_has_no_wall_time(fast):
    rep = sweep(fast, "sector_mode", ["omni"])
    d = rep.to_dict()
    assert "wall_time_s" not in d
    assert d["outage"][0]["variant"] == "omni"


def test_capacity_comparison(scenario):
    rows = capacity_comparison(scenario, [1, 3, 5, 7, 10])
    for tier in ("macro", "femto"):
        sub = [r for r in rows if r["tier"] == tier]
        assert all(r["perfect"] >= r["imperfect"] for r in sub)
        for key in ("perfect", "imperfect"):
            vals = [r[key] for r in sub]
            assert all(a > b for a, b in zip(vals, vals[1:]))
    femto = [r["improvement"] for r in rows if r["tier"] == "femto"]
    macro = [r["improvement"] for r in rows if r["tier"] == "macro"]
    assert min(femto) >= max(macro)
    flat = scenario.with_overrides({"capacity_macro.pce_cd_db": 0.0})
    assert all(r["perfect"] == r["imperfect"] for r in capacity_comparison(flat) if r["tier"] == "macro")


def test_density_tradeoff(scenario):
    sc = scenario.with_overrides({"run.trials": 2000})
    pts = density_tradeoff(sc, [0.0, 0.25, 0.5, 1.0])
    adm = [p.admissible_macro_users if p.admissible_macro_users is not None else -1 for p in pts]
    assert adm[0] == max(adm)
    assert all(a >= b for a, b in zip(adm, adm[1:]))
    hi = density_tradeoff(sc.with_overrides({"power_ratio": 100.0}), [0.25])[0]
    assert hi.admissible_macro_users >= pts[1].admissible_macro_users
    assert {p.status for p in pts} <= {"ok", "saturated", "infeasible"}


def test_density_saturated(scenario):
    sc = scenario.with_overrides({"run.trials": 500, "phi_macro": 1.0, "phi_femto": 1.0})
    p = density_tradeoff(sc, [1.0], max_macro_users=5)[0]
    assert p.status == "saturated" and p.admissible_macro_users == 5


def test_traffic_snapshots(scenario):
    sc = scenario.with_overrides({"traffic.rounds": 20})
    rows = traffic_snapshots(sc)
    assert rows == traffic_snapshots(sc)
    for r in range(20):
        alloc = sum(row[6] for row in rows if row[0] == r)
        assert alloc == pytest.approx(1000.0, abs=1e-9)
    assert all(0 <= row[2] <= 20 for row in rows if row[1] != "macro")


def test_variant_label():
    assert Variant(4, True).label == "90+cpc"
    assert Variant().label == "omni"
