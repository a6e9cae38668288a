import random

import numpy as np
import pytest

from helpers import (
    oracle_capacity,
    oracle_min_power,
    random_connected_space,
    random_edge_walk,
    random_function,
)
from modcalc import (
    capacity,
    connecting_family,
    cycle_space,
    equivalence_report,
    explicit_family,
    grid_space,
    h_gradient_sequence,
    hop_slope_density,
    is_upper_gradient,
    lp_norm,
    make_curve,
    n_gradient,
    optimal_plan,
    modulus,
    path_space,
    ug_calculus,
    w_certificate,
)
from modcalc.modulus import admissibility_matrix
from modcalc.plans import point_mass
from modcalc.space import MetricMeasureSpace


@pytest.fixture
def path3():
    return path_space(3)


@pytest.fixture
def subpaths3(path3):
    return connecting_family(path3, path3.vertices, path3.vertices, 2, simple_only=True)


RAMP = {"0": 0.0, "1": 1.0, "2": 2.0}


def test_n_gradient_constant(path3, subpaths3):
    const = {v: 5.0 for v in path3.vertices}
    res = n_gradient(path3, const, subpaths3, 2.0)
    assert res.value == 0.0 and res.p_norm == 0.0 and res.converged


def test_n_gradient_benchmark(path3, subpaths3):
    res = n_gradient(path3, RAMP, subpaths3, 2.0, 1e-8)
    assert res.rho["0"] == pytest.approx(2.0 / 3.0, abs=1e-6)
    assert res.rho["1"] == pytest.approx(4.0 / 3.0, abs=1e-6)
    assert res.rho["2"] == pytest.approx(2.0 / 3.0, abs=1e-6)
    assert res.value == pytest.approx(8.0 / 3.0, rel=1e-6)
    ok, _ = is_upper_gradient(path3, RAMP, res.rho, subpaths3, tol=1e-9)
    assert ok


def test_n_gradient_p1_lp(path3):
    one_hop = connecting_family(path3, path3.vertices, path3.vertices, 1)
    res = n_gradient(path3, RAMP, one_hop, 1.0, 1e-6)
    assert res.value == pytest.approx(2.0, rel=1e-4)


def test_n_gradient_against_scipy():
    rng = random.Random(211)
    for _ in range(6):
        s = random_connected_space(rng, rng.randint(4, 9), extra_edges=2)
        f = random_function(rng, s)
        curves = [random_edge_walk(rng, s, 4) for _ in range(rng.randint(2, 7))]
        fam = explicit_family(curves)
        p = rng.choice((1.5, 2.0, 3.0))
        res = n_gradient(s, f, fam, p, 1e-8)
        A, cs = admissibility_matrix(s, fam, 0)
        rhs = np.array([abs(f[c.end] - f[c.start]) for c in cs])
        keep = rhs > 0
        if not keep.any():
            assert res.value == 0.0
            continue
        want, _ = oracle_min_power(A[keep], rhs[keep], s.measure_vector(), p)
        assert res.value == pytest.approx(want, rel=1e-4, abs=1e-10)


def test_n_gradient_scaling_exact(path3, subpaths3):
    base = n_gradient(path3, RAMP, subpaths3, 2.0, 1e-8)
    for lam in (-3.0, 0.5, 2.0):
        scaled = n_gradient(
            path3, {v: lam * RAMP[v] for v in path3.vertices}, subpaths3, 2.0, 1e-8
        )
        assert scaled.p_norm == pytest.approx(abs(lam) * base.p_norm, rel=1e-12)
        for v in path3.vertices:
            assert scaled.rho[v] == pytest.approx(abs(lam) * base.rho[v], rel=1e-12)


def test_n_gradient_triangle_inequality():
    rng = random.Random(223)
    for _ in range(8):
        s = random_connected_space(rng, rng.randint(4, 8))
        fam = connecting_family(s, s.vertices, s.vertices, 3)
        f, g = random_function(rng, s), random_function(rng, s)
        p = rng.choice((1.5, 2.0, 3.0))
        tol = 1e-7
        rf = n_gradient(s, f, fam, p, tol)
        rg = n_gradient(s, g, fam, p, tol)
        rfg = n_gradient(
            s, {v: f[v] + g[v] for v in s.vertices}, fam, p, tol
        )
        slack = 2 * tol * max(1.0, rf.p_norm + rg.p_norm)
        assert rfg.p_norm <= rf.p_norm + rg.p_norm + slack


def test_n_gradient_locality():
    # f = g on every vertex touched by a subfamily: the zero density extended
    # by the gradient of f - g off those vertices is feasible on the subfamily
    rng = random.Random(227)
    s = random_connected_space(rng, 8, extra_edges=2)
    f = random_function(rng, s)
    g = dict(f)
    far = s.vertices[-1]
    g[far] = f[far] + 1.0  # differ only at one vertex
    fam = connecting_family(s, s.vertices, s.vertices, 2)
    touched_ok = [c for c in fam if far not in c.vertices]
    diff = {v: f[v] - g[v] for v in s.vertices}
    zero = {v: 0.0 for v in s.vertices}
    ok, _ = is_upper_gradient(s, diff, zero, explicit_family(touched_ok))
    assert ok


def test_n_gradient_minimality_lattice_hop_level():
    # for hop-level feasible pairs the pointwise min stays feasible, so the
    # solver value is at or below the min's energy
    rng = random.Random(229)
    for _ in range(8):
        s = random_connected_space(rng, rng.randint(4, 8))
        f = random_function(rng, s)
        fam = connecting_family(s, s.vertices, s.vertices, 3)
        p = rng.choice((1.5, 2.0, 3.0))
        base = hop_slope_density(s, f, fam)
        rho1 = {v: base[v] + rng.uniform(0.0, 1.0) for v in s.vertices}
        rho2 = {v: base[v] + rng.uniform(0.0, 1.0) for v in s.vertices}
        mn = {v: min(rho1[v], rho2[v]) for v in s.vertices}
        ok, _ = is_upper_gradient(s, f, mn, fam)
        assert ok
        res = n_gradient(s, f, fam, p, 1e-7)
        energy_min = sum(mn[v] ** p * s.measure[v] for v in s.vertices)
        assert res.value <= energy_min + 1e-7 * max(1.0, energy_min)


def test_n_gradient_stability():
    # values move continuously with the data, with certified transfer bounds
    rng = random.Random(233)
    s = random_connected_space(rng, 7, extra_edges=1)
    fam = connecting_family(s, s.vertices, s.vertices, 2)
    f = random_function(rng, s)
    p = 2.0
    base = n_gradient(s, f, fam, p, 1e-8)
    for n in range(1, 6):
        pert = {v: f[v] + rng.uniform(-1.0, 1.0) * 2.0**-n for v in s.vertices}
        res = n_gradient(s, pert, fam, p, 1e-8)
        shift = max(abs(pert[v] - f[v]) for v in s.vertices)
        # transfer: rho feasible for f becomes feasible for pert after adding
        # the gradient of the (shift-bounded) difference
        diff = {v: pert[v] - f[v] for v in s.vertices}
        rdiff = n_gradient(s, diff, fam, p, 1e-8)
        assert res.p_norm <= base.p_norm + rdiff.p_norm + 1e-6
        assert base.p_norm <= res.p_norm + rdiff.p_norm + 1e-6
        if n == 5:
            assert abs(res.p_norm - base.p_norm) <= rdiff.p_norm + 1e-6


def test_ug_calculus_rules(path3, subpaths3):
    f = RAMP
    g = {"0": 1.0, "1": 0.0, "2": 1.0}
    rho_f = hop_slope_density(path3, f, subpaths3)
    rho_g = hop_slope_density(path3, g, subpaths3)
    report = ug_calculus(
        path3, f, g, rho_f, rho_g, lambda t: 2.0 * t, subpaths3
    )
    assert report["sum"]["ok"]
    assert report["chain"]["ok"] and report["chain"]["lip_phi"] == pytest.approx(2.0)
    assert report["leibniz"]["ok"]
    assert report["min"]["ok"]

    # identity chain reduces to the original check
    report_id = ug_calculus(path3, f, g, rho_f, rho_g, lambda t: t, subpaths3)
    assert report_id["chain"]["ok"] and report_id["chain"]["lip_phi"] == 1.0

    with pytest.raises(ValueError):
        zero = {v: 0.0 for v in path3.vertices}
        ug_calculus(path3, f, g, zero, rho_g, lambda t: t, subpaths3)


def test_ug_calculus_random():
    rng = random.Random(239)
    for _ in range(10):
        s = random_connected_space(rng, rng.randint(4, 8))
        fam = connecting_family(s, s.vertices, s.vertices, 3)
        f, g = random_function(rng, s), random_function(rng, s)
        rho_f = {
            v: x + rng.uniform(0.0, 0.5)
            for v, x in hop_slope_density(s, f, fam).items()
        }
        rho_g = {
            v: x + rng.uniform(0.0, 0.5)
            for v, x in hop_slope_density(s, g, fam).items()
        }
        a, b = rng.uniform(-2, 2), rng.uniform(0, 2)
        report = ug_calculus(s, f, g, rho_f, rho_g, lambda t: a * t + b * abs(t), fam)
        assert all(entry["ok"] for entry in report.values())


def test_h_sequence_exact_on_benchmark(path3, subpaths3):
    grad, steps = h_gradient_sequence(path3, RAMP, 2.0, subpaths3, n_steps=3)
    assert all(s.exact for s in steps)
    assert all(s.slope_bounded for s in steps)
    assert steps[-1].f_err == 0.0


def test_h_sequence_zero_slack_step(path3, subpaths3):
    grad, steps = h_gradient_sequence(
        path3, RAMP, 2.0, subpaths3, sigmas=[0.0]
    )
    assert len(steps) == 1 and steps[0].sigma == 0.0
    assert steps[0].exact and steps[0].f_err == 0.0


def test_h_sequence_constant_positive(path3, subpaths3):
    const = {v: 5.0 for v in path3.vertices}
    grad, steps = h_gradient_sequence(path3, const, 2.0, subpaths3, n_steps=2)
    for s in steps:
        assert s.exact and s.f_err == 0.0 and s.slope_err == 0.0


def test_h_sequence_monotone_in_slack(path3):
    # under-constrained family: relaxed functions sit below f and decrease
    # pointwise as the slack shrinks
    one_hop = explicit_family([make_curve(path3, ["0", "1"])])
    f = {"0": 0.0, "1": 1.0, "2": 2.0}
    grad, steps = h_gradient_sequence(
        path3, f, 2.0, one_hop, n_steps=3, delta=2.0, cap=2.0
    )
    for s in steps:
        for v in path3.vertices:
            assert s.f_n[v] <= f[v] + 1e-12
    for earlier, later in zip(steps, steps[1:]):
        for v in path3.vertices:
            assert later.f_n[v] <= earlier.f_n[v] + 1e-12


def test_h_sequence_grid_errors_nonincreasing():
    rng = random.Random(241)
    g = grid_space(5, 5)
    f = {v: rng.uniform(0.0, 2.0) for v in g.vertices}
    from modcalc.sobolev import _harness_family

    fam = _harness_family(g, 2, g.max_edge_distance())
    grad, steps = h_gradient_sequence(g, f, 2.0, fam, n_steps=4)
    errs = [s.f_err for s in steps]
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))
    assert all(s.exact for s in steps)


def test_w_certificate(path3, subpaths3):
    f = RAMP
    res = n_gradient(path3, f, subpaths3, 2.0, 1e-8)
    plan = point_mass(make_curve(path3, ["0", "1", "2"]))
    report = w_certificate(path3, f, res.rho, [plan])
    assert report["max_violation"] <= 1e-9

    zero = {v: 0.0 for v in path3.vertices}
    report_zero = w_certificate(path3, f, zero, [plan])
    assert report_zero["max_violation"] > 0.5

    mod = modulus(path3, subpaths3, 2.0, 0, 1e-8)
    oplan = optimal_plan(mod, subpaths3)
    report_dual = w_certificate(path3, f, res.rho, [oplan])
    assert report_dual["max_violation"] <= 1e-7

    with pytest.raises(ValueError):
        w_certificate(path3, f, zero, [])


def test_capacity_isolated_vertex():
    iso = MetricMeasureSpace(["v"], [], {"v": 3.0})
    res = capacity(iso, ["v"], explicit_family([]), 2.0)
    assert res.value == pytest.approx(3.0)
    assert res.f["v"] == pytest.approx(1.0)


def test_capacity_empty_set(path3, subpaths3):
    res = capacity(path3, [], subpaths3, 2.0)
    assert res.value == 0.0


def test_capacity_monotone_and_truncation(path3, subpaths3):
    tol = 1e-7
    small = capacity(path3, ["0"], subpaths3, 2.0, tol)
    large = capacity(path3, ["0", "2"], subpaths3, 2.0, tol)
    assert small.value <= large.value + 1e-5
    trunc = capacity(path3, ["0"], subpaths3, 2.0, tol, truncated=True)
    assert trunc.value == pytest.approx(small.value, abs=2 * tol * max(1, small.value))
    for v in path3.vertices:
        assert -1e-12 <= trunc.f[v] <= 1.0 + 1e-12
    assert small.f["0"] >= 1.0 - 1e-9


def test_capacity_against_scipy():
    rng = random.Random(251)
    for _ in range(5):
        s = random_connected_space(rng, rng.randint(3, 6))
        fam = connecting_family(s, s.vertices, s.vertices, 2)
        E = rng.sample(s.vertices, rng.randint(1, 2))
        p = rng.choice((1.5, 2.0))
        truncated = rng.choice((False, True))
        res = capacity(s, E, fam, p, 1e-7, truncated)
        want = oracle_capacity(s, E, list(fam), p, truncated)
        assert res.value == pytest.approx(want, rel=2e-4, abs=1e-6)


def test_capacity_p1(path3, subpaths3):
    res = capacity(path3, ["0"], subpaths3, 1.0, 1e-5)
    want = oracle_capacity(path3, ["0"], list(subpaths3), 1.0, False)
    assert res.value == pytest.approx(want, rel=1e-3, abs=1e-5)


def test_equivalence_report_constant(path3):
    rep = equivalence_report(path3, {v: 1.0 for v in path3.vertices}, 2.0)
    assert rep["constant"]
    assert rep["n_norm"] == 0.0 and rep["w_max_violation"] == 0.0


def test_equivalence_report_benchmark(path3):
    rep = equivalence_report(path3, RAMP, 2.0, max_hops=2, tol=1e-7)
    assert rep["n_value"] == pytest.approx(8.0 / 3.0, rel=1e-6)
    assert rep["h_exact"] and rep["h_slope_bounded"]
    assert rep["w_max_violation"] <= 1e-6
    for entry in rep["subfamilies"]:
        if entry["duality_product"] is not None:
            assert entry["duality_product"] == pytest.approx(1.0, abs=1e-4)


def test_equivalence_report_cycle():
    s = cycle_space(4)
    f = {v: s.distance("0", v) for v in s.vertices}
    rep = equivalence_report(s, f, 2.0, max_hops=3, tol=1e-7)
    assert rep["h_exact"]
    assert rep["w_max_violation"] <= 1e-6
    assert rep["n_value"] > 0
