import math

import numpy as np
import pytest
from scipy import integrate

from schrokato import geometry, kernels, lattice, stochastics
from schrokato.kato import (
    NonIntegrableSingularity,
    RadialPotential,
    classify_potential,
    demuth_sandwich_violation,
    dynkin_functional,
    form_bound_check,
    kernel_potential_integral,
    khasminskii_constants,
    resolvent_functional,
    weighted_lq_bound,
    weighted_lq_norm,
)


@pytest.fixture(scope="module")
def e3():
    return geometry.ModelSpace.euclidean(3)


@pytest.fixture(scope="module")
def k3(e3):
    return kernels.make_kernel(e3)


@pytest.fixture(scope="module")
def coulomb(e3):
    return RadialPotential.coulomb(e3)


def lattice_kernel(rng, n=8, mask=None):
    g = lattice.random_connected_graph(n, rng)
    op = lattice.assemble_operator(g, dirichlet_mask=mask)
    return g, op, kernels.make_matrix_kernel(op)


def test_constant_potential_exact(k3, e3):
    c = RadialPotential.const(e3, 2.0)
    origin = e3.origin()
    assert dynkin_functional(k3, c, 0.3, [origin]) == pytest.approx(0.6, rel=1e-12)
    assert resolvent_functional(k3, c, 2.0, [origin]) == pytest.approx(1.0, rel=1e-12)


def test_coulomb_time_window_closed_form(k3, e3, coulomb):
    origin = e3.origin()
    for t in (0.01, 0.1, 1.0):
        val = dynkin_functional(k3, coulomb, t, [origin])
        assert val == pytest.approx(2 * math.sqrt(2 * t / math.pi), rel=1e-6)
    assert dynkin_functional(k3, coulomb, 0.1, [origin]) == pytest.approx(
        0.50462650440403201, rel=1e-6)


def test_coulomb_center_attains_sup(k3, e3, coulomb):
    center = dynkin_functional(k3, coulomb, 0.1, [e3.origin()])
    off = dynkin_functional(k3, coulomb, 0.1, [e3.point([0.7, 0.0, 0.0])])
    assert off <= center + 1e-12


def test_coulomb_resolvent_closed_form(k3, e3, coulomb):
    for r in (0.5, 1.0, 4.0):
        val = resolvent_functional(k3, coulomb, r, [e3.origin()])
        assert val == pytest.approx(math.sqrt(2.0 / r), rel=1e-8)


def test_green_potential_resolvent_scaling(k3, e3):
    # C_r of the space's own Coulomb potential scales like r^{-1/2}
    g = RadialPotential(e3.origin(), lambda r: 1.0 / (2 * math.pi * r),
                        singular_exponent=1.0, name="green")
    rs = np.array([0.5, 1.0, 2.0, 4.0, 8.0])
    cs = np.array([resolvent_functional(k3, g, r, [e3.origin()]) for r in rs])
    slope = np.polyfit(np.log(rs), np.log(cs), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.02)


def test_lattice_functionals_exact(rng):
    g, op, km = lattice_kernel(rng)
    probes = list(range(g.n))
    assert dynkin_functional(km, np.zeros(g.n), 1.0, probes) == 0.0
    w = rng.uniform(0, 2, g.n)
    # independent oracle: time quadrature of the heat semigroup action
    t = 0.9
    brute = max(integrate.quad(lambda s: float(np.real(op.expm(s) @ np.abs(w))[x]),
                               0.0, t, epsabs=1e-12)[0] for x in probes)
    assert dynkin_functional(km, w, t, probes) == pytest.approx(brute, abs=1e-9)
    r = 1.3
    brute_r = max(np.real(np.linalg.solve(op._matrix + r * np.eye(g.n), np.abs(w)))[x]
                  for x in probes)
    assert resolvent_functional(km, w, r, probes) == pytest.approx(brute_r, abs=1e-10)


def test_dynkin_monotone_and_subadditive(k3, e3, coulomb, rng):
    origin = e3.origin()
    ts = np.sort(rng.uniform(0.05, 1.0, 4))
    vals = [dynkin_functional(k3, coulomb, t, [origin]) for t in ts]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    for t1, t2 in [(0.1, 0.2), (0.5, 0.5)]:
        d12 = dynkin_functional(k3, coulomb, t1 + t2, [origin])
        d1 = dynkin_functional(k3, coulomb, t1, [origin])
        d2 = dynkin_functional(k3, coulomb, t2, [origin])
        assert d12 <= d1 + d2 + 1e-10


def test_demuth_sandwich(k3, e3, coulomb, rng):
    origin = e3.origin()
    consts = RadialPotential.const(e3, 1.5)
    assert demuth_sandwich_violation(k3, consts, [0.5, 2.0], [0.2, 1.0], [origin]) <= 1e-8
    assert demuth_sandwich_violation(k3, coulomb, [0.5, 2.0], [0.2, 1.0], [origin]) <= 1e-8
    g, op, km = lattice_kernel(rng)
    w = rng.uniform(0, 2, g.n)
    probes = list(range(g.n))
    assert demuth_sandwich_violation(km, w, [0.5, 2.0], [0.2, 1.0], probes) <= 1e-8


def test_resolvent_monotone_in_rate(k3, e3, coulomb):
    origin = e3.origin()
    vals = [resolvent_functional(k3, coulomb, r, [origin]) for r in (0.5, 1.0, 2.0)]
    assert vals[0] > vals[1] > vals[2]


def test_brownian_form_matches_dynkin(rng):
    g, op, km = lattice_kernel(rng, n=5)
    w = rng.uniform(0, 1.5, 5)
    t = 0.7
    exact = dynkin_functional(km, w, t, [1])
    est = stochastics.potential_occupation(g, w, t, 1, 20000, seed=14)
    assert abs(est.value - exact) <= 3 * est.stderr


def test_classification_verdicts(k3, e3, coulomb):
    origin = e3.origin()
    t_grid = np.geomspace(0.001, 1.0, 7)
    bounded = RadialPotential.const(e3, 0.7)
    assert classify_potential(k3, bounded, [origin], t_grid).verdict == "kato"
    rep = classify_potential(k3, coulomb, [origin], t_grid)
    assert rep.verdict == "kato"
    assert rep.fitted_exponent == pytest.approx(0.5, abs=0.02)
    # strong constant: never below 1 on the probed window, still finite
    big = RadialPotential.const(e3, 5000.0)
    rep_big = classify_potential(k3, big, [origin], np.geomspace(0.001, 1.0, 7))
    assert rep_big.verdict == "dynkin_only"


def test_one_dimensional_coulomb_flagged():
    e1 = geometry.ModelSpace.euclidean(1)
    k1 = kernels.make_kernel(e1)
    w = RadialPotential.coulomb(e1)
    rep = classify_potential(k1, w, [e1.origin()], np.geomspace(0.01, 1.0, 5))
    assert rep.verdict == "indeterminate"
    assert any("not integrable" in f for f in rep.flags)


def test_report_serializes(k3, e3, coulomb):
    rep = classify_potential(k3, coulomb, [e3.origin()], np.geomspace(0.001, 1.0, 5))
    d = rep.to_dict()
    assert d["verdict"] == "kato"
    assert len(d["curve"]) == 5
    import json
    json.dumps(d)


def test_khasminskii_constants():
    c1, c2 = khasminskii_constants(0.5, 0.25)
    assert c1 == pytest.approx(2.0, rel=1e-15)
    assert c2 == pytest.approx(2.7725887222397812, rel=1e-15)  # 4 log 2
    assert khasminskii_constants(0.0, 1.0) == (1.0, 0.0)
    assert khasminskii_constants(0.4, 1.0, delta=2.0) == pytest.approx(math.log(1 / 0.6))
    with pytest.raises(ValueError):
        khasminskii_constants(1.0, 0.25)
    with pytest.raises(ValueError):
        khasminskii_constants(0.6, 1.0, delta=2.0)


def test_form_bound(rng):
    g = lattice.random_connected_graph(8, rng)
    assert form_bound_check(g, np.zeros(8), 1.0, 50, rng) <= 0.0
    # constant potential: equality at the constant mode, never above
    viol_const = form_bound_check(g, np.full(8, 1.3), 1.0, 200, rng)
    assert -1e-12 <= viol_const <= 1e-10 or viol_const <= 1e-10
    for _ in range(5):
        gg = lattice.random_connected_graph(int(rng.integers(4, 10)), rng)
        w = rng.uniform(0, 3, gg.n)
        assert form_bound_check(gg, w, 1.0, 200, rng) <= 1e-10


def test_form_bound_constant_equality_at_ground_mode():
    # w = c, f = 1: lhs = c ||1||^2 and rhs = (c/r) (0 + r ||1||^2)
    g = lattice.path_graph(4)
    w = np.full(4, 2.0)
    op = lattice.assemble_operator(g)
    f = np.ones(4)
    from schrokato.kato import _lattice_resolvent
    cr = float(np.max(_lattice_resolvent(op, w, 1.0)))
    assert cr == pytest.approx(2.0, rel=1e-12)
    lhs = float(np.sum(g.mu * w * f**2))
    rhs = cr * (op.form(f) + 1.0 * float(np.sum(g.mu * f**2)))
    assert lhs == pytest.approx(rhs, rel=1e-14)


def test_doctored_form_constant_detected(rng):
    # the inequality must fail if C_r is undercut: checkers that cannot fail are bugs
    g = lattice.random_connected_graph(6, rng)
    w = rng.uniform(0.5, 2.0, 6)
    op = lattice.assemble_operator(g)
    from schrokato.kato import _lattice_resolvent
    cr = float(np.max(_lattice_resolvent(op, w, 1.0)))
    worst = -math.inf
    for _ in range(300):
        f = rng.standard_normal(6)
        lhs = float(np.sum(g.mu * w * f**2))
        rhs = 0.5 * cr * (op.form(f) + float(np.sum(g.mu * f**2)))
        worst = max(worst, lhs - rhs)
    assert worst > 0.0


def test_weighted_lq_norm_truncated_coulomb(e3):
    w1 = RadialPotential(e3.origin(), lambda r: 1.0 / r, singular_exponent=1.0,
                         cutoff=1.0, name="coulomb|B(0,1)")
    assert weighted_lq_norm(e3, w1, 2.0, 1.0) == pytest.approx(math.sqrt(4 * math.pi), rel=1e-10)


def test_weighted_lq_bound_probe_check(k3, e3):
    pair = kernels.make_control_pair(e3, "ultracontractive", C=(2 * math.pi) ** -1.5)
    w1 = RadialPotential(e3.origin(), lambda r: 1.0 / r, singular_exponent=1.0,
                         cutoff=1.0, name="coulomb|B(0,1)")
    probes = [e3.origin(), e3.point([0.5, 0.0, 0.0])]
    for u in (0.01, 0.1, 1.0):
        res = weighted_lq_bound(k3, w1, 2.0, pair, 0.3, u, probes)
        for lhs in res["lhs"]:
            assert lhs <= res["rhs"] * (1 + 1e-10)
    assert "Kato class" in res["conclusion"]


def test_weighted_lq_bound_zero_w1(k3, e3):
    pair = kernels.make_control_pair(e3, "ultracontractive", C=(2 * math.pi) ** -1.5)
    res = weighted_lq_bound(k3, None, 2.0, pair, 0.7, 0.5, [e3.origin()])
    assert res["rhs"] == pytest.approx(0.7)
    assert all(lhs <= 0.7 + 1e-12 for lhs in res["lhs"])
    assert "Kato" in res["conclusion"]


def test_weighted_lq_bound_inadmissible_exponent(k3, e3):
    pair = kernels.make_control_pair(e3, "ultracontractive", C=1.0)
    with pytest.raises(ValueError):
        weighted_lq_bound(k3, None, 1.0, pair, 0.0, 0.5, [e3.origin()])  # q' <= m/2
