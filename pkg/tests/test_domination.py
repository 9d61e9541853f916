import math

import numpy as np
import pytest

from conftest import random_bundle_instance, random_unitary
from schrokato import geometry, kernels, lattice
from schrokato.domination import (
    ComparisonPreconditionError,
    DisconnectedGraphError,
    check_diamagnetic_bottom,
    check_domain_monotonicity,
    check_domain_monotonicity_lattice,
    check_hsu_direction,
    check_kato_simon,
    check_lq_bounds,
    check_positivity,
    check_trotter_domination,
    lq_comparison_slack,
)
from schrokato.lattice import (
    BundleData,
    PotentialField,
    assemble_operator,
    attach_gauge,
    cycle_graph,
    path_graph,
    random_connected_graph,
)
from schrokato.semigroup import operator_lq_norm

TOL = 1e-10


def flux_pi_ops():
    g = cycle_graph(4)
    angles = {(i, (i + 1) % 4): math.pi / 4 for i in range(4)}
    b = attach_gauge(g, 1, "u1_from_angles", angles=angles)
    return assemble_operator(g, b), assemble_operator(g)


def test_kato_simon_trivial_equality(rng):
    g = random_connected_graph(5, rng)
    w = rng.uniform(-0.5, 1.0, 5)
    opV = assemble_operator(g, BundleData(g, 1), PotentialField.scalar(w))
    opw = assemble_operator(g, potential=PotentialField.scalar(w))
    # equality for nonnegative sections
    E = np.real(opV.expm(1.0))
    f = rng.uniform(0.1, 1.0, 5)
    assert np.allclose(np.abs(E @ f), E @ np.abs(f), atol=1e-12)
    assert check_kato_simon(opV, opw, 1.0, 100, rng) <= 1e-12


def test_kato_simon_flux_cycle(rng):
    opV, opw = flux_pi_ops()
    assert check_kato_simon(opV, opw, 1.0, 100, rng) <= TOL


def test_kato_simon_random_bundles(rng):
    for _ in range(10):
        _, _, _, opV, opw = random_bundle_instance(rng)
        assert check_kato_simon(opV, opw, float(rng.uniform(0.2, 2.0)), 20, rng) <= TOL


def test_kato_simon_precondition_refused(rng):
    graph, bundle, V, opV, _ = random_bundle_instance(rng)
    bad_w = PotentialField.scalar(V.min_eigenvalues().real + 0.5)
    op_bad = assemble_operator(graph, potential=bad_w)
    with pytest.raises(ComparisonPreconditionError, match="V >= w fails"):
        check_kato_simon(opV, op_bad, 1.0, 5, rng)


def test_kato_simon_negative_control(rng):
    # bypassing the gate on a broken hypothesis must surface a positive violation
    graph, bundle, V, opV, _ = random_bundle_instance(rng, v_scale=0.3)
    bad_w = PotentialField.scalar(V.min_eigenvalues().real + 2.0)
    op_bad = assemble_operator(graph, potential=bad_w)
    viol = check_kato_simon(opV, op_bad, 1.5, 50, rng, precondition_tol=10.0)
    assert viol > 0.0


def test_diamagnetic_bottom_examples(rng):
    opV, opw = flux_pi_ops()
    assert check_diamagnetic_bottom(opV, opw) == pytest.approx(1 - math.sqrt(2) / 2, abs=1e-12)
    g = random_connected_graph(5, rng)
    w = rng.uniform(0, 1, 5)
    same = assemble_operator(g, BundleData(g, 1), PotentialField.scalar(w))
    scalar = assemble_operator(g, potential=PotentialField.scalar(w))
    assert check_diamagnetic_bottom(same, scalar) == pytest.approx(0.0, abs=1e-12)


def test_diamagnetic_tree_gauge_trivial(rng):
    g = path_graph(6)
    angles = {e: float(rng.uniform(-math.pi, math.pi)) for e in g.edges}
    b = attach_gauge(g, 1, "u1_from_angles", angles=angles)
    opV = assemble_operator(g, b)
    opw = assemble_operator(g)
    assert abs(check_diamagnetic_bottom(opV, opw)) <= TOL


def test_diamagnetic_random_instances(rng):
    for _ in range(10):
        _, _, _, opV, opw = random_bundle_instance(rng)
        assert check_diamagnetic_bottom(opV, opw) >= -TOL


def test_positivity(rng):
    op = assemble_operator(path_graph(2))
    min_entry, gap, ground = check_positivity(op, 1.0)
    assert min_entry == pytest.approx(0.31606027941427884, rel=1e-12)
    assert gap == pytest.approx(1.0, rel=1e-12)
    assert np.all(ground > 0)
    for _ in range(10):
        g = random_connected_graph(int(rng.integers(3, 10)), rng)
        w = PotentialField.scalar(rng.uniform(0, 1, g.n))
        me, gp, gr = check_positivity(assemble_operator(g, potential=w), 0.5)
        assert me > 0 and gp > 1e-12 and np.all(gr > 0)


def test_positivity_disconnected_flagged():
    g = lattice.WeightedGraph(4, np.ones(4), {(0, 1): 1.0, (2, 3): 1.0})
    op = assemble_operator(g)
    # off-block entries are exactly zero
    assert np.min(np.real(op.expm(1.0))) == 0.0
    with pytest.raises(DisconnectedGraphError):
        check_positivity(op, 1.0)


def test_lq_bounds(rng):
    g = random_connected_graph(10, rng)
    op = assemble_operator(g)
    U = list(range(5))
    # (1, inf) attains the constant exactly
    assert check_lq_bounds(op, 0.7, U, 1, math.inf) == pytest.approx(0.0, abs=1e-13)
    assert check_lq_bounds(op, 0.7, U, 2, 2) >= -TOL  # contraction
    for pair in [(1, 2), (2, math.inf), (1, 1)]:
        assert check_lq_bounds(op, 0.7, U, *pair) >= -TOL
    with pytest.raises(ValueError):
        check_lq_bounds(op, 0.7, U, 2, 1)


def test_lq_negative_control(rng):
    # negative potential breaks the contraction hypothesis and the bound
    g = path_graph(3)
    op = assemble_operator(g, potential=PotentialField.scalar(np.full(3, -1.0)))
    E = op.expm(1.0)
    assert operator_lq_norm(op, E, 2, 2) > 1.0 + 1e-6
    assert check_lq_bounds(op, 1.0, [0, 1, 2], 1, 1) < 0.0


def test_domain_monotonicity_continuum():
    interval = geometry.ModelSpace.interval(math.pi)
    k_dir = kernels.make_kernel(interval)
    k_full = kernels.make_kernel(geometry.ModelSpace.euclidean(1))
    grid = [(t, [x], [y])
            for t in (0.25, 0.5, 1.0, 2.0)
            for x in np.linspace(0.3, math.pi - 0.3, 6)
            for y in np.linspace(0.3, math.pi - 0.3, 6)]
    assert check_domain_monotonicity(k_full, k_dir, grid) <= 1e-8
    # the specific pinned pair: p_U(2, pi/2, pi/2) vs the line value
    pU = kernels.eval_kernel(k_dir, 2.0, [math.pi / 2], [math.pi / 2])
    pR = kernels.eval_kernel(k_full, 2.0, [math.pi / 2], [math.pi / 2])
    assert pU == pytest.approx(0.23427789122750357, rel=1e-12)
    assert pR == pytest.approx((4 * math.pi) ** -0.5, rel=1e-14)
    assert pU < pR
    # negative control: swapping the kernels must be detected
    assert check_domain_monotonicity(k_dir, k_full, grid) > 0.0


def test_domain_monotonicity_lattice(rng):
    g = random_connected_graph(9, rng)
    op = assemble_operator(g)
    masked = assemble_operator(g, dirichlet_mask=range(5))
    assert check_domain_monotonicity_lattice(op, masked, 1.0) <= 1e-12
    # U = M: zero violation exactly
    full_again = assemble_operator(g, dirichlet_mask=range(9))
    assert check_domain_monotonicity_lattice(op, full_again, 1.0) == pytest.approx(0.0, abs=1e-14)


def test_hsu_direction(rng):
    opV, opw = flux_pi_ops()
    res = check_hsu_direction(opV, opw, [0.1, 1.0, 10.0], 100, rng)
    assert res["pointwise"] <= TOL and res["bilinear"] <= TOL
    g = random_connected_graph(5, rng)
    w = rng.uniform(0, 1, 5)
    triv = assemble_operator(g, BundleData(g, 1), PotentialField.scalar(w))
    scal = assemble_operator(g, potential=PotentialField.scalar(w))
    res2 = check_hsu_direction(triv, scal, [0.5], 50, rng)
    assert res2["pointwise"] <= 1e-12 and res2["bilinear"] <= 1e-10


def test_hsu_refuses_broken_hypothesis(rng):
    graph, bundle, V, opV, _ = random_bundle_instance(rng)
    bad = assemble_operator(graph, potential=PotentialField.scalar(
        V.min_eigenvalues().real + 1.0))
    with pytest.raises(ComparisonPreconditionError):
        check_hsu_direction(opV, bad, [1.0], 5, rng)


def test_kato_simon_implies_lq_comparison(rng):
    for _ in range(5):
        _, _, _, opV, opw = random_bundle_instance(rng)
        slack = lq_comparison_slack(opV, opw, 0.8, [1, 2, math.inf], 30, rng)
        assert slack >= -TOL


def test_trotter_domination(rng):
    _, _, _, opV, opw = random_bundle_instance(rng)
    assert check_trotter_domination(opV, opw, 1.0, [2, 8, 32, 128], 10, rng) <= TOL


def test_mismatched_graphs_refused(rng):
    g1 = random_connected_graph(5, rng)
    g2 = random_connected_graph(5, rng)
    with pytest.raises(ComparisonPreconditionError):
        check_kato_simon(assemble_operator(g1), assemble_operator(g2), 1.0, 5, rng)
