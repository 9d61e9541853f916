import math

import numpy as np
import pytest

from schrokato import lattice
from schrokato.lattice import PotentialField, assemble_operator, path_graph, random_connected_graph
from schrokato.semigroup import (
    SemigroupEvaluator,
    apply_semigroup,
    operator_lq_norm,
    resolvent_power,
    spectrum_bottom,
    trotter_apply,
    trotter_error_rate,
)


@pytest.fixture
def two_vertex():
    return assemble_operator(path_graph(2))


def test_apply_two_vertex(two_vertex):
    f = np.array([1.0, 0.0])
    out = apply_semigroup(SemigroupEvaluator(two_vertex), 1.0, f)
    assert out == pytest.approx([0.68393972058572116, 0.31606027941427884], rel=1e-14)


def test_apply_identity_at_zero(two_vertex, rng):
    f = rng.standard_normal(2)
    assert np.array_equal(apply_semigroup(SemigroupEvaluator(two_vertex), 0.0, f), f)


def test_scalar_shift_factorizes(rng):
    g = random_connected_graph(6, rng)
    base = assemble_operator(g)
    shifted = assemble_operator(g, potential=PotentialField.scalar(np.ones(6)))
    f = rng.standard_normal(6)
    lhs = apply_semigroup(SemigroupEvaluator(shifted), 0.7, f)
    rhs = math.exp(-0.7) * apply_semigroup(SemigroupEvaluator(base), 0.7, f)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_spectrum_bottom_examples(two_vertex, rng):
    g4 = lattice.cycle_graph(4)
    angles = {(i, (i + 1) % 4): math.pi / 4 for i in range(4)}
    b4 = lattice.attach_gauge(g4, 1, "u1_from_angles", angles=angles)
    lam, _ = spectrum_bottom(assemble_operator(g4, b4))
    assert lam == pytest.approx(1 - math.sqrt(2) / 2, abs=1e-12)
    g = random_connected_graph(9, rng)
    lam0, vec = spectrum_bottom(assemble_operator(g))
    assert lam0 == pytest.approx(0.0, abs=1e-12)
    vec = vec / vec[0]
    assert np.allclose(vec, np.ones(9), atol=1e-9)  # constants harmonic


def test_rayleigh_certificate(rng):
    g = random_connected_graph(8, rng)
    op = assemble_operator(g, potential=PotentialField.scalar(rng.uniform(0, 1, 8)))
    lam, vec = spectrum_bottom(op)
    quotient = op.form(vec) / float(np.real(op.inner(vec, vec)))
    assert quotient == pytest.approx(lam, abs=1e-11)


def test_resolvent_power_closed_form(two_vertex):
    f = np.array([1.0, 0.0])
    out, resid = resolvent_power(two_vertex, -1.0, 1.0, f)
    assert out == pytest.approx([0.75, 0.25], rel=1e-12)
    assert resid <= 1e-9


def test_resolvent_vs_direct_solve(rng):
    g = random_connected_graph(7, rng)
    op = assemble_operator(g)
    f = rng.standard_normal(7)
    out, resid = resolvent_power(op, -0.8, 1.0, f)
    direct = np.linalg.solve(op._matrix + 0.8 * np.eye(7), f)
    assert np.linalg.norm(out - direct) <= 1e-10
    assert resid <= 1e-9


def test_resolvent_half_power_composes(two_vertex, rng):
    f = rng.standard_normal(2)
    once, _ = resolvent_power(two_vertex, -1.0, 1.0, f)
    half, _ = resolvent_power(two_vertex, -1.0, 0.5, f)
    twice, _ = resolvent_power(two_vertex, -1.0, 0.5, half)
    assert np.linalg.norm(twice - once) <= 1e-9


def test_resolvent_shift_guard(two_vertex):
    with pytest.raises(ValueError):
        resolvent_power(two_vertex, 0.0, 1.0, np.ones(2))  # 0 = min sigma


def test_trotter_no_potential_is_exact(two_vertex, rng):
    f = rng.standard_normal(2)
    lhs = trotter_apply(two_vertex, None, 1.0, 7, f)
    rhs = apply_semigroup(SemigroupEvaluator(two_vertex), 1.0, f)
    assert np.allclose(lhs, rhs, atol=1e-14)


def test_trotter_commuting_exact(two_vertex, rng):
    f = rng.standard_normal(2).astype(complex)
    B = 1.3 * np.eye(2)
    w, V = np.linalg.eigh(two_vertex._matrix + B)
    exact = V @ (np.exp(-w) * (V.T @ f))
    for n in (1, 3, 10):
        assert np.allclose(trotter_apply(two_vertex, B, 1.0, n, f), exact, atol=1e-13)


def test_trotter_first_order_rate(two_vertex):
    B = np.diag([1.0, 0.0])
    errors, ratios, order = trotter_error_rate(
        two_vertex, B, 1.0, np.array([1.0, 0.5]), ns=(4, 8, 16, 32, 64, 128, 256))
    assert all(1.7 <= r <= 2.3 for r in ratios)
    assert order == pytest.approx(1.0, abs=0.1)


def test_strang_variant_is_second_order(two_vertex):
    B = np.diag([1.0, 0.0])
    f = np.array([1.0, 0.5], dtype=complex)
    w, V = np.linalg.eigh(two_vertex._matrix + B)
    exact = V @ (np.exp(-w) * (V.conj().T @ f))
    errs = [np.linalg.norm(trotter_apply(two_vertex, B, 1.0, n, f, symmetrized=True) - exact)
            for n in (8, 16, 32)]
    assert errs[0] / errs[1] > 3.3  # second order: ratio ~ 4


def test_krylov_matches_eigen(rng):
    g = random_connected_graph(60, rng, extra_edge_prob=0.1)
    op = assemble_operator(g, potential=PotentialField.scalar(rng.uniform(0, 1, 60)))
    f = rng.standard_normal(60)
    dense = apply_semigroup(SemigroupEvaluator(op), 0.9, f)
    kry = apply_semigroup(SemigroupEvaluator(op, method="krylov", krylov_dim=55), 0.9, f)
    assert np.linalg.norm(kry - dense) <= 1e-8 * np.linalg.norm(f)


def test_semigroup_selfadjoint_and_law(rng):
    g = random_connected_graph(10, rng)
    op = assemble_operator(g)
    E1, E2, E3 = op.expm(0.4), op.expm(0.9), op.expm(1.3)
    D = np.diag(np.sqrt(op.mu))
    sym = D @ E1 @ np.linalg.inv(D)
    assert np.linalg.norm(sym - sym.conj().T) <= 1e-10
    assert np.linalg.norm(E1 @ E2 - E3) <= 1e-10


def test_lq_contraction(rng):
    for _ in range(10):
        g = random_connected_graph(int(rng.integers(3, 12)), rng)
        w = PotentialField.scalar(rng.uniform(0, 2, g.n))
        op = assemble_operator(g, potential=w)
        E = op.expm(float(rng.uniform(0.1, 2.0)))
        for q in (1, 2, math.inf):
            assert operator_lq_norm(op, E, q, q) <= 1 + 1e-10


def test_localized_smoothing(rng):
    from schrokato.domination import check_lq_bounds
    g = random_connected_graph(12, rng)
    op = assemble_operator(g)
    U = list(range(6))
    for pair in [(1, math.inf), (1, 2), (2, math.inf), (1, 1), (2, 2)]:
        assert check_lq_bounds(op, 0.8, U, *pair) >= -1e-10


def test_positivity_improving_and_simple_ground_state(rng):
    g = random_connected_graph(9, rng)
    op = assemble_operator(g, potential=PotentialField.scalar(rng.uniform(0, 1, 9)))
    E = np.real(op.expm(0.6))
    assert np.min(E) > 0.0
    evals, evecs = op.eigh()
    assert evals[1] - evals[0] > 1e-12
    ground = np.real(evecs[:, 0])
    ground *= np.sign(ground[np.argmax(np.abs(ground))])
    assert np.all(ground > 0)
