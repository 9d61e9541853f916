"""Matrix-scale semigroup comparison checks.

Each checker returns the worst violation of one comparison inequality
over random trials, using the dense eigendecomposition as the only
oracle (no Krylov error enters a comparison).  Violations below 1e-10
are numerical zero; every checker can genuinely fail and is exercised
against broken inputs in the test suite.
"""

from __future__ import annotations

import math

import numpy as np

from .lattice import SchrodingerOperator
from .semigroup import operator_lq_norm, trotter_apply

DEFAULT_TOL = 1e-10
ORACLE_CAP = 500


class ComparisonPreconditionError(ValueError):
    """The hypothesis of a comparison inequality fails on the input."""


class DisconnectedGraphError(ValueError):
    """Positivity improvement genuinely fails without connectedness."""


def _require_comparable(opV: SchrodingerOperator, opw: SchrodingerOperator, tol=1e-12):
    """Check shared graph/mask and the fiberwise bound V(x) >= w(x)."""
    if opV.graph is not opw.graph or not np.array_equal(opV.kept, opw.kept):
        raise ComparisonPreconditionError("operators live on different graphs or masks")
    if opw.rank != 1:
        raise ComparisonPreconditionError("comparison operator must be scalar")
    if opV.dim > ORACLE_CAP or opw.dim > ORACLE_CAP:
        raise ComparisonPreconditionError("comparison instances capped at 500 rows")
    rank = opV.rank
    for v in opV.kept:
        V = opV.potential.values[v] if opV.potential is not None else np.zeros((rank, rank))
        w = float(np.real(opw.potential.values[v][0, 0])) if opw.potential is not None else 0.0
        gap = np.linalg.eigvalsh(V - w * np.eye(rank))[0]
        if gap < -tol:
            raise ComparisonPreconditionError(
                f"V >= w fails at vertex {v}: min eig(V - w) = {gap:.3e}")


def _random_sections(op, trials, rng):
    shape = (trials, op.dim)
    f = rng.standard_normal(shape)
    if np.iscomplexobj(op.sym):
        f = f + 1j * rng.standard_normal(shape)
    return f


def check_kato_simon(opV: SchrodingerOperator, opw: SchrodingerOperator,
                     t: float, trials: int, rng, precondition_tol=1e-12) -> float:
    """Max violation of |e^{-t H^nabla_V} f|(x) <= (e^{-t H_w} |f|)(x).

    ``precondition_tol`` loosens the V >= w gate; negative-control tests
    use it to confirm the comparison itself can report violations.
    """
    _require_comparable(opV, opw, tol=precondition_tol)
    EV, Ew = opV.expm(t), opw.expm(t)
    worst = -math.inf
    for f in _random_sections(opV, trials, rng):
        lhs = opV.fiber_norms(EV @ f)
        rhs = np.real(Ew @ opV.fiber_norms(f))
        worst = max(worst, float(np.max(lhs - rhs)))
    return worst


def check_diamagnetic_bottom(opV: SchrodingerOperator, opw: SchrodingerOperator,
                             precondition_tol=1e-12) -> float:
    """Spectral-bottom margin min sigma(H^nabla_V) - min sigma(H_w) (>= 0 in theory)."""
    _require_comparable(opV, opw, tol=precondition_tol)
    return float(opV.spectrum()[0] - opw.spectrum()[0])


def check_positivity(op: SchrodingerOperator, t: float, gap_tol=1e-12):
    """Strict positivity of e^{-tH_w} and simplicity of the ground state.

    Returns (min_entry, spectral_gap, ground_state); raises on
    disconnected graphs, where positivity genuinely fails.
    """
    if op.rank != 1 or not op.bundle.trivial:
        raise ValueError("positivity improvement is a scalar (trivial bundle) statement")
    kept = set(int(v) for v in op.kept)
    # connectivity of the masked subgraph
    if len(kept) > 1:
        seen = {next(iter(kept))}
        stack = list(seen)
        while stack:
            v = stack.pop()
            for u, _ in op.graph.neighbors[v]:
                if u in kept and u not in seen:
                    seen.add(u)
                    stack.append(u)
        if seen != kept:
            raise DisconnectedGraphError("graph (after masking) is disconnected")
    E = np.real(op.expm(t))
    evals, evecs = op.eigh()
    gap = float(evals[1] - evals[0]) if op.dim > 1 else math.inf
    ground = evecs[:, 0] / op._scale
    if gap <= gap_tol:
        raise AssertionError(f"ground state not resolved as simple (gap {gap:.2e})")
    sign = np.sign(ground[np.argmax(np.abs(ground))])
    ground = sign * np.real(ground)
    return float(np.min(E)), gap, ground


def localized_sup_constant(op: SchrodingerOperator, t: float, U) -> float:
    """C_U(t) = max over x in U, all y of the kernel (e^{-tH})_{xy} / mu_y."""
    E = op.expm(t)
    pos = {int(v): i for i, v in enumerate(op.kept)}
    rows = [pos[int(u)] for u in U]
    P = np.abs(E[rows, :]) / op.mu[None, :]
    return float(np.max(P))


def check_lq_bounds(op: SchrodingerOperator, t: float, U, q1, q2, rng=None) -> float:
    """Slack C_U(t)^{1/q1 - 1/q2} - ||1_U e^{-tH}||_{q1,q2;mu} (>= 0 in theory)."""
    if not (1 <= q1 <= q2):
        raise ValueError("need 1 <= q1 <= q2")
    E = op.expm(t)
    pos = {int(v): i for i, v in enumerate(op.kept)}
    rows = np.array([pos[int(u)] for u in U], dtype=int)
    TU = np.zeros_like(E)
    TU[rows, :] = E[rows, :]
    cu = localized_sup_constant(op, t, U)
    inv = 1.0 / q1 - (0.0 if q2 == math.inf else 1.0 / q2)
    norm = operator_lq_norm(op, TU, q1, q2, rng=rng)
    return cu**inv - norm


def check_domain_monotonicity(kernel_full, kernel_dirichlet, grid) -> float:
    """Max of p_U - p over a grid of (t, x, y) triples (continuum kernels)."""
    worst = -math.inf
    for t, x, y in grid:
        worst = max(worst, kernel_dirichlet.eval(t, x, y) - kernel_full.eval(t, x, y))
    return worst


def check_domain_monotonicity_lattice(op_full: SchrodingerOperator,
                                      op_masked: SchrodingerOperator, t: float) -> float:
    """Entrywise max of e^{-tH_U} - e^{-tH} on the kept block."""
    if op_full.graph is not op_masked.graph:
        raise ComparisonPreconditionError("operators discretize different graphs")
    Ef, Em = np.real(op_full.expm(t)), np.real(op_masked.expm(t))
    pos = {int(v): i for i, v in enumerate(op_full.kept)}
    rows = np.array([pos[int(v)] for v in op_masked.kept], dtype=int)
    return float(np.max(Em - Ef[np.ix_(rows, rows)]))


def check_hsu_direction(op_bundle: SchrodingerOperator, op_scalar: SchrodingerOperator,
                        t_grid, trials: int, rng, precondition_tol=1e-12) -> dict:
    """Pointwise domination across a time grid plus its bilinear form.

    Reports the max violations of |e^{-tS} f| <= e^{-tT}|f| and of
    |<e^{-tS} f1, f2>| <= <e^{-tT}|f1|, |f2|> over random section pairs.
    """
    _require_comparable(op_bundle, op_scalar, tol=precondition_tol)
    point_worst = -math.inf
    bil_worst = -math.inf
    for t in t_grid:
        point_worst = max(point_worst,
                          check_kato_simon(op_bundle, op_scalar, t, trials, rng,
                                           precondition_tol=precondition_tol))
        ES, ET = op_bundle.expm(t), np.real(op_scalar.expm(t))
        for _ in range(trials):
            f1, f2 = _random_sections(op_bundle, 2, rng)
            lhs = abs(op_bundle.inner(ES @ f1, f2))
            rhs = np.real(op_scalar.inner(ET @ op_bundle.fiber_norms(f1),
                                          op_bundle.fiber_norms(f2)))
            bil_worst = max(bil_worst, lhs - rhs)
    return {"pointwise": float(point_worst), "bilinear": float(bil_worst)}


def lq_comparison_slack(opV: SchrodingerOperator, opw: SchrodingerOperator,
                        t: float, qs, trials: int, rng) -> float:
    """Min slack of ||e^{-tS} f||_q <= ||e^{-tT}||_{q,q;mu} ||f||_q over random f."""
    _require_comparable(opV, opw)
    EV, Ew = opV.expm(t), np.real(opw.expm(t))
    worst = math.inf
    for q in qs:
        scalar_norm = operator_lq_norm(opw, Ew, q, q)
        for f in _random_sections(opV, trials, rng):
            nf = opV.lq_norm(f, q)
            if nf == 0:
                continue
            worst = min(worst, scalar_norm * nf - opV.lq_norm(EV @ f, q))
    return float(worst)


def check_trotter_domination(opV: SchrodingerOperator, opw: SchrodingerOperator,
                             t: float, ns, trials: int, rng) -> float:
    """Domination survives each Trotter product and its refinement limit.

    The kinetic factors dominate by the V = w = 0 case and the potential
    factors by ||e^{-s V(x)}|| <= e^{-s w(x)}; the product is checked
    directly for each step count.
    """
    _require_comparable(opV, opw)
    BV = opV.potential.values if opV.potential is not None else None
    kinV = _strip_potential(opV)
    kinw = _strip_potential(opw)
    Bw = opw.potential.values if opw.potential is not None else None
    worst = -math.inf
    for n in ns:
        for f in _random_sections(opV, trials, rng):
            lhs = opV.fiber_norms(_trotter_product(kinV, BV, opV, t, n, f))
            rhs = np.real(_trotter_product(kinw, Bw, opw, t, n, opV.fiber_norms(f)))
            worst = max(worst, float(np.max(lhs - rhs)))
    return worst


def _strip_potential(op):
    from .lattice import assemble_operator
    mask = None if len(op.kept) == op.graph.n else op.kept
    return assemble_operator(op.graph, op.bundle, None, dirichlet_mask=mask)


def _trotter_product(kin_op, pot_values, op, t, n, f):
    if pot_values is None:
        return trotter_apply(kin_op, None, t, n, f)
    tau = t / n
    rank = op.rank
    blocks = []
    for v in op.kept:
        w_, Q = np.linalg.eigh(pot_values[int(v)])
        blocks.append((Q * np.exp(-tau * w_)) @ Q.conj().T)
    EK = kin_op.expm(tau)
    v = np.asarray(f, dtype=complex)
    for _ in range(n):
        vb = v.reshape(op.n, rank)
        vb = np.einsum("xij,xj->xi", np.asarray(blocks), vb)
        v = EK @ vb.reshape(op.dim)
    return v
