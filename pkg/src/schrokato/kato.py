"""Dynkin and Kato class functionals for potentials.

The central quantities are the time-window functional

    D(w, t) = sup_x int_0^t int p(s,x,y) |w(y)| dmu(y) ds

and its Laplace-weighted companion C_r(w).  The sup over a noncompact
space is replaced by a max over a finite probe set, so every reported
value is a certified lower bound of the sup; for radially symmetric
potentials on homogeneous spaces the probe at the symmetry center attains
the sup (spot-checked).  On lattices both functionals are exact matrix
quadratures through the eigendecomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import geometry
from .kernels import ControlPair, KernelHandle, kernel_mass

INNER_QUAD = dict(epsabs=1e-11, epsrel=1e-9, limit=200)
OUTER_QUAD = dict(epsabs=1e-10, epsrel=1e-8, limit=200)
TAIL = 9.0


@dataclass(frozen=True)
class RadialPotential:
    """|w|(y) depending only on the distance to a center point.

    ``singular_exponent`` declares a 1/r^alpha blow-up at the center so
    the quadrature can split it off analytically; ``cutoff`` truncates
    the support.  ``constant`` marks a spatially constant potential.
    """

    center: object
    profile: object
    singular_exponent: float | None = None
    cutoff: float | None = None
    constant: float | None = None
    name: str = "potential"

    @staticmethod
    def const(space, c, name=None):
        return RadialPotential(space.origin(), lambda r: c, constant=float(c),
                               name=name or f"constant({c})")

    @staticmethod
    def coulomb(space, center=None, name="coulomb"):
        c = center if center is not None else space.origin()
        return RadialPotential(c, lambda r: 1.0 / r, singular_exponent=1.0, name=name)


class NonIntegrableSingularity(ValueError):
    """Raised when a declared singularity is not locally integrable."""


def _sphere_kernel_average(k: KernelHandle, s, probe_dist, r):
    """Uniform average of p(s, x, .) over the distance sphere of radius r
    around the potential center, with the probe at distance probe_dist."""
    m = k.space.dim
    rho = probe_dist
    if rho == 0.0:
        return k._radial(s, r)
    if k.space.kind == geometry.EUCLIDEAN:
        if m == 1:
            return 0.5 * (k._radial(s, abs(rho - r)) + k._radial(s, rho + r))
        dist = lambda th: math.sqrt(max(rho * rho + r * r - 2 * rho * r * math.cos(th), 0.0))
    else:
        chc = math.cosh(rho) * math.cosh(r)
        shs = math.sinh(rho) * math.sinh(r)
        dist = lambda th: math.acosh(max(chc - shs * math.cos(th), 1.0))
    if m == 2:
        f = lambda th: k._radial(s, dist(th)) / math.pi
    else:
        f = lambda th: 0.5 * k._radial(s, dist(th)) * math.sin(th)
    val, _ = integrate.quad(f, 0.0, math.pi, epsabs=1e-12, epsrel=1e-10, limit=100)
    return val


def kernel_potential_integral(k: KernelHandle, s, x, w: RadialPotential):
    """int p(s,x,y) |w|(y) dmu(y) by polar quadrature around the center."""
    space = k.space
    m = space.dim
    if w.constant is not None:
        return abs(w.constant) * kernel_mass(k, s, x)
    alpha = w.singular_exponent
    if alpha is not None and alpha >= m:
        raise NonIntegrableSingularity(
            f"declared 1/r^{alpha} singularity is not integrable in dimension {m}")
    rho = geometry.distance(space, x, w.center)
    area = geometry.sphere_area(m)
    if space.kind == geometry.EUCLIDEAN:
        dens = lambda r: r ** (m - 1)
        drift = 0.0
    else:
        dens = lambda r: math.sinh(r) ** (m - 1)
        drift = (m - 1) * s
    # the kernel factor dies past rho + drift + TAIL sqrt(s); keep the
    # radial window at that scale so small-s peaks stay resolved
    r_hi = rho + drift + TAIL * math.sqrt(s)
    if w.cutoff is not None:
        r_hi = min(r_hi, w.cutoff)

    def integrand(r):
        return abs(w.profile(r)) * _sphere_kernel_average(k, s, rho, r) * dens(r)

    total = 0.0
    r_lo = 0.0
    if alpha is not None and alpha > 0:
        # split off r^{-alpha}: substitute v = r^{m - alpha} on [0, r_split]
        r_split = min(1.0, r_hi)
        beta = m - alpha

        def near(v):
            r = v ** (1.0 / beta)
            return integrand(r) * r ** (1.0 - beta) / beta if r > 0 else 0.0

        val, _ = integrate.quad(near, 0.0, r_split**beta, **INNER_QUAD)
        total += val
        r_lo = r_split
    if r_hi > r_lo:
        pts = [rho] if r_lo < rho < r_hi else None
        val, _ = integrate.quad(integrand, r_lo, r_hi, points=pts, **INNER_QUAD)
        total += val
    return area * total


def _lattice_time_window(op, w, t):
    """Exact vector int_0^t e^{-sH} |w| ds on a lattice (spectral calculus)."""
    evals, evecs = op.eigh()
    g = op._scale * np.abs(np.asarray(w, dtype=float))
    coef = evecs.conj().T @ g
    lam = np.where(np.abs(evals) < 1e-13, 0.0, evals)
    safe = np.where(lam == 0.0, 1.0, lam)
    weights = np.where(lam == 0.0, t, (1.0 - np.exp(-lam * t)) / safe)
    return np.real((evecs @ (weights * coef)) / op._scale)


def _lattice_resolvent(op, w, r):
    """Exact vector (H + r)^{-1} |w| on a lattice."""
    evals, evecs = op.eigh()
    g = op._scale * np.abs(np.asarray(w, dtype=float))
    coef = evecs.conj().T @ g
    return np.real((evecs @ (coef / (evals + r))) / op._scale)


def dynkin_functional(k: KernelHandle, w, t, probes) -> float:
    """Max over probes of int_0^t int p(s,x,y)|w(y)| dmu ds (lower bound of sup_x)."""
    if not t > 0:
        raise ValueError("time must be positive")
    if not len(probes):
        raise ValueError("need at least one probe")
    if k.method == "matrix":
        vec = _lattice_time_window(k._matrix_op, w, t)
        return float(np.max(vec[np.asarray(probes, dtype=int)]))
    best = 0.0
    for x in probes:
        if w.constant is not None and k.stochastically_complete:
            best = max(best, abs(w.constant) * t)
            continue
        # substitution s = tau^2 tames the 1/sqrt(s) ramp of singular potentials
        val, _ = integrate.quad(
            lambda tau: 2.0 * tau * kernel_potential_integral(k, tau * tau, x, w),
            0.0, math.sqrt(t), **OUTER_QUAD)
        best = max(best, val)
    return best


def resolvent_functional(k: KernelHandle, w, r, probes) -> float:
    """Max over probes of int_0^oo e^{-rs} int p(s,x,y)|w(y)| dmu ds."""
    if not r > 0:
        raise ValueError("rate must be positive")
    if k.method == "matrix":
        vec = _lattice_resolvent(k._matrix_op, w, r)
        return float(np.max(vec[np.asarray(probes, dtype=int)]))
    best = 0.0
    s_max = 45.0 / r
    for x in probes:
        if w.constant is not None and k.stochastically_complete:
            best = max(best, abs(w.constant) / r)
            continue

        def integrand(s):
            return math.exp(-r * s) * kernel_potential_integral(k, s, x, w)

        # substitution s = u^2 tames the possible 1/sqrt(s) blow-up at 0
        val, _ = integrate.quad(lambda u: 2.0 * u * integrand(u * u),
                                0.0, math.sqrt(s_max), **OUTER_QUAD)
        best = max(best, val)
    return best


def demuth_sandwich_violation(k: KernelHandle, w, r_grid, t_grid, probes) -> float:
    """Max relative violation of (1-e^{-rt}) C_r <= D(t) <= e^{rt} C_r."""
    worst = 0.0
    dvals = {t: dynkin_functional(k, w, t, probes) for t in t_grid}
    for r in r_grid:
        c = resolvent_functional(k, w, r, probes)
        for t in t_grid:
            d = dvals[t]
            scale = max(d, c, 1e-300)
            worst = max(worst, ((1.0 - math.exp(-r * t)) * c - d) / scale)
            worst = max(worst, (d - math.exp(r * t) * c) / scale)
    return worst


@dataclass(frozen=True)
class KatoReport:
    potential: str
    probes: tuple
    curve: tuple          # ((t, D(t)), ...)
    resolvent: tuple      # ((r, C_r), ...)
    verdict: str          # kato | contractive_dynkin | dynkin_only | indeterminate
    tolerances: dict
    flags: tuple = ()
    fitted_exponent: float | None = None

    def to_dict(self):
        return {
            "potential": self.potential,
            "probes": list(self.probes),
            "curve": [{"t": t, "D": d} for t, d in self.curve],
            "resolvent": [{"r": r, "C": c} for r, c in self.resolvent],
            "verdict": self.verdict,
            "tolerances": dict(self.tolerances),
            "flags": list(self.flags),
            "fitted_exponent": self.fitted_exponent,
        }


def classify_potential(k: KernelHandle, w, probes, t_grid, *,
                       alpha_min=0.05, d_small=0.1, r_grid=None) -> KatoReport:
    """Kato/Dynkin verdict from the decay of the functional curve.

    The Kato limit is replaced by a finite surrogate: fit D(t) ~ a t^alpha
    on the two smallest probed decades and require alpha > alpha_min
    together with D(t_min) < d_small.  Contractive Dynkin only needs some
    probed D(t) < 1.
    """
    t_grid = np.sort(np.asarray(t_grid, dtype=float))
    if t_grid[0] <= 0 or t_grid[-1] / t_grid[0] < 99.0:
        raise ValueError("t grid must span at least two decades toward 0")
    name = w.name if isinstance(w, RadialPotential) else "lattice potential"
    flags = []
    curve = []
    try:
        for t in t_grid:
            curve.append((float(t), dynkin_functional(k, w, t, probes)))
    except NonIntegrableSingularity as exc:
        flags.append(str(exc))
    tolerances = {"alpha_min": alpha_min, "d_small": d_small}
    if flags:
        return KatoReport(name, tuple(map(str, probes)), tuple(curve), (),
                          "indeterminate", tolerances, tuple(flags))
    rs = tuple(r_grid) if r_grid is not None else (1.0 / t_grid[0], 1.0 / t_grid[-1])
    resolvent = tuple((float(r), resolvent_functional(k, w, r, probes)) for r in rs)
    dvals = np.array([d for _, d in curve])
    small = t_grid <= t_grid[0] * 100.0
    logs_t = np.log(t_grid[small])
    logs_d = np.log(np.maximum(dvals[small], 1e-300))
    alpha = float(np.polyfit(logs_t, logs_d, 1)[0])
    if alpha > alpha_min and dvals[0] < d_small:
        verdict = "kato"
    elif np.min(dvals) < 1.0:
        verdict = "contractive_dynkin"
    elif np.all(np.isfinite(dvals)):
        verdict = "dynkin_only"
    else:
        verdict = "indeterminate"
    return KatoReport(name, tuple(map(str, probes)), tuple(curve), resolvent,
                      verdict, tolerances, tuple(flags), alpha)


def khasminskii_constants(d_value, s, delta=None):
    """Explicit exponential-moment constants from D(w, s) < 1.

    Returns (c1, c2) with c1 = 1/(1 - D) and c2 = log(1/(1 - D))/s; with
    ``delta`` given, requires D < 1 - 1/delta and returns c_delta alone.
    """
    if delta is None:
        if not 0 <= d_value < 1:
            raise ValueError("need D(w, s) < 1")
        c1 = 1.0 / (1.0 - d_value)
        return c1, math.log(c1) / s
    if not delta > 1:
        raise ValueError("delta must exceed 1")
    if not d_value < 1.0 - 1.0 / delta:
        raise ValueError("need D(w, s_delta) < 1 - 1/delta")
    return math.log(1.0 / (1.0 - d_value)) / s


def form_bound_check(graph, w, r, trials, rng) -> float:
    """Max violation of ||sqrt|w| f||^2 <= C_r(w) (Q(f,f) + r ||f||^2).

    C_r is the exact lattice resolvent functional; Q is the discrete
    Dirichlet form of the free operator.
    """
    from .lattice import assemble_operator
    op = assemble_operator(graph)
    cr = float(np.max(_lattice_resolvent(op, w, r)))
    aw = np.abs(np.asarray(w, dtype=float))
    worst = -math.inf
    for _ in range(trials):
        f = rng.standard_normal(graph.n)
        lhs = float(np.sum(graph.mu * aw * f**2))
        rhs = cr * (op.form(f) + r * float(np.sum(graph.mu * f**2)))
        worst = max(worst, lhs - rhs)
    return worst


def weighted_lq_norm(space, w: RadialPotential, qprime, xi_value) -> float:
    """|| w||_{q'; Xi} for a radial potential and a constant weight Xi."""
    m = space.dim
    alpha = w.singular_exponent or 0.0
    if alpha * qprime >= m:
        raise NonIntegrableSingularity(
            f"|w|^{qprime} with a 1/r^{alpha} singularity is not integrable")
    dens = (lambda r: r ** (m - 1)) if space.kind == geometry.EUCLIDEAN \
        else (lambda r: math.sinh(r) ** (m - 1))
    r_hi = w.cutoff
    if r_hi is None:
        raise ValueError("weighted norm needs a compactly supported w1 (set cutoff)")
    integrand = lambda r: abs(w.profile(r)) ** qprime * dens(r)
    if alpha > 0:
        # substitute v = r^beta, beta = m - alpha q', so the singularity integrates exactly
        beta = m - alpha * qprime

        def sub(v):
            if v <= 0:
                return 0.0
            r = v ** (1.0 / beta)
            return integrand(r) * r / (beta * v)

        val, _ = integrate.quad(sub, 0.0, r_hi**beta, **INNER_QUAD)
    else:
        val, _ = integrate.quad(integrand, 0.0, r_hi, **INNER_QUAD)
    return (geometry.sphere_area(m) * xi_value * val) ** (1.0 / qprime)


def weighted_lq_bound(k: KernelHandle, w1: RadialPotential | None, qprime,
                      pair: ControlPair, w2_sup, u, probes) -> dict:
    """Kernel-smoothing bound int p(u,x,.)|w| dmu <= XiTilde(u)^{1/q'} ||w1||_{q';Xi} + ||w2||_oo.

    Returns the right-hand side, the probe values of the left-hand side,
    and the class conclusion the bound certifies.
    """
    m = k.space.dim
    if (m == 1 and qprime < 1) or (m >= 2 and qprime <= m / 2):
        raise ValueError("inadmissible exponent q'")
    if w1 is None:
        rhs = float(w2_sup)
        lhs = [w2_sup * kernel_mass(k, u, x) for x in probes]
        conclusion = "kato: L^oo(M) is contained in the Kato class"
        return {"rhs": rhs, "lhs": lhs, "norm_w1": 0.0, "conclusion": conclusion}
    xi_value = pair.xi(probes[0])
    norm_w1 = weighted_lq_norm(k.space, w1, qprime, xi_value)
    rhs = pair.xi_tilde(u) ** (1.0 / qprime) * norm_w1 + float(w2_sup)
    lhs = [kernel_potential_integral(k, u, x, w1) + float(w2_sup) for x in probes]
    conclusion = ("kato: the weighted space L^{q'}_Xi(M) + L^oo(M) lies in the "
                  "Kato class whenever the control-pair bound holds")
    return {"rhs": rhs, "lhs": lhs, "norm_w1": norm_w1, "conclusion": conclusion}
