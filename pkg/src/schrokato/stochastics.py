"""Path sampling and Feynman-Kac Monte Carlo.

Lattice paths are exact-in-law continuous-time jump chains with holding
rate r_x = deg_w(x) / (2 mu_x) and jump law w_xy / deg_w(x), whose
transition semigroup is exactly e^{-tH}.  Chart paths are Euler-Maruyama
discretizations of the generator (1/2)Delta in the global chart (exact
Gaussian increments in the Euclidean case).

Reproducibility contract: path i draws from its own stream keyed by
(master seed, i); estimates are reduced in index order, so results are
bit-identical for a fixed (seed, n_paths, config) no matter how the work
is scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .geometry import ModelSpace
from .lattice import BundleData, PotentialField, WeightedGraph

LOG_WEIGHT_LIMIT = 700.0


@dataclass(frozen=True)
class PathSample:
    """One simulated path: event times, visited states, explosion flag.

    For jump chains ``states`` holds vertex indices and ``times`` the
    entry times; dead paths are frozen at the killing time.  Chart paths
    carry the step grid and coordinate rows.  ``accumulated_potential``
    and ``transport`` are filled by the Feynman-Kac samplers.
    """

    times: np.ndarray
    states: np.ndarray
    alive: bool
    accumulated_potential: float | None = None
    transport: np.ndarray | None = None


@dataclass(frozen=True)
class MCEstimate:
    value: object
    stderr: object
    n_paths: int
    seed: int


def _path_rng(seed, index):
    return np.random.default_rng([int(seed), int(index)])


# ---------------------------------------------------------------------------
# lattice jump chains


def _ctmc_tables(graph: WeightedGraph, mask=None):
    rates, targets, cumprobs = graph.jump_rates()
    keep = np.ones(graph.n, dtype=bool)
    if mask is not None:
        keep[:] = False
        keep[np.asarray(list(mask), dtype=int)] = True
    return rates, targets, cumprobs, keep


def sample_path_ctmc(graph: WeightedGraph, x0: int, t: float, rng,
                     mask=None) -> PathSample:
    """Exact jump-chain path over [0, t], killed on leaving ``mask``."""
    if t < 0:
        raise ValueError("horizon must be >= 0")
    rates, targets, cumprobs, keep = _ctmc_tables(graph, mask)
    if not keep[x0]:
        raise ValueError("start vertex is masked out")
    times, states = [0.0], [int(x0)]
    x, elapsed = int(x0), 0.0
    alive = True
    while True:
        r = rates[x]
        if r <= 0.0:
            break
        hold = rng.exponential(1.0 / r)
        if elapsed + hold >= t:
            break
        elapsed += hold
        j = int(np.searchsorted(cumprobs[x], rng.random(), side="right"))
        y = int(targets[x][j])
        times.append(elapsed)
        states.append(y)
        if not keep[y]:
            alive = False
            break
        x = y
    return PathSample(np.asarray(times), np.asarray(states, dtype=int), alive)


def _fk_scalar_lattice(graph, w, f, t, x0, n_paths, seed, mask):
    rates, targets, cumprobs, keep = _ctmc_tables(graph, mask)
    if not keep[x0]:
        raise ValueError("start vertex is masked out")
    wv = np.asarray(w, dtype=float)
    fv = np.asarray(f)
    vals = np.zeros(n_paths, dtype=complex if np.iscomplexobj(fv) else float)
    for i in range(n_paths):
        rng = _path_rng(seed, i)
        x, elapsed, acc = int(x0), 0.0, 0.0
        alive = True
        while True:
            r = rates[x]
            if r <= 0.0:
                acc += wv[x] * (t - elapsed)
                break
            hold = rng.exponential(1.0 / r)
            if elapsed + hold >= t:
                acc += wv[x] * (t - elapsed)
                break
            acc += wv[x] * hold
            elapsed += hold
            j = int(np.searchsorted(cumprobs[x], rng.random(), side="right"))
            y = int(targets[x][j])
            if not keep[y]:
                alive = False
                break
            x = y
        if alive:
            if -acc > LOG_WEIGHT_LIMIT:
                raise RuntimeError(
                    f"Feynman-Kac weight overflow: path {i} accumulated "
                    f"int w = {acc:.3g}")
            vals[i] = math.exp(-acc) * fv[x]
    return _reduce(vals, n_paths, seed)


def _reduce(vals, n_paths, seed):
    mean = vals.mean()
    if n_paths > 1:
        var = np.sum(np.abs(vals - mean) ** 2) / (n_paths - 1)
        stderr = math.sqrt(var / n_paths)
    else:
        stderr = math.inf
    if not np.iscomplexobj(vals):
        mean = float(mean)
    return MCEstimate(mean, float(stderr), n_paths, seed)


def terminal_states(graph, x0, t, n_paths, seed, mask=None, start_states=None):
    """Terminal vertices of n_paths jump chains (-1 where killed).

    ``start_states`` overrides the common start, enabling Markov-restart
    experiments; entry -1 stays dead.
    """
    rates, targets, cumprobs, keep = _ctmc_tables(graph, mask)
    out = np.empty(n_paths, dtype=int)
    for i in range(n_paths):
        x = int(x0) if start_states is None else int(start_states[i])
        if x < 0:
            out[i] = -1
            continue
        rng = _path_rng(seed, i)
        elapsed = 0.0
        alive = True
        while True:
            r = rates[x]
            if r <= 0.0:
                break
            hold = rng.exponential(1.0 / r)
            if elapsed + hold >= t:
                break
            elapsed += hold
            j = int(np.searchsorted(cumprobs[x], rng.random(), side="right"))
            y = int(targets[x][j])
            if not keep[y]:
                alive = False
                break
            x = y
        out[i] = x if alive else -1
    return out


def fk_covariant(graph: WeightedGraph, bundle: BundleData, V: PotentialField | None,
                 f, t, x0, n_paths, seed, mask=None) -> MCEstimate:
    """Path-ordered Feynman-Kac estimate of (e^{-tH^nabla_V} f)(x0).

    Along each jump chain the fiber transport accumulates
    A <- A e^{-hold * V(x)} on holding intervals and A <- A U_{x y} at
    jumps; the estimator averages A f(X_t) over surviving paths.  The
    orientation is pinned by the matrix-exponential oracle tests.
    """
    rank = bundle.rank
    rates, targets, cumprobs, keep = _ctmc_tables(graph, mask)
    if not keep[x0]:
        raise ValueError("start vertex is masked out")
    fv = np.asarray(f, dtype=complex).reshape(graph.n, rank)
    if V is not None:
        Q = V.eigvecs
        lam = V.eigvals
    eye = np.eye(rank, dtype=complex)
    vals = np.zeros((n_paths, rank), dtype=complex)
    for i in range(n_paths):
        rng = _path_rng(seed, i)
        x, elapsed = int(x0), 0.0
        A = eye
        alive = True
        while True:
            r = rates[x]
            hold = rng.exponential(1.0 / r) if r > 0.0 else math.inf
            dt = min(hold, t - elapsed)
            if V is not None:
                ex = np.exp(-dt * lam[x])
                if np.max(dt * np.abs(lam[x])) > LOG_WEIGHT_LIMIT:
                    raise RuntimeError(f"Feynman-Kac weight overflow on path {i}")
                A = A @ ((Q[x] * ex) @ Q[x].conj().T)
            if elapsed + hold >= t:
                break
            elapsed += hold
            j = int(np.searchsorted(cumprobs[x], rng.random(), side="right"))
            y = int(targets[x][j])
            A = A @ bundle.transport(x, y)
            if not keep[y]:
                alive = False
                break
            x = y
        if alive:
            vals[i] = A @ fv[x]
    mean = vals.mean(axis=0)
    var = np.sum(np.abs(vals - mean) ** 2, axis=0) / max(n_paths - 1, 1)
    stderr = np.sqrt(var / n_paths)
    return MCEstimate(mean, stderr, n_paths, seed)


def covariant_transport(path: PathSample, bundle: BundleData,
                        V: PotentialField | None, t: float) -> np.ndarray:
    """Fiber transport A accumulated along an existing jump-chain path."""
    rank = bundle.rank
    A = np.eye(rank, dtype=complex)
    times = np.append(path.times, t if path.alive else path.times[-1])
    for k, x in enumerate(path.states):
        dt = times[k + 1] - times[k]
        if V is not None:
            w, Qx = np.linalg.eigh(V.values[x])
            A = A @ ((Qx * np.exp(-dt * w)) @ Qx.conj().T)
        if k + 1 < len(path.states):
            A = A @ bundle.transport(int(x), int(path.states[k + 1]))
    return A


def annotate_path(path: PathSample, t: float, w=None, bundle=None, V=None) -> PathSample:
    """Fill the Feynman-Kac fields of a jump-chain path.

    ``w`` (per-vertex scalars) populates ``accumulated_potential`` with
    the exact integral of w along the path; ``bundle``/``V`` populate
    ``transport`` with the path-ordered fiber matrix.
    """
    import dataclasses
    acc = None
    if w is not None:
        wv = np.asarray(w, dtype=float)
        times = np.append(path.times, t if path.alive else path.times[-1])
        acc = float(sum(wv[int(x)] * (times[k + 1] - times[k])
                        for k, x in enumerate(path.states)))
    A = covariant_transport(path, bundle, V, t) if bundle is not None else None
    return dataclasses.replace(path, accumulated_potential=acc, transport=A)


# ---------------------------------------------------------------------------
# chart schemes


def _chart_drift_sigma(space):
    m = space.dim
    if space.kind in (geometry.EUCLIDEAN, geometry.BOX, geometry.INTERVAL):
        return None  # zero drift, unit diffusion: exact Gaussian increments
    if space.kind == geometry.HYPERBOLIC:
        # g^{ij} = x_m^2 delta_ij, sqrt(det g) = x_m^{-m}:
        # drift (0, ..., (2-m)/2 * x_m), diffusion x_m * I
        c = 0.5 * (2.0 - m)

        def step(x, z, h):
            xm = x[-1]
            nxt = x + math.sqrt(h) * xm * z
            nxt[-1] += h * c * xm
            return nxt

        return step
    raise ValueError(f"no chart scheme for {space.kind}")


def sample_path_chart(space: ModelSpace, x0, t, h, rng) -> PathSample:
    """Euler path on the step grid {0, h, ..., t}, killed at domain exit."""
    if not 0 < h < t:
        raise ValueError("need 0 < h < t")
    cx = space.coords(x0)
    steps = int(round(t / h))
    grid = np.linspace(0.0, steps * h, steps + 1)
    m = space.dim
    stepper = _chart_drift_sigma(space)
    Z = rng.standard_normal((steps, m))
    rows = np.empty((steps + 1, m))
    rows[0] = cx
    alive = True
    if stepper is None:
        rows[1:] = cx + math.sqrt(h) * np.cumsum(Z, axis=0)
        if space.kind in (geometry.BOX, geometry.INTERVAL):
            lo, hi = (np.asarray(b) for b in space.bounds)
            inside = np.all((rows >= lo) & (rows <= hi), axis=1)
            if not inside.all():
                k = int(np.argmin(inside))
                rows = rows[:k + 1]
                grid = grid[:k + 1]
                alive = False
    else:
        x = np.array(cx, dtype=float)
        for k in range(steps):
            x = stepper(x, Z[k], h)
            rows[k + 1] = x
            if x[-1] <= 0.0:  # discretization artifact on the half-space
                rows = rows[:k + 2]
                grid = grid[:k + 2]
                alive = False
                break
    return PathSample(grid, rows, alive)


def _fk_scalar_chart(space, w, f, t, x0, n_paths, seed, h):
    cx = space.coords(x0)
    steps = int(round(t / h))
    m = space.dim
    bounded = space.kind in (geometry.BOX, geometry.INTERVAL)
    if bounded:
        lo, hi = (np.asarray(b) for b in space.bounds)
    stepper = _chart_drift_sigma(space)
    vals = np.zeros(n_paths)
    sqh = math.sqrt(h)
    for i in range(n_paths):
        rng = _path_rng(seed, i)
        Z = rng.standard_normal((steps, m))
        alive = True
        if stepper is None:
            rows = cx + sqh * np.cumsum(Z, axis=0)
            if bounded:
                inside = np.all((rows >= lo) & (rows <= hi), axis=1)
                if not inside.all():
                    alive = False
            if alive:
                acc = h * (w(cx) + sum(w(rows[k]) for k in range(steps - 1)))
                if -acc > LOG_WEIGHT_LIMIT:
                    raise RuntimeError(f"Feynman-Kac weight overflow on path {i}")
                vals[i] = math.exp(-acc) * f(rows[-1])
        else:
            x = np.array(cx, dtype=float)
            acc = 0.0
            for k in range(steps):
                acc += h * w(x)
                x = stepper(x, Z[k], h)
                if x[-1] <= 0.0:
                    alive = False
                    break
            if alive:
                if -acc > LOG_WEIGHT_LIMIT:
                    raise RuntimeError(f"Feynman-Kac weight overflow on path {i}")
                vals[i] = math.exp(-acc) * f(x)
    return _reduce(vals, n_paths, seed)


# ---------------------------------------------------------------------------
# public estimators


def fk_scalar(source, w, f, t, x0, n_paths, seed, mask=None, h=None) -> MCEstimate:
    """Monte Carlo estimate of E^x [ e^{-int_0^t w(X_s) ds} f(X_t); t < zeta ].

    On a graph the potential integral is exact (w is constant on holding
    intervals); on a model space it uses the left-point rule on the Euler
    grid with step ``h``.
    """
    if n_paths < 1:
        raise ValueError("need at least one path")
    if isinstance(source, WeightedGraph):
        return _fk_scalar_lattice(source, w, f, t, x0, n_paths, seed, mask)
    if h is None:
        raise ValueError("chart sampling needs a step h")
    return _fk_scalar_chart(source, w, f, t, x0, n_paths, seed, h)


def survival_probability(source, x0, t, n_paths, seed, mask=None, h=None) -> MCEstimate:
    """Estimate of P^x(t < zeta) for a masked graph or a bounded domain."""
    if isinstance(source, WeightedGraph):
        zeros = np.zeros(source.n)
        ones = np.ones(source.n)
        return fk_scalar(source, zeros, ones, t, x0, n_paths, seed, mask=mask)
    return fk_scalar(source, lambda x: 0.0, lambda x: 1.0, t, x0, n_paths, seed, h=h)


def exponential_moment(graph, w_abs, t, x0, n_paths, seed, mask=None) -> MCEstimate:
    """Estimate of E^x [ e^{+int_0^t |w|(X_s) ds}; t < zeta ] on a lattice."""
    wv = -np.abs(np.asarray(w_abs, dtype=float))
    return fk_scalar(graph, wv, np.ones(graph.n), t, x0, n_paths, seed, mask=mask)


def dump_paths(paths, fileobj):
    """Debug CSV dump: one row per event, ``path_id,time,state...,alive``."""
    write = fileobj.write
    write("path_id,time,state,alive\n")
    for pid, path in enumerate(paths):
        for k, time in enumerate(path.times):
            state = path.states[k]
            if np.ndim(state) > 0:
                state_txt = ";".join(format(c, ".17g") for c in state)
            else:
                state_txt = str(int(state))
            write(f"{pid},{format(time, '.17g')},{state_txt},{int(path.alive)}\n")


def potential_occupation(graph, w, t, x0, n_paths, seed, mask=None) -> MCEstimate:
    """Estimate of E^x int_0^{t and zeta} |w|(X_s) ds along jump chains."""
    rates, targets, cumprobs, keep = _ctmc_tables(graph, mask)
    if not keep[x0]:
        raise ValueError("start vertex is masked out")
    wv = np.abs(np.asarray(w, dtype=float))
    vals = np.zeros(n_paths)
    for i in range(n_paths):
        rng = _path_rng(seed, i)
        x, elapsed, acc = int(x0), 0.0, 0.0
        while True:
            r = rates[x]
            if r <= 0.0:
                acc += wv[x] * (t - elapsed)
                break
            hold = rng.exponential(1.0 / r)
            if elapsed + hold >= t:
                acc += wv[x] * (t - elapsed)
                break
            acc += wv[x] * hold
            elapsed += hold
            j = int(np.searchsorted(cumprobs[x], rng.random(), side="right"))
            y = int(targets[x][j])
            if not keep[y]:
                break
            x = y
        vals[i] = acc
    return _reduce(vals, n_paths, seed)
