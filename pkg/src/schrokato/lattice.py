"""Weighted graphs, bundle data and lattice Schrodinger operators.

A weighted graph carries vertex measures mu_x > 0 and symmetric edge
weights w_xy > 0, inducing the nonnegative operator

    (H f)(x) = (1/(2 mu_x)) sum_y w_xy (f(x) - f(y)).

Attaching per-edge unitaries U_xy (a discrete metric connection) and
per-vertex Hermitian potentials V(x) yields the covariant operator

    (H f)(x) = (1/(2 mu_x)) sum_y w_xy (f(x) - U_xy f(y)) + V(x) f(x),

optionally Dirichlet-restricted to a vertex subset.  The operator is
self-adjoint in the mu-weighted inner product; spectral work happens on
the unitarily equivalent Hermitian matrix D^{1/2} M D^{-1/2}.
"""

from __future__ import annotations

import itertools
import math
import numpy as np
import scipy.sparse as sp

from . import geometry
from .geometry import ModelSpace

HERMITICITY_TOL = 1e-12
SPARSE_THRESHOLD = 2000


class WeightedGraph:
    """Vertex-indexed graph with measures and positive edge weights."""

    def __init__(self, n, mu, edges, coords=None):
        self.n = int(n)
        self.mu = np.asarray(mu, dtype=float)
        if self.mu.shape != (self.n,) or np.any(self.mu <= 0):
            raise ValueError("mu must be strictly positive, one entry per vertex")
        self.coords = None if coords is None else np.asarray(coords, dtype=float)
        self.edges = {}
        for (a, b), w in edges.items():
            a, b = int(a), int(b)
            if a == b or not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"bad edge ({a}, {b})")
            if not w > 0:
                raise ValueError("edge weights must be positive")
            self.edges[(min(a, b), max(a, b))] = float(w)
        self.neighbors = [[] for _ in range(self.n)]
        for (a, b), w in self.edges.items():
            self.neighbors[a].append((b, w))
            self.neighbors[b].append((a, w))
        self.connected = self._check_connected()

    def _check_connected(self):
        if self.n == 0:
            return True
        seen = np.zeros(self.n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            v = stack.pop()
            for u, _ in self.neighbors[v]:
                if not seen[u]:
                    seen[u] = True
                    stack.append(u)
        return bool(seen.all())

    def weight(self, a, b):
        return self.edges[(min(a, b), max(a, b))]

    def degree_weight(self, x):
        return sum(w for _, w in self.neighbors[x])

    def jump_rates(self):
        """CTMC data: holding rate r_x = deg_w(x) / (2 mu_x) and jump laws."""
        rates = np.array([self.degree_weight(x) / (2.0 * self.mu[x]) for x in range(self.n)])
        targets, cumprobs = [], []
        for x in range(self.n):
            nb = self.neighbors[x]
            ws = np.array([w for _, w in nb], dtype=float)
            targets.append(np.array([y for y, _ in nb], dtype=int))
            cumprobs.append(np.cumsum(ws) / ws.sum() if len(nb) else np.empty(0))
        return rates, targets, cumprobs


def path_graph(n, mu=1.0, w=1.0):
    edges = {(i, i + 1): w for i in range(n - 1)}
    return WeightedGraph(n, np.full(n, mu), edges)


def cycle_graph(n, mu=1.0, w=1.0):
    edges = {(i, (i + 1) % n): w for i in range(n)}
    return WeightedGraph(n, np.full(n, mu), edges)


def random_connected_graph(n, rng, extra_edge_prob=0.3, mu_range=(0.5, 2.0),
                           w_range=(0.5, 2.0)):
    """Random spanning tree plus extra edges; random measures and weights."""
    mu = rng.uniform(*mu_range, size=n)
    edges = {}
    order = rng.permutation(n)
    for i in range(1, n):
        a = order[i]
        b = order[rng.integers(0, i)]
        edges[(min(a, b), max(a, b))] = rng.uniform(*w_range)
    for a, b in itertools.combinations(range(n), 2):
        if (a, b) not in edges and rng.random() < extra_edge_prob:
            edges[(a, b)] = rng.uniform(*w_range)
    return WeightedGraph(n, mu, edges)


def build_grid_graph(space: ModelSpace, h: float, rect=None) -> WeightedGraph:
    """Finite-volume grid discretization of a box, interval, or half-space rectangle.

    Euclidean boxes get mu_x = h^m and w_xy = h^{m-2}; the hyperbolic
    half-space rectangle uses the chart metric, mu_x = h^m / x_m^m and
    w_xy = h^{m-2} / xbar_m^{m-2} with xbar_m the edge midpoint height.
    The resulting graph stores ``interior`` (grid points not on the
    rectangle boundary) for Dirichlet masking.
    """
    if not h > 0:
        raise ValueError("spacing must be positive")
    if space.kind in (geometry.BOX, geometry.INTERVAL):
        lo, hi = (np.asarray(b, dtype=float) for b in space.bounds)
    elif space.kind == geometry.HYPERBOLIC:
        if rect is None:
            raise ValueError("hyperbolic grids need an explicit rectangle")
        lo, hi = (np.asarray(b, dtype=float) for b in rect)
        if lo[-1] <= 0:
            raise ValueError("half-space rectangle must have positive heights")
    else:
        raise ValueError("grids are built over bounded domains")
    m = space.dim
    counts = (hi - lo) / h
    shape = np.rint(counts).astype(int)
    if np.any(np.abs(counts - shape) > 1e-9 * np.maximum(1, shape)) or np.any(shape < 1):
        raise ValueError("spacing must divide the box evenly")
    shape = shape + 1  # grid points per axis, boundary included

    idx = {}
    coords = []
    for flat, multi in enumerate(itertools.product(*(range(k) for k in shape))):
        idx[multi] = flat
        coords.append(lo + h * np.asarray(multi))
    coords = np.asarray(coords)

    hyperbolic = space.kind == geometry.HYPERBOLIC
    if hyperbolic:
        mu = h**m / coords[:, -1] ** m
    else:
        mu = np.full(len(coords), h**m)

    edges = {}
    for multi, a in idx.items():
        for ax in range(m):
            nxt = list(multi)
            nxt[ax] += 1
            b = idx.get(tuple(nxt))
            if b is None:
                continue
            if hyperbolic:
                mid_h = 0.5 * (coords[a][-1] + coords[b][-1])
                w = h ** (m - 2) / mid_h ** (m - 2)
            else:
                w = h ** (m - 2)
            edges[(a, b)] = w

    g = WeightedGraph(len(coords), mu, edges, coords=coords)
    interior = [idx[multi] for multi in idx
                if all(0 < multi[ax] < shape[ax] - 1 for ax in range(m))]
    g.interior = np.array(sorted(interior), dtype=int)
    return g


class BundleData:
    """Rank and per-edge unitary transports; U_yx = U_xy^* by construction."""

    def __init__(self, graph, rank, transports=None):
        self.graph = graph
        self.rank = int(rank)
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        self.transports = {}
        if transports:
            eye = np.eye(self.rank)
            for (a, b), U in transports.items():
                U = np.asarray(U, dtype=complex)
                if U.shape != (self.rank, self.rank):
                    raise ValueError("transport rank mismatch")
                if np.linalg.norm(U @ U.conj().T - eye) > HERMITICITY_TOL * 10:
                    raise ValueError(f"transport on edge ({a}, {b}) is not unitary")
                key = (min(a, b), max(a, b))
                if key not in graph.edges:
                    raise ValueError(f"transport on non-edge ({a}, {b})")
                self.transports[key] = U if (a, b) == key else U.conj().T

    @property
    def trivial(self):
        return not self.transports

    def transport(self, a, b):
        """Unitary carried by a jump a -> b."""
        key = (min(a, b), max(a, b))
        U = self.transports.get(key)
        if U is None:
            return np.eye(self.rank)
        return U if (a, b) == key else U.conj().T


def attach_gauge(graph: WeightedGraph, rank: int, field: str, *, angles=None,
                 vector_potential=None, unitaries=None) -> BundleData:
    """Attach connection data to a graph.

    ``field`` selects: ``trivial``; ``u1_from_angles`` with an
    antisymmetric angle map {(a, b): theta}; ``u1_from_vector_potential``
    with A evaluated by a midpoint line integral (needs coordinates);
    ``explicit`` with given unitaries.
    """
    if field == "trivial":
        return BundleData(graph, rank)
    if field == "u1_from_angles":
        if rank != 1:
            raise ValueError("u1 gauge fields have rank 1")
        transports = {}
        seen = {}
        for (a, b), theta in angles.items():
            key = (min(a, b), max(a, b))
            th = theta if (a, b) == key else -theta
            if key in seen and abs(seen[key] - th) > 1e-15:
                raise ValueError(f"angles on edge {key} are not antisymmetric")
            seen[key] = th
            transports[key] = np.array([[np.exp(1j * th)]])
        return BundleData(graph, 1, transports)
    if field == "u1_from_vector_potential":
        if rank != 1:
            raise ValueError("u1 gauge fields have rank 1")
        if graph.coords is None:
            raise ValueError("vector-potential gauge needs embedded coordinates")
        transports = {}
        for (a, b) in graph.edges:
            xa, xb = graph.coords[a], graph.coords[b]
            theta = float(np.dot(vector_potential(0.5 * (xa + xb)), xb - xa))
            transports[(a, b)] = np.array([[np.exp(1j * theta)]])
        return BundleData(graph, 1, transports)
    if field == "explicit":
        return BundleData(graph, rank, unitaries)
    raise ValueError(f"unknown gauge field {field!r}")


def holonomy(bundle: BundleData, cycle) -> np.ndarray:
    """Ordered product of edge transports around a closed cycle."""
    cycle = list(cycle)
    if cycle[0] != cycle[-1]:
        raise ValueError("cycle must be closed (first vertex repeated at the end)")
    U = np.eye(bundle.rank, dtype=complex)
    for a, b in zip(cycle[:-1], cycle[1:]):
        if (min(a, b), max(a, b)) not in bundle.graph.edges:
            raise ValueError(f"cycle step ({a}, {b}) is not an edge")
        U = U @ bundle.transport(a, b)
    return U


class PotentialField:
    """Per-vertex Hermitian fiber potentials with a spectral +/- split."""

    def __init__(self, values, rank=None):
        V = np.asarray(values)
        if V.ndim == 1:
            V = V.reshape(-1, 1, 1)
        if rank is not None and V.shape[1] != rank:
            raise ValueError("potential rank mismatch")
        herm_defect = np.max(np.abs(V - np.conj(np.swapaxes(V, 1, 2))))
        if herm_defect > HERMITICITY_TOL:
            raise ValueError(f"potential not Hermitian (defect {herm_defect:.2e})")
        self.values = V.astype(complex)
        self.rank = V.shape[1]
        evals, evecs = np.linalg.eigh(self.values)
        plus = np.einsum("xij,xj,xkj->xik", evecs, np.maximum(evals, 0.0), evecs.conj())
        minus = np.einsum("xij,xj,xkj->xik", evecs, np.maximum(-evals, 0.0), evecs.conj())
        self.plus, self.minus = plus, minus
        self.eigvals, self.eigvecs = evals, evecs

    @staticmethod
    def scalar(values):
        return PotentialField(np.asarray(values, dtype=float))

    @property
    def is_real_scalar(self):
        return self.rank == 1 and np.max(np.abs(self.values.imag)) == 0.0

    def min_eigenvalues(self):
        """Scalar floor w(x) = min sigma(V(x)), the natural comparison potential."""
        return self.eigvals[:, 0]


class SchrodingerOperator:
    """Assembled lattice operator, optionally Dirichlet-restricted.

    ``matrix`` acts on section vectors in the original coordinates and is
    self-adjoint w.r.t. the mu-weighted inner product; ``sym`` is the
    Hermitian conjugated matrix used for all spectral work.
    """

    def __init__(self, graph, bundle, potential, matrix, kept, mu):
        self.graph = graph
        self.bundle = bundle
        self.potential = potential
        self.kept = kept                      # original vertex index per block row
        self.mu = mu                          # measure per kept vertex
        self.rank = bundle.rank if bundle is not None else 1
        self.n = len(kept)
        self.dim = matrix.shape[0]
        self._matrix = matrix
        scale = np.repeat(np.sqrt(mu), self.rank)
        sym = (scale[:, None] * matrix) / scale[None, :]
        defect = np.max(np.abs(sym - sym.conj().T))
        self.hermiticity_defect = float(defect)
        if defect > HERMITICITY_TOL * max(1.0, float(np.max(np.abs(sym)))):
            raise ValueError(f"assembled operator not Hermitian (defect {defect:.2e})")
        self.sym = 0.5 * (sym + sym.conj().T)
        self._scale = scale
        self._eig = None
        self._expm_cache = {}

    @property
    def matrix(self):
        """Operator matrix in the original (mu-weighted) coordinates."""
        if self.dim > SPARSE_THRESHOLD:
            return sp.csr_matrix(self._matrix)
        return self._matrix

    # -- spectral machinery ------------------------------------------------

    def eigh(self):
        if self._eig is None:
            if self.dim > 4000:
                raise ValueError("dense eigendecomposition capped at dimension 4000")
            self._eig = np.linalg.eigh(self.sym)
        return self._eig

    def expm(self, t):
        """Matrix of e^{-tH} acting in the original coordinates."""
        key = float(t)
        if key not in self._expm_cache:
            evals, evecs = self.eigh()
            core = (evecs * np.exp(-key * evals)) @ evecs.conj().T
            self._expm_cache[key] = (core / self._scale[:, None]) * self._scale[None, :]
            if len(self._expm_cache) > 64:
                self._expm_cache.pop(next(iter(self._expm_cache)))
        return self._expm_cache[key]

    def spectrum(self):
        return self.eigh()[0]

    # -- section utilities ---------------------------------------------------

    def section(self, values):
        """Flatten per-vertex fiber values into an operator-domain vector."""
        arr = np.asarray(values)
        if arr.shape == (self.dim,):
            return arr
        return arr.reshape(self.dim)

    def fiber_norms(self, f):
        """Per-vertex fiber norms |f(x)| of a section vector."""
        return np.linalg.norm(np.reshape(f, (self.n, self.rank)), axis=1)

    def inner(self, f, g):
        """mu-weighted inner product of sections."""
        wf = np.repeat(self.mu, self.rank)
        return complex(np.sum(wf * np.conj(f) * g))

    def form(self, f):
        """Quadratic form <H f, f>_mu (real for Hermitian data)."""
        return float(np.real(self.inner(self._matrix @ f, f)))

    def lq_norm(self, f, q):
        """mu-weighted L^q norm of a section through its fiber norms."""
        a = self.fiber_norms(f)
        if q == math.inf:
            return float(np.max(a))
        return float(np.sum(self.mu * a**q) ** (1.0 / q))

    def dirichlet_form(self, f):
        """Edge-sum form (1/2) sum_w |f(x) - U_xy f(y)|^2, for cross-checks."""
        fv = np.reshape(f, (self.n, self.rank))
        pos = {int(v): i for i, v in enumerate(self.kept)}
        total = 0.0
        for (a, b), w in self.graph.edges.items():
            ia, ib = pos.get(a), pos.get(b)
            if ia is not None and ib is not None:
                diff = fv[ia] - self.bundle.transport(a, b) @ fv[ib]
                total += w * float(np.real(np.vdot(diff, diff)))
            elif ia is not None:  # masked neighbor: extension by zero
                total += w * float(np.real(np.vdot(fv[ia], fv[ia])))
            elif ib is not None:
                total += w * float(np.real(np.vdot(fv[ib], fv[ib])))
        return 0.5 * total


def assemble_operator(graph: WeightedGraph, bundle: BundleData | None = None,
                      potential: PotentialField | None = None,
                      dirichlet_mask=None) -> SchrodingerOperator:
    """Assemble the covariant Schrodinger matrix for a graph.

    ``dirichlet_mask`` is the subset of vertices kept (rows and columns
    outside it are deleted, realizing the Dirichlet restriction).
    """
    if bundle is None:
        bundle = BundleData(graph, 1)
    if bundle.graph is not graph:
        raise ValueError("bundle belongs to a different graph")
    rank = bundle.rank
    if potential is not None and potential.values.shape[0] != graph.n:
        raise ValueError("potential has wrong number of vertices")
    if potential is not None and potential.rank != rank:
        raise ValueError("potential rank does not match bundle rank")

    kept = np.arange(graph.n) if dirichlet_mask is None else np.array(sorted(dirichlet_mask), dtype=int)
    if len(kept) == 0:
        raise ValueError("dirichlet mask removes every vertex")
    pos = {int(v): i for i, v in enumerate(kept)}
    n = len(kept)

    real = bundle.trivial and (potential is None or potential.is_real_scalar)
    dtype = float if real else complex
    M = np.zeros((n * rank, n * rank), dtype=dtype)
    eye = np.eye(rank)

    for v in kept:
        i = pos[int(v)]
        diag = graph.degree_weight(int(v)) / (2.0 * graph.mu[int(v)])
        blk = diag * eye
        if potential is not None:
            blk = blk + (potential.values[int(v)].real if real else potential.values[int(v)])
        M[i * rank:(i + 1) * rank, i * rank:(i + 1) * rank] += blk
        for u, w in graph.neighbors[int(v)]:
            j = pos.get(u)
            if j is None:
                continue
            U = bundle.transport(int(v), u)
            Ublk = U.real if real else U
            M[i * rank:(i + 1) * rank, j * rank:(j + 1) * rank] -= (
                w / (2.0 * graph.mu[int(v)])) * Ublk

    return SchrodingerOperator(graph, bundle, potential, M, kept, graph.mu[kept])


def gauge_transform(bundle: BundleData, potential: PotentialField | None, gauges):
    """Conjugate transports and potentials by per-vertex unitaries g(x)."""
    transports = {}
    for (a, b), U in bundle.transports.items():
        transports[(a, b)] = gauges[a] @ U @ gauges[b].conj().T
    if bundle.trivial:
        for (a, b) in bundle.graph.edges:
            transports[(a, b)] = gauges[a] @ gauges[b].conj().T
    new_bundle = BundleData(bundle.graph, bundle.rank, transports)
    new_pot = None
    if potential is not None:
        vals = np.array([gauges[x] @ potential.values[x] @ gauges[x].conj().T
                         for x in range(bundle.graph.n)])
        vals = 0.5 * (vals + np.conj(np.swapaxes(vals, 1, 2)))
        new_pot = PotentialField(vals)
    return new_bundle, new_pot


# ---------------------------------------------------------------------------
# serialization


def to_json_doc(graph: WeightedGraph, bundle: BundleData | None = None,
                potential: PotentialField | None = None) -> dict:
    doc = {"vertices": [], "edges": [], "potential": []}
    for v in range(graph.n):
        entry = {"id": v, "mu": graph.mu[v]}
        if graph.coords is not None:
            entry["coords"] = list(map(float, graph.coords[v]))
        doc["vertices"].append(entry)
    for (a, b), w in sorted(graph.edges.items()):
        entry = {"a": a, "b": b, "w": w}
        if bundle is not None and not bundle.trivial:
            U = bundle.transport(a, b)
            if bundle.rank == 1:
                entry["theta"] = float(np.angle(U[0, 0]))
            else:
                entry["U"] = [[[float(z.real), float(z.imag)] for z in row] for row in U]
        doc["edges"].append(entry)
    if potential is not None:
        for v in range(graph.n):
            V = potential.values[v]
            doc["potential"].append(
                {"id": v, "V": [[[float(z.real), float(z.imag)] for z in row] for row in V]})
    return doc


def from_json_doc(doc: dict):
    verts = sorted(doc["vertices"], key=lambda e: e["id"])
    n = len(verts)
    mu = np.array([e["mu"] for e in verts], dtype=float)
    coords = None
    if verts and "coords" in verts[0]:
        coords = np.array([e["coords"] for e in verts], dtype=float)
    edges, angles, unitaries = {}, {}, {}
    for e in doc["edges"]:
        a, b = e["a"], e["b"]
        edges[(a, b)] = e["w"]
        if "theta" in e:
            angles[(a, b)] = e["theta"]
        elif "U" in e:
            unitaries[(a, b)] = np.array([[complex(re, im) for re, im in row] for row in e["U"]])
    graph = WeightedGraph(n, mu, edges, coords=coords)
    bundle = None
    if angles:
        bundle = attach_gauge(graph, 1, "u1_from_angles", angles=angles)
    elif unitaries:
        rank = next(iter(unitaries.values())).shape[0]
        bundle = attach_gauge(graph, rank, "explicit", unitaries=unitaries)
    potential = None
    if doc.get("potential"):
        ids = sorted(doc["potential"], key=lambda e: e["id"])
        vals = np.array([[[complex(re, im) for re, im in row] for row in e["V"]] for e in ids])
        potential = PotentialField(vals)
    return graph, bundle, potential


def export_matrix_market(op: SchrodingerOperator, path, comment=""):
    from scipy.io import mmwrite
    mmwrite(str(path), sp.coo_matrix(op._matrix), comment=comment)
