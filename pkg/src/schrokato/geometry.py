"""Model spaces with exact metric data.

Supported spaces are the Euclidean R^m, the hyperbolic half-space model
H^m (m = 2, 3), axis-aligned Euclidean boxes and intervals.  All of them
come with closed-form distances and ball volumes, which is what makes the
kernel and potential-class computations downstream checkable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

EUCLIDEAN = "euclidean"
HYPERBOLIC = "hyperbolic_half_space"
BOX = "euclidean_box"
INTERVAL = "interval"

_KINDS = (EUCLIDEAN, HYPERBOLIC, BOX, INTERVAL)


@dataclass(frozen=True)
class ModelSpace:
    """A model manifold or domain in its global chart.

    ``bounds`` is ``None`` for the homogeneous spaces and an (2, dim)
    array ``[lower, upper]`` for boxes and intervals.
    """

    kind: str
    dim: int
    bounds: tuple | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown space kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.kind == HYPERBOLIC and self.dim not in (2, 3):
            raise ValueError("hyperbolic half-space supported for dim 2 and 3 only")
        if self.kind in (BOX, INTERVAL):
            if self.bounds is None:
                raise ValueError(f"{self.kind} needs bounds")
            lo, hi = self.bounds
            if len(lo) != self.dim or len(hi) != self.dim:
                raise ValueError("bounds length must equal dim")
            if not all(a < b for a, b in zip(lo, hi)):
                raise ValueError("box/interval bounds must be strictly ordered")
        elif self.bounds is not None:
            raise ValueError(f"{self.kind} takes no bounds")

    # -- constructors ---------------------------------------------------

    @staticmethod
    def euclidean(dim):
        return ModelSpace(EUCLIDEAN, dim)

    @staticmethod
    def hyperbolic(dim):
        return ModelSpace(HYPERBOLIC, dim)

    @staticmethod
    def box(lower, upper):
        lo = tuple(float(a) for a in lower)
        hi = tuple(float(b) for b in upper)
        return ModelSpace(BOX, len(lo), (lo, hi))

    @staticmethod
    def interval(length):
        if not length > 0:
            raise ValueError("interval length must be positive")
        return ModelSpace(INTERVAL, 1, ((0.0,), (float(length),)))

    # -- point handling -------------------------------------------------

    @property
    def length(self):
        """Length of an interval space."""
        if self.kind != INTERVAL:
            raise ValueError("length only defined for intervals")
        return self.bounds[1][0] - self.bounds[0][0]

    def point(self, coords) -> "Point":
        return Point(self, np.asarray(coords, dtype=float))

    def coords(self, x) -> np.ndarray:
        """Validate ``x`` (Point or array-like) and return its chart coordinates."""
        c = x.coords if isinstance(x, Point) else np.asarray(x, dtype=float)
        if c.shape != (self.dim,):
            raise ValueError(f"point has {c.shape} coordinates, space has dim {self.dim}")
        if self.kind == HYPERBOLIC and not c[-1] > 0.0:
            raise ValueError("hyperbolic half-space point needs a positive last coordinate")
        if self.kind in (BOX, INTERVAL):
            lo, hi = self.bounds
            if np.any(c < lo) or np.any(c > hi):
                raise ValueError("point outside domain")
        return c

    @property
    def homogeneous(self):
        return self.kind in (EUCLIDEAN, HYPERBOLIC)

    def origin(self) -> "Point":
        """A canonical base point (chart origin, height 1 for hyperbolic)."""
        c = np.zeros(self.dim)
        if self.kind == HYPERBOLIC:
            c[-1] = 1.0
        elif self.kind in (BOX, INTERVAL):
            lo, hi = self.bounds
            c = (np.asarray(lo) + np.asarray(hi)) / 2.0
        return Point(self, c)


@dataclass(frozen=True)
class Point:
    space: ModelSpace
    coords: np.ndarray = field(repr=True)

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))
        self.space.coords(self.coords)


def distance(space: ModelSpace, x, y) -> float:
    """Geodesic distance between two points.

    Euclidean/box/interval use the ambient chart norm (the intrinsic
    distance of a non-convex domain is not modelled).  The half-space
    distance is evaluated through asinh for numerical stability near
    coincident points.
    """
    cx, cy = space.coords(x), space.coords(y)
    d = float(np.linalg.norm(cx - cy))
    if space.kind != HYPERBOLIC:
        return d
    # cosh(rho) = 1 + |x-y|^2 / (2 x_m y_m), rewritten with asinh
    return 2.0 * math.asinh(d / (2.0 * math.sqrt(cx[-1] * cy[-1])))


def sphere_area(m: int) -> float:
    """Surface measure of the unit sphere S^{m-1} in R^m."""
    return 2.0 * math.pi ** (m / 2.0) / math.gamma(m / 2.0)


def ball_volume_euclidean(m: int, s: float) -> float:
    return math.pi ** (m / 2.0) / math.gamma(m / 2.0 + 1.0) * s**m


def volume_ball(space: ModelSpace, x, s: float) -> float:
    """Riemannian volume of the metric ball B(x, s).

    On the hyperbolic spaces the volume is x-independent and computed by
    radial quadrature of |S^{m-1}| sinh^{m-1}.  For boxes/intervals only
    balls contained in the domain are supported.
    """
    if s < 0:
        raise ValueError("radius must be nonnegative")
    cx = space.coords(x)
    if s == 0:
        return 0.0
    m = space.dim
    if space.kind == EUCLIDEAN:
        return ball_volume_euclidean(m, s)
    if space.kind == HYPERBOLIC:
        val, _ = integrate.quad(lambda r: math.sinh(r) ** (m - 1), 0.0, s,
                                epsabs=1e-12, epsrel=1e-10)
        return sphere_area(m) * val
    lo, hi = np.asarray(space.bounds[0]), np.asarray(space.bounds[1])
    if np.any(cx - s < lo) or np.any(cx + s > hi):
        raise ValueError("ball not contained in the domain; intersection volumes unsupported")
    return ball_volume_euclidean(m, s)


def _log_volume_ball(space: ModelSpace, s: float) -> float:
    """log mu(B(x, s)) on the homogeneous spaces, stable for large s."""
    m = space.dim
    if space.kind == EUCLIDEAN:
        return math.log(math.pi ** (m / 2.0) / math.gamma(m / 2.0 + 1.0)) + m * math.log(s)
    if m == 2:
        # 2 pi (cosh s - 1); cosh s - 1 = e^s (1 + e^{-2s}) / 2 - 1
        if s > 30.0:
            return math.log(2.0 * math.pi) + s - math.log(2.0) + math.log1p(math.exp(-2 * s) - 2 * math.exp(-s))
        return math.log(2.0 * math.pi * (math.cosh(s) - 1.0))
    # m == 3: pi (sinh 2s - 2s) = pi e^{2s}/2 (1 - e^{-4s} - 4s e^{-2s})
    if s > 15.0:
        return math.log(math.pi) + 2 * s - math.log(2.0) + math.log1p(-math.exp(-4 * s) - 4 * s * math.exp(-2 * s))
    return math.log(math.pi * (math.sinh(2 * s) - 2 * s))


def euclidean_radius(space: ModelSpace, b: float) -> float:
    """Certified lower bound for the chart radius with metric accuracy b.

    Euclidean spaces are globally flat (+inf).  On H^m the normal
    coordinates at any point have metric eigenvalues in
    [1, (sinh r / r)^2], so the radius where sinh(r)/r = sqrt(b) is a
    certified lower bound (the supremum over all charts is not computable).
    """
    if not b > 1:
        raise ValueError("accuracy b must be > 1")
    if space.kind == EUCLIDEAN:
        return math.inf
    if space.kind != HYPERBOLIC:
        raise ValueError("euclidean_radius defined for the homogeneous spaces only")
    target = math.sqrt(b)
    f = lambda r: math.sinh(r) / r - target
    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
    return float(optimize.brentq(f, 1e-12, hi, xtol=1e-12, rtol=8.9e-16))


@dataclass(frozen=True)
class CompletenessReport:
    stochastically_complete: str
    parabolic: str
    notes: tuple
    volume_test_partials: tuple
    parabolic_test_partials: tuple


def _volume_integral_partials(space, integrand, horizons=(1e2, 1e3, 1e4)):
    vals = []
    lo = 1.0
    total = 0.0
    for hi in horizons:
        part, _ = integrate.quad(integrand, lo, hi, epsabs=1e-10, epsrel=1e-8, limit=200)
        total += part
        vals.append(total)
        lo = hi
    return tuple(vals)


def _diverges(partials, horizons=(1e2, 1e3, 1e4)):
    """Divergence surrogate: partial integrals keep growing on the log-T scale."""
    logs = [math.log10(h) for h in horizons]
    s1 = (partials[1] - partials[0]) / (logs[1] - logs[0])
    s2 = (partials[2] - partials[1]) / (logs[2] - logs[1])
    scale = max(1.0, abs(partials[-1]))
    return s2 > 1e-3 * scale and (s1 <= 0 or s2 / s1 > 0.3)


def classify_completeness(space: ModelSpace, x0=None) -> CompletenessReport:
    """Stochastic completeness / parabolicity verdicts for a model space.

    The volume tests integrate s / log mu(B(x0, s)) and s / mu(B(x0, s))
    up to growing horizons and report divergence or numerical convergence;
    convergence of the test alone is inconclusive, so the known spectral
    and Green-function facts are used to sharpen the verdict.  The
    basepoint is accepted for interface compatibility; ball volumes on
    the supported homogeneous spaces do not depend on it.
    """
    notes = []
    if space.kind in (BOX, INTERVAL):
        return CompletenessReport(
            "no", "no",
            ("killed kernel mass < 1", "bounded Dirichlet domain has a finite Green function"),
            (), ())

    vol_partials = _volume_integral_partials(
        space, lambda s: s / _log_volume_ball(space, s))
    par_partials = _volume_integral_partials(
        space, lambda s: s * math.exp(-_log_volume_ball(space, s)))

    stoch = "yes" if _diverges(vol_partials) else "test-inconclusive"
    if stoch == "yes":
        notes.append("volume test integral diverges")

    if _diverges(par_partials):
        parabolic = "yes"
        notes.append("parabolicity volume test integral diverges")
    elif space.kind == HYPERBOLIC:
        parabolic = "no"
        notes.append("spectral bottom (m-1)^2/8 > 0 rules out parabolicity")
    elif space.kind == EUCLIDEAN and space.dim >= 3:
        parabolic = "no"
        notes.append("finite Coulomb potential exists")
    else:
        parabolic = "test-inconclusive"
    return CompletenessReport(stoch, parabolic, tuple(notes), vol_partials, par_partials)


def spectral_bottom(space: ModelSpace) -> float:
    """Bottom of the spectrum of the free operator on a model space."""
    if space.kind == EUCLIDEAN:
        return 0.0
    if space.kind == HYPERBOLIC:
        return (space.dim - 1) ** 2 / 8.0
    if space.kind == INTERVAL:
        return 0.5 * (math.pi / space.length) ** 2
    raise ValueError(f"no closed-form spectral bottom for {space.kind}")
