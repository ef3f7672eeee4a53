"""Finsler gauges F, their polars F°, Wulff balls and anisotropic perimeter.

A gauge is an even, convex, 1-homogeneous function F on R^n.  Three families
are supported: p-norms, quadratic forms sqrt(x^T A x) with A symmetric
positive definite, and 2-D polytope gauges given by the vertices of the
convex body K = {F <= 1}.  The polar F° is the support function of K; the
Wulff ball of radius r is the sub-level set {F°(x - x0) <= r}, and kappa_n
denotes the volume of the unit Wulff ball {F° <= 1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Gauge",
    "WulffBall",
    "GaugeError",
    "parse_gauge",
    "euclidean",
    "pnorm",
    "quadratic",
    "polytope",
    "aniso_perimeter",
    "unit_ball_volume",
    "unit_sphere_measure",
]


class GaugeError(ValueError):
    """Invalid gauge construction or evaluation."""


def unit_ball_volume(n):
    """Volume omega_n of the Euclidean unit ball in R^n."""
    return math.pi ** (n / 2) / math.gamma(1 + n / 2)


def unit_sphere_measure(n):
    """(n-1)-measure of the unit sphere in R^n, equal to n * omega_n."""
    return n * unit_ball_volume(n)


def _as_points(x, n):
    pts = np.asarray(x, dtype=float)
    if pts.shape[-1] != n:
        raise GaugeError(f"point dimension {pts.shape[-1]} != gauge dimension {n}")
    return pts


def _convex_hull_2d(points):
    """Andrew monotone chain; returns hull vertices in CCW order."""
    pts = sorted(set(map(tuple, points)))
    if len(pts) < 3:
        raise GaugeError("polytope needs at least 3 distinct vertices")

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1], dtype=float)


@dataclass(frozen=True)
class Gauge:
    """A Finsler gauge F with cached polar data.

    Attributes
    ----------
    dimension : int
    variant : str
        One of "pnorm", "quadratic", "polytope".
    p : float, optional
        Exponent for the pnorm variant (p >= 1, math.inf allowed).
    matrix : ndarray, optional
        SPD matrix A for the quadratic variant, F(x) = sqrt(x^T A x).
    vertices : ndarray, optional
        CCW hull vertices of K = {F <= 1} for the polytope variant (n = 2).
    """

    dimension: int
    variant: str
    p: float | None = None
    matrix: np.ndarray | None = None
    vertices: np.ndarray | None = None
    _aux: dict = field(default_factory=dict, repr=False, compare=False)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def pnorm(p, dimension=2):
        if p < 1:
            raise GaugeError("pnorm requires p >= 1")
        return Gauge(dimension=int(dimension), variant="pnorm", p=float(p))

    @staticmethod
    def euclidean(dimension=2):
        return Gauge.pnorm(2.0, dimension)

    @staticmethod
    def quadratic(matrix):
        A = np.atleast_2d(np.asarray(matrix, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise GaugeError("quadratic gauge needs a square matrix")
        if not np.allclose(A, A.T, rtol=0, atol=1e-12):
            raise GaugeError("quadratic gauge matrix must be symmetric")
        eigvals = np.linalg.eigvalsh(A)
        if eigvals.min() <= 0:
            raise GaugeError("quadratic gauge matrix must be positive definite")
        g = Gauge(dimension=A.shape[0], variant="quadratic", matrix=A)
        g._aux["inv"] = np.linalg.inv(A)
        g._aux["det"] = float(np.linalg.det(A))
        return g

    @staticmethod
    def polytope(vertices):
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise GaugeError("polytope gauges are supported in dimension 2 only")
        hull = _convex_hull_2d(verts)
        if not np.allclose(np.sort(hull, axis=0), np.sort(-hull, axis=0), atol=1e-9):
            raise GaugeError("polytope vertex set must be symmetric about the origin")
        # origin strictly inside: every edge line a.x = 1 must have a.0 = 0 < 1
        facets = _polygon_facets(hull)
        g = Gauge(dimension=2, variant="polytope", vertices=hull)
        g._aux["facets"] = facets
        return g

    # -- evaluation --------------------------------------------------------

    def value(self, x):
        """F(x). Accepts a single point or an array of points (..., n)."""
        pts = _as_points(x, self.dimension)
        if self.variant == "pnorm":
            if math.isinf(self.p):
                return np.max(np.abs(pts), axis=-1)
            return np.linalg.norm(pts, ord=self.p, axis=-1)
        if self.variant == "quadratic":
            return np.sqrt(np.einsum("...i,ij,...j->...", pts, self.matrix, pts))
        # Minkowski gauge of K: max over facet normals a_f of <x, a_f>
        return np.max(pts @ self._aux["facets"].T, axis=-1)

    def polar(self, x):
        """F°(x) = sup_{xi in K} <x, xi>, the support function of K."""
        pts = _as_points(x, self.dimension)
        if self.variant == "pnorm":
            q = _conjugate_exponent(self.p)
            if math.isinf(q):
                return np.max(np.abs(pts), axis=-1)
            return np.linalg.norm(pts, ord=q, axis=-1)
        if self.variant == "quadratic":
            return np.sqrt(np.einsum("...i,ij,...j->...", pts, self._aux["inv"], pts))
        return np.max(pts @ self.vertices.T, axis=-1)

    def grad(self, x, polar=False):
        """Gradient of F (or of F° when polar=True) at x != 0.

        Satisfies the Euler identity <x, grad F(x)> = F(x); for smooth
        variants also F(grad F°(x)) = F°(grad F(x)) = 1.  Polytope gauges
        return the active facet/vertex (smallest index on ties).
        """
        pts = _as_points(x, self.dimension)
        scalar = pts.ndim == 1
        pts = np.atleast_2d(pts)
        norms = (self.polar(pts) if polar else self.value(pts))
        if np.any(norms == 0):
            raise GaugeError("gauge gradient undefined at the origin")
        if self.variant == "pnorm":
            p = _conjugate_exponent(self.p) if polar else self.p
            g = _pnorm_grad(pts, p)
        elif self.variant == "quadratic":
            A = self._aux["inv"] if polar else self.matrix
            g = (pts @ A) / norms[:, None]
        elif polar:
            g = self.vertices[np.argmax(pts @ self.vertices.T, axis=-1)]
        else:
            g = self._aux["facets"][np.argmax(pts @ self._aux["facets"].T, axis=-1)]
        return g[0] if scalar else g

    def kappa(self):
        """Volume of the unit Wulff ball {F° <= 1}.

        Analytic for all supported variants: omega_n scalings for p-norms,
        omega_n * sqrt(det A) for quadratic gauges, polar-polygon area for
        polytope gauges.
        """
        n = self.dimension
        if self.variant == "pnorm":
            q = _conjugate_exponent(self.p)
            if math.isinf(q):
                return 2.0 ** n
            # volume of the unit q-ball
            return (2 * math.gamma(1 + 1 / q)) ** n / math.gamma(1 + n / q)
        if self.variant == "quadratic":
            return unit_ball_volume(n) * math.sqrt(self._aux["det"])
        polar_verts = _polar_polygon(self.vertices)
        return _shoelace_area(polar_verts)

    def bilipschitz_bounds(self, samples=4096):
        """(alpha, beta) with alpha|x| <= F(x) <= beta|x|, sampled on the sphere."""
        n = self.dimension
        if self.variant == "quadratic":
            ev = np.linalg.eigvalsh(self.matrix)
            return math.sqrt(ev[0]), math.sqrt(ev[-1])
        if n == 2:
            th = np.linspace(0, 2 * math.pi, samples, endpoint=False)
            dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)
        else:
            rng = np.random.default_rng(0)
            dirs = rng.normal(size=(samples, n))
            dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
        vals = self.value(dirs)
        return float(vals.min()), float(vals.max())

    def spec_string(self):
        """Round-trippable config string for this gauge."""
        if self.variant == "pnorm":
            if self.p == 2.0:
                return "euclidean"
            return "pnorm:inf" if math.isinf(self.p) else f"pnorm:{self.p:g}"
        if self.variant == "quadratic":
            A = self.matrix
            if self.dimension != 2:
                raise GaugeError("quadratic spec strings are 2-D only")
            return f"quadratic:{A[0, 0]:g},{A[0, 1]:g},{A[1, 1]:g}"
        pts = ";".join(f"{vx:g},{vy:g}" for vx, vy in self.vertices)
        return f"polytope:{pts}"


# module-level aliases used throughout
euclidean = Gauge.euclidean
pnorm = Gauge.pnorm
quadratic = Gauge.quadratic
polytope = Gauge.polytope


def _conjugate_exponent(p):
    if p == 1.0:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _pnorm_grad(pts, p):
    if math.isinf(p):
        # max-norm subgradient: unit vector at the max-|coordinate| (first on ties)
        k = np.argmax(np.abs(pts), axis=-1)
        g = np.zeros_like(pts)
        rows = np.arange(pts.shape[0])
        g[rows, k] = np.sign(pts[rows, k])
        return g
    if p == 1.0:
        return np.sign(pts)
    norms = np.linalg.norm(pts, ord=p, axis=-1, keepdims=True)
    return np.sign(pts) * (np.abs(pts) / norms) ** (p - 1.0)


def _polygon_facets(hull):
    """Outer facet normals a_f of K scaled so the facet plane is <x, a_f> = 1."""
    facets = []
    m = len(hull)
    for i in range(m):
        v, w = hull[i], hull[(i + 1) % m]
        e = w - v
        nrm = np.array([e[1], -e[0]])
        d = nrm @ v
        if d < 1e-12:  # hull is CCW, so d <= 0 means the origin is not inside
            raise GaugeError("polytope must contain the origin strictly inside")
        facets.append(nrm / d)
    return np.array(facets)


def _polar_polygon(hull):
    """Vertices of the polar body K° = {x : <x, v> <= 1 for all v in K}."""
    return _polygon_facets(hull)


def _shoelace_area(verts):
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


@dataclass(frozen=True)
class WulffBall:
    """Anisotropic ball {x : F°(x - center) <= radius}."""

    gauge: Gauge
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.radius <= 0:
            raise GaugeError("Wulff ball radius must be positive")

    def contains(self, x):
        return self.gauge.polar(np.asarray(x) - self.center) <= self.radius

    def volume(self):
        return self.gauge.kappa() * self.radius ** self.gauge.dimension


def aniso_perimeter(polygon, gauge):
    """Anisotropic perimeter sum_edges |e| * F(nu) of a simple 2-D polygon.

    nu is the outward unit normal.  Satisfies the anisotropic isoperimetric
    inequality P_F(E) >= n kappa_n^{1/n} |E|^{1-1/n}, with equality for fine
    discretizations of Wulff shapes.
    """
    if gauge.dimension != 2:
        raise GaugeError("anisotropic perimeter implemented for n = 2 only")
    verts = np.asarray(polygon, dtype=float)
    if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
        raise GaugeError("polygon must be an (m, 2) vertex array, m >= 3")
    _require_simple(verts)
    signed = 0.5 * np.sum(verts[:, 0] * np.roll(verts[:, 1], -1)
                          - verts[:, 1] * np.roll(verts[:, 0], -1))
    if signed < 0:
        verts = verts[::-1]
    edges = np.roll(verts, -1, axis=0) - verts
    lengths = np.linalg.norm(edges, axis=1)
    if np.any(lengths == 0):
        raise GaugeError("polygon has a zero-length edge")
    normals = np.stack([edges[:, 1], -edges[:, 0]], axis=-1) / lengths[:, None]
    return float(np.sum(lengths * gauge.value(normals)))


def _require_simple(verts):
    from shapely.geometry import LinearRing

    try:
        ring = LinearRing(verts)
    except Exception as exc:  # degenerate input
        raise GaugeError(f"invalid polygon: {exc}") from None
    if not ring.is_simple or not ring.is_valid:
        raise GaugeError("polygon is self-intersecting")


def parse_gauge(spec, dimension=2):
    """Parse a gauge config string.

    Grammar: ``euclidean`` | ``pnorm:<p>`` | ``quadratic:<a11,a12,a22>``
    (2-D) | ``polytope:<x1,y1;x2,y2;...>``.
    """
    spec = spec.strip().lower()
    if spec == "euclidean":
        return Gauge.euclidean(dimension)
    if spec.startswith("pnorm:"):
        arg = spec.split(":", 1)[1]
        p = math.inf if arg in ("inf", "infinity") else float(arg)
        return Gauge.pnorm(p, dimension)
    if spec.startswith("quadratic:"):
        parts = [float(v) for v in spec.split(":", 1)[1].split(",")]
        if len(parts) != 3:
            raise GaugeError("quadratic spec needs a11,a12,a22")
        a11, a12, a22 = parts
        return Gauge.quadratic([[a11, a12], [a12, a22]])
    if spec.startswith("polytope:"):
        verts = [tuple(float(v) for v in pair.split(","))
                 for pair in spec.split(":", 1)[1].split(";") if pair]
        return Gauge.polytope(verts)
    raise GaugeError(f"unknown gauge spec {spec!r}")
