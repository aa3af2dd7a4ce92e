"""Generators and the volume of their inner eps-neighborhoods.

A generator is described by a :class:`GeneratorProfile`: a polynomial
``sum_i kappa_i eps^(d-i)`` below ``h``, an arbitrary continuous function
``lambda`` on ``[h, g]`` and the constant volume ``-kappa_d`` above the
inradius ``g``.  Planar polygons supply the polynomial coefficients exactly
and an independent raster estimate of the whole curve.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import raster
from .errors import DomainError, GeometryError

SQRT3 = math.sqrt(3.0)


def _segments_intersect(p1, p2, q1, q2, tol=0.0):
    def orient(a, b, c):
        v = float((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
        if abs(v) <= tol:
            return 0
        return 1 if v > 0 else -1

    def on_segment(a, b, c):
        return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    return ((o1 == 0 and on_segment(p1, p2, q1)) or (o2 == 0 and on_segment(p1, p2, q2))
            or (o3 == 0 and on_segment(q1, q2, p1)) or (o4 == 0 and on_segment(q1, q2, p2)))


@dataclass(frozen=True, eq=False)
class Polygon:
    """Simple planar polygon, stored counter-clockwise.

    Clockwise input is reversed.  Zero-length edges, self-intersections and
    vanishing area raise :class:`GeometryError`.
    """

    vertices: tuple
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        pts = np.array(self.vertices, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
            raise GeometryError("a polygon needs at least 3 planar vertices")
        if not np.all(np.isfinite(pts)):
            raise GeometryError("polygon vertices must be finite")
        if _signed_area(pts) < 0:
            pts = pts[::-1].copy()
        if self.check:
            _validate(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "vertices", tuple(map(tuple, pts.tolist())))
        object.__setattr__(self, "_pts", pts)

    @property
    def points(self):
        return self._pts

    def __len__(self):
        return len(self._pts)

    @property
    def edge_lengths(self):
        return np.hypot(*(np.roll(self._pts, -1, axis=0) - self._pts).T)

    @property
    def perimeter(self):
        return math.fsum(self.edge_lengths)

    @property
    def area(self):
        return _signed_area(self._pts)

    @property
    def bbox(self):
        lo, hi = self._pts.min(axis=0), self._pts.max(axis=0)
        return lo[0], lo[1], hi[0], hi[1]

    def interior_angles(self):
        """Interior angle at each vertex, in (0, 2 pi).

        The turn at a vertex is signed by the cross product of the incoming and
        outgoing edges; a right turn on a counter-clockwise polygon is reflex.
        """
        e_in = self._pts - np.roll(self._pts, 1, axis=0)
        e_out = np.roll(self._pts, -1, axis=0) - self._pts
        cross = e_in[:, 0] * e_out[:, 1] - e_in[:, 1] * e_out[:, 0]
        dot = np.einsum("ij,ij->i", e_in, e_out)
        return math.pi - np.arctan2(cross, dot)

    def contains(self, x, y):
        p = self._pts
        q = np.roll(p, -1, axis=0)
        cross = (p[:, 1] > y) != (q[:, 1] > y)
        a, b = p[cross], q[cross]
        xc = a[:, 0] + (y - a[:, 1]) * (b[:, 0] - a[:, 0]) / (b[:, 1] - a[:, 1])
        return bool(np.count_nonzero(xc > x) % 2)

    def transformed(self, matrix, offset):
        """Image under ``p -> matrix @ p + offset`` (orientation is restored)."""
        pts = self._pts @ np.asarray(matrix, dtype=float).T + np.asarray(offset, dtype=float)
        return Polygon(pts, check=False)


def _signed_area(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * math.fsum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def _validate(pts):
    n = len(pts)
    edges = np.roll(pts, -1, axis=0) - pts
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    scale = max(1.0, float(np.abs(pts).max()))
    if np.any(lengths <= 1e-12 * scale):
        k = int(np.argmin(lengths))
        raise GeometryError(f"degenerate edge {k} (zero length)")
    if _signed_area(pts) <= 1e-12 * scale * scale:
        raise GeometryError("polygon has zero area")
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n],
                                   tol=1e-12 * scale * scale):
                raise GeometryError(f"polygon is not simple: edges {i} and {j} intersect")


def polygon_area(polygon):
    return polygon.area


def corner_defect(alpha):
    """Area defect of a vertex with interior angle ``alpha``.

    (1 + cos a) / sin a for a convex corner, (pi - a) / 2 for a reflex one;
    both vanish at a = pi.
    """
    if not math.isfinite(alpha) or not 0.0 < alpha < 2.0 * math.pi:
        raise DomainError(f"interior angle must lie in (0, 2 pi), got {alpha!r}")
    if alpha < math.pi:
        return (1.0 + math.cos(alpha)) / math.sin(alpha)
    return 0.5 * (math.pi - alpha)


def steiner_coefficients(polygon):
    """``(kappa1, kappa0)`` with V(eps) = kappa1 eps + kappa0 eps^2 for small eps."""
    lengths = polygon.edge_lengths
    if np.any(lengths == 0.0):
        raise GeometryError("degenerate edge (zero length)")
    kappa1 = math.fsum(lengths)
    kappa0 = -math.fsum(corner_defect(float(a)) for a in polygon.interior_angles())
    return kappa1, kappa0


# --- lambda: the volume curve between h and g -------------------------------

class LambdaSpec:
    """Volume function on ``[lo, hi]``.  Subclasses evaluate on scalars and arrays."""

    lo: float
    hi: float

    @property
    def knots(self):
        """Points of [lo, hi] where the derivative may jump (end points included)."""
        return (self.lo, self.hi)

    def __call__(self, u):
        raise NotImplementedError


@dataclass(frozen=True)
class ClosedFormLambda(LambdaSpec):
    name: str
    func: object = field(repr=False, compare=False)
    lo: float
    hi: float
    breaks: tuple = ()

    @property
    def knots(self):
        return tuple(sorted({self.lo, self.hi, *self.breaks}))

    def __call__(self, u):
        return self.func(u)


@dataclass(frozen=True, eq=False)
class TabulatedLambda(LambdaSpec):
    """Piecewise-linear interpolation of sampled ``(u, lambda(u))`` pairs."""

    u: tuple
    values: tuple
    min_knots: int = field(default=256, repr=False)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if u.ndim != 1 or u.shape != v.shape:
            raise GeometryError("lambda table needs matching 1-d u and value arrays")
        if len(u) < max(2, self.min_knots):
            raise GeometryError(f"lambda table needs at least {self.min_knots} knots, got {len(u)}")
        if np.any(np.diff(u) <= 0):
            raise GeometryError("lambda table abscissae must be strictly increasing")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise GeometryError("lambda table must be finite")
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "_u", u)
        object.__setattr__(self, "_v", v)

    @property
    def lo(self):
        return float(self._u[0])

    @property
    def hi(self):
        return float(self._u[-1])

    @property
    def knots(self):
        return tuple(self._u.tolist())

    def __call__(self, u):
        out = np.interp(u, self._u, self._v)
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class GeneratorProfile:
    """Inner-tube volume profile of a generator.

    ``kappa`` holds kappa_0 .. kappa_d with kappa_d = -Vol(G).  ``lam`` may be
    ``None`` only for a Steiner-like generator (h == g).
    """

    d: int
    kappa: tuple
    h: float
    g: float
    lam: LambdaSpec = None
    name: str = ""

    def __post_init__(self):
        kappa = tuple(float(k) for k in self.kappa)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "g", float(self.g))
        d, h, g = self.d, self.h, self.g
        if int(d) != d or d < 1:
            raise GeometryError(f"ambient dimension must be a positive integer, got {d!r}")
        if len(kappa) != d + 1:
            raise GeometryError(f"expected {d + 1} kappa coefficients, got {len(kappa)}")
        if not all(math.isfinite(k) for k in kappa):
            raise GeometryError("kappa coefficients must be finite")
        if kappa[d] >= 0:
            raise GeometryError("kappa_d must be negative (it is minus the volume)")
        if not (h > 0 and math.isfinite(g) and h <= g):
            raise GeometryError(f"need 0 < h <= g, got h={h!r}, g={g!r}")
        if self.lam is None:
            if h != g:
                raise GeometryError("lambda is required when h < g")
            lam_h = lam_g = -kappa[d]
        else:
            if abs(self.lam.lo - h) > 1e-12 * g or abs(self.lam.hi - g) > 1e-12 * g:
                raise GeometryError(
                    f"lambda domain [{self.lam.lo}, {self.lam.hi}] must be [h, g] = [{h}, {g}]")
            lam_h, lam_g = float(self.lam(h)), float(self.lam(g))
        poly_h = self.polynomial(h)
        if abs(poly_h - lam_h) > 1e-9 * max(1.0, abs(lam_h)):
            raise GeometryError(
                f"polynomial branch {poly_h!r} and lambda {lam_h!r} disagree at h")
        if abs(lam_g + kappa[d]) > 1e-9 * abs(kappa[d]):
            raise GeometryError(f"lambda(g) = {lam_g!r} differs from the volume {-kappa[d]!r}")

    @property
    def volume(self):
        return -self.kappa[self.d]

    @property
    def steiner_like(self):
        return self.h == self.g

    def polynomial(self, eps):
        d = self.d
        return math.fsum(self.kappa[i] * eps ** (d - i) for i in range(d))

    def lam_value(self, u):
        if self.lam is None:
            return self.volume
        return float(self.lam(u))

    def lambda_knots(self):
        return (self.h, self.g) if self.lam is None else self.lam.knots


def profile_volume(profile, eps):
    if eps < profile.h:
        return profile.polynomial(eps)
    if eps <= profile.g:
        return profile.lam_value(eps)
    return profile.volume


def scaled_profile_volume(profile, x, eps):
    """Inner eps-tube volume of the copy of the generator scaled by ``x``."""
    d, kappa = profile.d, profile.kappa
    u = eps / x
    if u > profile.g:
        return -x ** d * kappa[d]
    if u >= profile.h:
        return x ** d * profile.lam_value(u)
    return math.fsum(kappa[j] * x ** j * eps ** (d - j) for j in range(d))


# --- builtins ---------------------------------------------------------------

def hexagram_lambda(u):
    """Inner tube volume of the unit-edge hexagram for 1/sqrt(3) <= u <= 1."""
    u = np.asarray(u, dtype=float)
    root = np.sqrt(np.maximum(16.0 * u * u - 4.0, 0.0))
    arg = np.clip((2.0 * SQRT3 - root) / (8.0 * u), -1.0, 1.0)
    out = (6.0 * SQRT3 + 3.0 * root) / 4.0 + 6.0 * u * u * np.arcsin(arg)
    return float(out) if out.ndim == 0 else out


def hexagram_polygon():
    """Unit-edge six-pointed star centred at the origin.

    Tips lie at distance sqrt(3) and reflex corners at distance 1; the first
    vertex is the bottom tip and the order is counter-clockwise.
    """
    verts = []
    for k in range(12):
        ang = math.radians(270.0 + 30.0 * k)
        rad = SQRT3 if k % 2 == 0 else 1.0
        verts.append((rad * math.cos(ang), rad * math.sin(ang)))
    return Polygon(verts)


def hexagram_builtin():
    polygon = hexagram_polygon()
    h = 1.0 / SQRT3
    lam = ClosedFormLambda("hexagram", hexagram_lambda, h, 1.0)
    profile = GeneratorProfile(
        d=2, kappa=(math.pi - 6.0 * SQRT3, 12.0, -3.0 * SQRT3), h=h, g=1.0, lam=lam,
        name="hexagram")
    return polygon, profile


def unit_square_builtin():
    polygon = Polygon([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    profile = GeneratorProfile(d=2, kappa=(-4.0, 4.0, -1.0), h=0.5, g=0.5, name="unit_square")
    return polygon, profile


BUILTIN_GENERATORS = {
    "hexagram": hexagram_builtin,
    "unit_square": unit_square_builtin,
}


# --- raster oracle ----------------------------------------------------------

@dataclass(frozen=True)
class RasterVolume:
    value: float
    error_bound: float
    resolution: float
    band_pixels: int
    inside_pixels: int


def inner_tube_volume_raster(polygon, eps, resolution=1024, pgm_path=None):
    """Raster estimate of the inner eps-tube area of ``polygon``.

    A pixel counts iff its center lies inside the polygon at distance < eps
    from the boundary (brute force over all edges).  ``error_bound`` is
    2 * perimeter / resolution.
    """
    if not (eps > 0 and math.isfinite(eps)):
        raise DomainError(f"eps must be positive, got {eps!r}")
    if resolution < 64:
        raise DomainError("resolution must be at least 64 pixels per unit")
    win = raster.Window.covering(*polygon.bbox, resolution)
    inside, band = raster.band_mask(polygon.points, eps, win)
    if pgm_path is not None:
        raster.write_pgm(pgm_path, band)
    nband = int(np.count_nonzero(band))
    return RasterVolume(
        value=nband / resolution ** 2,
        error_bound=2.0 * polygon.perimeter / resolution,
        resolution=float(resolution),
        band_pixels=nband,
        inside_pixels=int(np.count_nonzero(inside)),
    )
