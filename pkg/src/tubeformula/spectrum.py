"""Scaling zeta function, similarity dimension and complex dimensions."""

from dataclasses import dataclass, field
from fractions import Fraction
import math

import numpy as np

from .errors import PoleProximityError, SearchError
from .quadrature import circle_residue

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ScalingZeta:
    """zeta(s) = 1 / (1 - sum_j r_j^s), continued meromorphically to the plane."""

    ratios: tuple

    def __post_init__(self):
        ratios = tuple(float(r) for r in self.ratios)
        object.__setattr__(self, "ratios", ratios)
        if len(ratios) < 2:
            raise ValueError("the scaling zeta function needs at least two ratios")
        if not all(0.0 < r < 1.0 for r in ratios):
            raise ValueError("scaling ratios must lie in (0, 1)")
        groups = {}
        for r in ratios:
            groups[r] = groups.get(r, 0) + 1
        rho = np.array(sorted(groups, reverse=True))
        object.__setattr__(self, "_rho", rho)
        object.__setattr__(self, "_count", np.array([groups[r] for r in rho], dtype=float))
        object.__setattr__(self, "_logr", np.log(rho))

    @classmethod
    def of(cls, system):
        return cls(system.ratios)

    def denominator(self, s):
        """1 - sum_j r_j^s, summed with compensation (scalar ``s``)."""
        s = complex(s)
        terms = self._count * np.exp(s * self._logr)
        return complex(math.fsum([1.0, *(-terms.real)]), math.fsum(-terms.imag))

    def denominator_array(self, s):
        s = np.asarray(s, dtype=complex)
        return 1.0 - np.exp(s[..., None] * self._logr) @ self._count

    def denominator_prime(self, s):
        """Derivative of the denominator: sum_j r_j^s log(1/r_j)."""
        s = np.asarray(s, dtype=complex)
        out = np.exp(s[..., None] * self._logr) @ (-self._count * self._logr)
        return complex(out) if out.ndim == 0 else out

    def __call__(self, s):
        return zeta_eval(self, s)

    def evaluate_array(self, s):
        return 1.0 / self.denominator_array(s)


def zeta_eval(zeta, s):
    den = zeta.denominator(s)
    if abs(den) <= 1e-14:
        raise PoleProximityError(
            f"zeta evaluated at {s} next to a pole (|denominator| = {abs(den):.3g})",
            point=s, magnitude=abs(den))
    return 1.0 / den


def similarity_dimension(zeta):
    """Unique real root D of sum_j r_j^D = 1: bisection, then Newton."""
    def f(s):
        return math.fsum(float(c) * r ** s for c, r in zip(zeta._count, zeta._rho)) - 1.0

    lo, hi = 0.0, 1.0
    while f(hi) > 0:
        lo, hi = hi, 2.0 * hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-6:
            break
    s = 0.5 * (lo + hi)
    for _ in range(50):
        step = f(s) / zeta.denominator_prime(s).real
        s += step
        if abs(step) <= 4e-16 * max(1.0, abs(s)):
            break
    return s


@dataclass(frozen=True)
class Lattice:
    """r_j = base^k_j; ``multiplicities`` maps exponent k to the number of maps."""

    base: float
    multiplicities: dict

    @property
    def period(self):
        return TWO_PI / math.log(1.0 / self.base)

    def polynomial(self):
        """Coefficients (highest degree first) of 1 - sum_k m_k u^k."""
        top = max(self.multiplicities)
        coeffs = np.zeros(top + 1)
        coeffs[-1] = 1.0
        for k, m in self.multiplicities.items():
            coeffs[top - k] -= m
        return coeffs


def lattice_detect(zeta, tol=1e-9, max_denominator=64):
    logs = [math.log(1.0 / r) for r in zeta._rho]
    ref = logs[-1] if len(logs) == 1 else min(logs)
    fracs = []
    for L in logs:
        x = L / ref
        q = Fraction(x).limit_denominator(max_denominator)
        if abs(x - q) > tol:
            return None
        fracs.append(q)
    den = math.lcm(*(q.denominator for q in fracs))
    ints = [q.numerator * (den // q.denominator) for q in fracs]
    g = math.gcd(*ints)
    exps = [n // g for n in ints]
    base = math.exp(-ref * g / den)
    mult = {}
    for k, c in zip(exps, zeta._count):
        mult[k] = mult.get(k, 0) + int(c)
    return Lattice(base, dict(sorted(mult.items())))


@dataclass(frozen=True)
class Pole:
    omega: complex
    zeta_residue: complex
    order: int = 1


@dataclass(frozen=True)
class DimensionSet:
    D: float
    lattice: Lattice
    poles: tuple
    window: float
    strip: tuple
    method: str
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def period(self):
        return None if self.lattice is None else self.lattice.period

    def csv_rows(self):
        for p in self.poles:
            res = p.zeta_residue if p.zeta_residue is not None else complex("nan")
            yield (p.omega.real, p.omega.imag, res.real, res.imag, p.order)


# --- pole search ------------------------------------------------------------

class _BoundaryHit(Exception):
    pass


def _arg_change(zeta, pts):
    """Total change of arg(denominator) along the closed polyline ``pts``."""
    pts = np.asarray(pts, dtype=complex)
    vals = zeta.denominator_array(pts)
    for _ in range(30):
        scale = 1.0 + np.abs(np.exp(pts[:, None].real * zeta._logr) @ zeta._count)
        if np.any(np.abs(vals) < 1e-9 * scale):
            raise _BoundaryHit
        step = np.angle(np.roll(vals, -1) / vals)
        bad = np.nonzero(np.abs(step) > math.pi / 4)[0]
        if len(bad) == 0:
            return float(np.sum(step))
        mids = 0.5 * (pts[bad] + np.roll(pts, -1)[bad])
        pts = np.insert(pts, bad + 1, mids)
        vals = np.insert(vals, bad + 1, zeta.denominator_array(mids))
    raise SearchError("argument change did not resolve after 30 refinements")


def _box_outline(box, n=32):
    x0, x1, y0, y1 = box
    t = np.linspace(0.0, 1.0, n, endpoint=False)
    return np.concatenate([
        x0 + (x1 - x0) * t + 1j * y0,
        x1 + 1j * (y0 + (y1 - y0) * t),
        x1 - (x1 - x0) * t + 1j * y1,
        x0 + 1j * (y1 - (y1 - y0) * t),
    ])


def count_zeros(zeta, box):
    """Zeros of 1 - sum r_j^s inside ``box = (x0, x1, y0, y1)`` (argument principle)."""
    turns = _arg_change(zeta, _box_outline(box)) / TWO_PI
    n = round(turns)
    if abs(turns - n) > 0.1:
        raise SearchError(f"non-integer winding {turns:.3f} on rectangle {box}")
    return int(n)


def _newton(zeta, s, order=1, maxiter=100):
    reach = 600.0 / float(np.max(np.abs(zeta._logr)))   # keep r^s finite
    for _ in range(maxiter):
        if not abs(s.real) < reach:
            return None
        f = zeta.denominator(s)
        fp = zeta.denominator_prime(s)
        if fp == 0:
            return None
        step = order * f / fp
        s = s - step
        if abs(step) <= 1e-14 * max(1.0, abs(s)):
            return s
    return None


def _inside(box, s, margin=0.0):
    x0, x1, y0, y1 = box
    return (x0 - margin <= s.real <= x1 + margin) and (y0 - margin <= s.imag <= y1 + margin)


def _split(box, axis, frac=0.5 + 1.0 / 97.0):
    x0, x1, y0, y1 = box
    if axis == 0:
        xm = x0 + frac * (x1 - x0)
        return (x0, xm, y0, y1), (xm, x1, y0, y1)
    ym = y0 + frac * (y1 - y0)
    return (x0, x1, y0, ym), (x0, x1, ym, y1)


def _search_box(zeta, box, count, found, depth=0):
    if count == 0:
        return
    x0, x1, y0, y1 = box
    size = max(x1 - x0, y1 - y0)
    if count == 1 or size < 1e-7:
        order = 1 if count == 1 else count
        s = _newton(zeta, complex(0.5 * (x0 + x1), 0.5 * (y0 + y1)), order=order)
        if s is not None and _inside(box, s, margin=1e-9 * max(1.0, abs(s))):
            found.append((s, order))
            return
        if size < 1e-7:
            raise SearchError(f"Newton failed to converge in rectangle {box}")
    if depth > 80:
        raise SearchError(f"subdivision depth exceeded in rectangle {box}")
    axis = 0 if (x1 - x0) >= (y1 - y0) else 1
    for frac in (0.5 + 1.0 / 97.0, 0.5 - 1.0 / 89.0, 0.5 + 1.0 / 31.0):
        try:
            a, b = _split(box, axis, frac)
            ca = count_zeros(zeta, a)
            cb = count_zeros(zeta, b)
        except _BoundaryHit:
            continue
        break
    else:
        raise SearchError(f"zeros on every trial split of rectangle {box}")
    if ca + cb != count:
        raise SearchError(f"inconsistent zero counts in rectangle {box}")
    _search_box(zeta, a, ca, found, depth + 1)
    _search_box(zeta, b, cb, found, depth + 1)


def _search_strip(zeta, window, strip, band=2.0):
    """All zeros with |Im| <= window in the strip, via argument principle.

    Only the upper half plane is searched; the lower half is its mirror image.
    """
    lo, hi = strip
    y = -0.1 * math.pi / math.e          # start just below the real axis
    found = []
    while y < window:
        top = min(y + band, window)
        box = (lo, hi, y, top)
        for shift in (0.0, 1e-3 * math.sqrt(2.0), -1e-3 * math.sqrt(3.0)):
            b = (lo, hi, y, top + shift if top < window else top)
            try:
                n = count_zeros(zeta, b)
            except _BoundaryHit:
                continue
            box = b
            break
        else:
            raise SearchError(f"zeros on the boundary of rectangle {box}")
        _search_box(zeta, box, n, found)
        y = box[3]
    return found


def _lattice_poles(zeta, lattice, window, strip):
    L = math.log(lattice.base)
    roots = np.roots(lattice.polynomial())
    out = []
    used = np.zeros(len(roots), dtype=bool)
    for i, u in enumerate(roots):
        if used[i]:
            continue
        near = np.abs(roots - u) <= 1e-7 * max(1.0, abs(u))
        used |= near
        order = int(np.count_nonzero(near))
        u = complex(np.mean(roots[near]))
        re = math.log(abs(u)) / L
        if not (strip[0] <= re <= strip[1]):
            continue
        theta = math.atan2(u.imag, u.real)
        span = window * abs(L) * (1.0 + 1e-12) + 1e-9
        for n in range(math.ceil((-span - theta) / TWO_PI), math.floor((span - theta) / TWO_PI) + 1):
            out.append((complex(re, (theta + TWO_PI * n) / L), order))
    return out


def _finish(zeta, raw, window):
    """Polish, snap to the real axis, mirror, attach residues."""
    tol = 1e-9
    upper, real = [], []
    for s, order in raw:
        s2 = _newton(zeta, s, order=order, maxiter=8) or s
        if abs(s2.imag) <= tol * max(1.0, abs(s2)):
            real.append((complex(s2.real, 0.0), order))
        elif s2.imag > 0 and s2.imag <= window * (1.0 + 1e-12) + 1e-9:
            upper.append((s2, order))
    real = _dedupe(real)
    upper = _dedupe(upper)
    poles = []
    for s, order in real + upper + [(s.conjugate(), o) for s, o in upper]:
        if abs(zeta.denominator(s)) > 1e-9 * max(1.0, float(np.sum(zeta._count * zeta._rho ** s.real))):
            raise SearchError(f"pole candidate {s} does not solve the Moran equation")
        res = 1.0 / complex(zeta.denominator_prime(s)) if order == 1 else None
        poles.append(Pole(s, res, order))
    poles.sort(key=lambda p: (p.omega.imag, p.omega.real))
    return tuple(poles)


def _dedupe(items):
    out = []
    for s, order in sorted(items, key=lambda t: (t[0].imag, t[0].real)):
        if any(abs(s - t) <= 1e-8 * max(1.0, abs(s)) for t, _ in out):
            continue
        out.append((s, order))
    return out


def complex_dimensions(zeta, window, strip=None, d=None, method="auto"):
    """Poles of the scaling zeta function with |Im| <= window inside ``strip``.

    ``method`` is ``"lattice"`` (roots of the polynomial in u = r^s),
    ``"search"`` (argument principle on rectangles) or ``"auto"``.
    """
    if not window > 0:
        raise ValueError("window must be positive")
    D = similarity_dimension(zeta)
    if strip is None:
        lo = -2.0 * d if d is not None else -4.0
        hi = float(d) if d is not None else D + 1.0
        strip = (lo, hi)
    strip = (float(strip[0]), float(strip[1]))
    if not strip[0] < D < strip[1]:
        raise ValueError(f"strip {strip} does not contain the similarity dimension {D}")
    lattice = lattice_detect(zeta)
    if method == "auto":
        method = "lattice" if lattice is not None else "search"
    diagnostics = {}
    if method == "lattice":
        if lattice is None:
            raise ValueError("ratios are not lattice; use method='search'")
        raw = _lattice_poles(zeta, lattice, window, strip)
    elif method == "search":
        raw = _search_strip(zeta, window, strip)
        try:
            diagnostics["zeros_near_left_edge"] = count_zeros(
                zeta, (strip[0], strip[0] + 0.25, -window, window))
        except (_BoundaryHit, SearchError):
            diagnostics["zeros_near_left_edge"] = None
    else:
        raise ValueError(f"unknown method {method!r}")
    poles = _finish(zeta, raw, window)
    return DimensionSet(D, lattice, poles, float(window), strip, method, diagnostics)


def zeta_residue_contour(zeta, omega, radius, nodes=64):
    return circle_residue(zeta.evaluate_array, omega, radius, nodes=nodes)
