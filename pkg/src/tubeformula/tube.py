"""Geometric zeta function, its residues and the truncated tube formula.

For eps < h the inner tube volume of the whole tiling equals the sum of the
residues of

    zeta_T(s, eps) = zeta(s) eps^(d-s) B(s),
    B(s) = sum_{i<d} h^(s-i) kappa_i / (s-i) + g^(s-d) kappa_d / (s-d) + Lambda(s),
    Lambda(s) = int_h^g u^(s-d-1) lambda(u) du,

taken over the complex dimensions and the integers 0..d-1 (not d itself).
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import (AccuracyError, CoincidenceError, DomainError, HypothesisViolation,
                     PoleProximityError)
from .quadrature import circle_residue, composite_rule
from .spectrum import ScalingZeta, complex_dimensions, zeta_eval

COINCIDENCE_TOL = 1e-9
_CHUNK = 2 ** 22


@dataclass(frozen=True, eq=False)
class GeometricZeta:
    """Scaling zeta function paired with a generator profile.

    ``panels`` is the minimum number of Gauss-Legendre panels over [log h, log g];
    more are added for oscillatory or fast-growing integrands (|s| large).
    """

    zeta: ScalingZeta
    profile: object
    panels: int = 8
    nodes: int = 16
    _rules: dict = field(default_factory=dict, init=False, repr=False)
    _brackets: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if self.panels < 4:
            raise ValueError("need at least 4 quadrature panels")
        knots = np.unique(np.log(np.asarray(self.profile.lambda_knots(), dtype=float)))
        object.__setattr__(self, "_tbreaks", knots)

    @property
    def d(self):
        return self.profile.d

    def _panel_level(self, s):
        """Total panel count for ``s``: a power of two times ``panels``."""
        width = self._tbreaks[-1] - self._tbreaks[0]
        need = np.abs(np.asarray(s) - self.d) * width / 3.0
        ratio = np.maximum(need / self.panels, 1.0)
        return self.panels * 2 ** np.ceil(np.log2(ratio)).astype(int)

    def _rule(self, total):
        """Nodes t = log u and weights w * lambda(e^t) for ``total`` panels."""
        rule = self._rules.get(total)
        if rule is None:
            br = self._tbreaks
            widths = np.diff(br)
            per = np.maximum(1, np.ceil(total * widths / (br[-1] - br[0])).astype(int))
            t, w = composite_rule(br, per, self.nodes)
            wl = w * np.asarray(self.profile.lam(np.exp(t)), dtype=float)
            rule = (t, wl)
            self._rules[total] = rule
        return rule

    def _lambda_at(self, s, total):
        t, wl = self._rule(int(total))
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        out = np.empty(s.shape, dtype=complex)
        step = max(1, _CHUNK // max(len(t), 1))
        for k in range(0, len(s), step):
            blk = s[k:k + step]
            out[k:k + step] = np.exp(np.outer(blk - self.d, t)) @ wl
        return out

    def lambda_transform(self, s, check=False):
        """Lambda(s) by composite Gauss-Legendre quadrature in t = log u.

        With ``check`` the panel count is doubled and the two results must agree
        to 1e-8 relative, else :class:`AccuracyError`.
        """
        scalar = np.ndim(s) == 0
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        if self.profile.lam is None or len(self._tbreaks) < 2:
            out = np.zeros(s.shape, dtype=complex)
            return complex(out[0]) if scalar else out
        levels = self._panel_level(s)
        out = np.empty(s.shape, dtype=complex)
        for lev in np.unique(levels):
            sel = levels == lev
            out[sel] = self._lambda_at(s[sel], lev)
            if check:
                fine = self._lambda_at(s[sel], 2 * lev)
                err = np.abs(fine - out[sel])
                if np.any(err > 1e-8 * np.maximum(np.abs(fine), 1e-300)):
                    bad = s[sel][int(np.argmax(err))]
                    raise AccuracyError(
                        f"Lambda({bad}) changed by {err.max():.3g} under panel doubling")
        return complex(out[0]) if scalar else out

    def bracket(self, s):
        """B(s): the generator factor of zeta_T (everything except zeta(s) eps^(d-s))."""
        scalar = np.ndim(s) == 0
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        prof = self.profile
        d, h, g, kappa = prof.d, prof.h, prof.g, prof.kappa
        out = g ** (s - d) * kappa[d] / (s - d)
        for i in range(d):
            out = out + h ** (s - i) * kappa[i] / (s - i)
        out = out + self.lambda_transform(s)
        return complex(out[0]) if scalar else out

    def cached_bracket(self, s):
        """B(s) for an array of points, memoised across calls (eps independent)."""
        s = np.asarray(s, dtype=complex)
        missing = [x for x in s.tolist() if x not in self._brackets]
        if missing:
            vals = self.bracket(np.array(missing))
            self._brackets.update(zip(missing, vals.tolist()))
        return np.array([self._brackets[x] for x in s.tolist()], dtype=complex)

    def zeta_t_array(self, s, eps):
        s = np.asarray(s, dtype=complex)
        return self.zeta.evaluate_array(s) * np.exp((self.d - s) * math.log(eps)) * self.bracket(s)


def lambda_transform(gz, s, check=False):
    return gz.lambda_transform(s, check=check)


def geometric_zeta(gz, s, eps):
    s = complex(s)
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps!r}")
    for i in range(gz.d + 1):
        if abs(s - i) <= 1e-14 * max(1.0, abs(s)):
            raise PoleProximityError(f"zeta_T evaluated at the integer pole {i}", point=s,
                                     magnitude=abs(s - i))
    z = zeta_eval(gz.zeta, s)
    return z * eps ** (gz.d - s) * gz.bracket(s)


# --- Mellin transform of x -> V_G(x, eps) -----------------------------------

def _check_mellin_strip(gz, s):
    if not -gz.d < s.real < 1 - gz.d:
        raise DomainError(f"Re s = {s.real} outside the strip ({-gz.d}, {1 - gz.d})")


def mellin_closed(gz, s, eps):
    s = complex(s)
    _check_mellin_strip(gz, s)
    prof = gz.profile
    d, h, g, kappa = prof.d, prof.h, prof.g, prof.kappa
    inner = kappa[d] / (g ** (s + d) * (s + d))
    inner += sum(kappa[j] / (h ** (s + j) * (s + j)) for j in range(d))
    inner -= gz.lambda_transform(-s)
    return -eps ** (s + d) * inner


def _mellin_pieces(gz, s, eps, nodes=20):
    """(saturated, band, polynomial) parts of the Mellin integral over x."""
    prof = gz.profile
    d, h, g, kappa = prof.d, prof.h, prof.g, prof.kappa
    saturated = -kappa[d] * (eps / g) ** (s + d) / (s + d)
    polynomial = -sum(kappa[j] * eps ** (d - j) * (eps / h) ** (s + j) / (s + j)
                      for j in range(d))
    band = 0.0j
    if prof.lam is not None and h < g:
        xbreaks = np.sort(eps / np.asarray(prof.lambda_knots(), dtype=float))
        span = math.log(xbreaks[-1] / xbreaks[0])
        panels = max(16, math.ceil(2.0 * abs(s + d) * span * xbreaks[-1] / xbreaks[0]))
        per = np.maximum(1, np.ceil(panels * np.diff(xbreaks) / (xbreaks[-1] - xbreaks[0])))
        x, w = composite_rule(xbreaks, per.astype(int), nodes)
        lam = np.asarray(prof.lam(np.clip(eps / x, h, g)), dtype=float)
        band = complex(np.sum(w * x ** (s + d - 1) * lam))
    return complex(saturated), band, complex(polynomial)


def mellin_quadrature(gz, s, eps):
    """Mellin transform of V_G(., eps) integrated directly in x (oracle for mellin_closed)."""
    s = complex(s)
    _check_mellin_strip(gz, s)
    return sum(_mellin_pieces(gz, s, eps))


# --- residues ---------------------------------------------------------------

def _require_below_h(gz, eps):
    if not 0 < eps < gz.profile.h:
        raise HypothesisViolation(
            f"the tube formula needs 0 < eps < h = {gz.profile.h!r}, got eps = {eps!r}")


def _coincident_pole(dims, point):
    if dims is None:
        return None
    for p in dims.poles:
        if abs(p.omega - point) <= COINCIDENCE_TOL:
            return p
    return None


def residue_integer(gz, i, eps, dims=None):
    """Residue of zeta_T at the integer i (0 <= i < d): zeta(i) kappa_i eps^(d-i)."""
    if int(i) != i or not 0 <= i < gz.d:
        raise DomainError(f"integer pole index must lie in 0..{gz.d - 1}, got {i!r}")
    _require_below_h(gz, eps)
    if _coincident_pole(dims, i) is not None or abs(gz.zeta.denominator(i)) <= COINCIDENCE_TOL:
        raise CoincidenceError(
            f"s = {i} coincides with a complex dimension; use residue_contour")
    return (zeta_eval(gz.zeta, i) * gz.profile.kappa[i] * eps ** (gz.d - i)).real


def residue_complex(gz, pole, eps, dims=None):
    """Residue at a complex dimension; multiple or integer-coincident poles use the contour."""
    _require_below_h(gz, eps)
    w = complex(pole.omega)
    at_integer = any(abs(w - k) <= COINCIDENCE_TOL for k in range(gz.d + 1))
    if pole.order != 1 or pole.zeta_residue is None or at_integer:
        return residue_contour(gz, w, eps, dims=dims)
    return complex(pole.zeta_residue * eps ** (gz.d - w) * gz.bracket(w))


def _default_radius(gz, omega, dims):
    if dims is None:
        dims = complex_dimensions(gz.zeta, abs(omega.imag) + 10.0, d=gz.d)
    points = [complex(k) for k in range(gz.d + 1)] + [p.omega for p in dims.poles]
    dist = [abs(p - omega) for p in points if abs(p - omega) > COINCIDENCE_TOL]
    return 0.4 * min(dist)


def residue_contour(gz, omega, eps, radius=None, nodes=64, dims=None):
    """(1/2 pi i) times the integral of zeta_T(., eps) around a circle at ``omega``.

    The default radius is 0.4 times the distance to the nearest other
    singularity (integers 0..d and the poles of ``dims``).
    """
    omega = complex(omega)
    if radius is None:
        radius = _default_radius(gz, omega, dims)
    return circle_residue(lambda s: gz.zeta_t_array(s, eps), omega, radius, nodes=nodes)


# --- the tube formula -------------------------------------------------------

@dataclass(frozen=True)
class TubeEvaluation:
    eps: float
    N: int
    integer_part: float
    complex_part: float
    total: float
    imag_leak: float
    n_poles: int


def select_poles(dims, N):
    """Poles entering the truncated sum.

    Lattice case: |Im omega| <= N p (the symmetric partial sum |n| <= N of each
    pole family).  Otherwise the real poles plus the N lowest conjugate pairs.
    ``N=None`` keeps every pole of ``dims``.
    """
    if N is None:
        return list(dims.poles)
    if dims.lattice is not None:
        height = N * dims.period
        if height > dims.window * (1.0 + 1e-9):
            raise ValueError(
                f"window {dims.window} does not cover index N={N} (needs {height:.6g})")
        return [p for p in dims.poles if abs(p.omega.imag) <= height * (1.0 + 1e-9) + 1e-9]
    real = [p for p in dims.poles if p.omega.imag == 0.0]
    upper = sorted((p for p in dims.poles if p.omega.imag > 0), key=lambda p: p.omega.imag)[:N]
    keep = {p.omega for p in upper}
    return real + [p for p in dims.poles if p.omega in keep or p.omega.conjugate() in keep
                   and p.omega.imag < 0]


def tube_formula(gz, dims, eps, N=None):
    """Truncated residue sum for the inner eps-tube volume of the tiling."""
    _require_below_h(gz, eps)
    d = gz.d
    poles = select_poles(dims, N)
    integer_terms = []
    merged = set()
    for i in range(d):
        hit = _coincident_pole(dims, i)
        if hit is None and abs(gz.zeta.denominator(i)) > COINCIDENCE_TOL:
            integer_terms.append(residue_integer(gz, i, eps, dims))
        else:
            integer_terms.append(residue_contour(gz, i, eps, dims=dims).real)
            if hit is not None:
                merged.add(hit.omega)
    simple = [p for p in poles if p.order == 1 and p.zeta_residue is not None
              and p.omega not in merged]
    other = [p for p in poles if p not in simple and p.omega not in merged]
    terms = []
    if simple:
        w = np.array([p.omega for p in simple])
        zr = np.array([p.zeta_residue for p in simple])
        terms.append(zr * np.exp((d - w) * math.log(eps)) * gz.cached_bracket(w))
    for p in other:
        terms.append(np.array([residue_contour(gz, p.omega, eps, dims=dims)]))
    csum = complex(np.sum(np.concatenate(terms))) if terms else 0j
    integer_part = math.fsum(integer_terms)
    return TubeEvaluation(
        eps=float(eps),
        N=N,
        integer_part=integer_part,
        complex_part=csum.real,
        total=integer_part + csum.real,
        imag_leak=abs(csum.imag),
        n_poles=len(poles),
    )
