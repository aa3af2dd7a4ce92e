import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tubeformula.errors import DomainError, GeometryError
from tubeformula.geometry import (ClosedFormLambda, GeneratorProfile, Polygon, TabulatedLambda,
                                  corner_defect, hexagram_builtin, hexagram_lambda,
                                  inner_tube_volume_raster, profile_volume,
                                  scaled_profile_volume, steiner_coefficients)
from tubeformula.raster import Window, inside_mask

SQ3 = math.sqrt(3.0)


def test_hexagram_polygon_measures(hexagram):
    poly, prof = hexagram
    assert len(poly) == 12
    assert poly.area == pytest.approx(3 * SQ3, rel=1e-14)
    assert poly.perimeter == pytest.approx(12.0, rel=1e-14)
    np.testing.assert_allclose(poly.edge_lengths, 1.0, rtol=1e-14)
    assert prof.volume == pytest.approx(poly.area, rel=1e-14)


def test_hexagram_steiner_coefficients(hexagram):
    k1, k0 = steiner_coefficients(hexagram[0])
    assert abs(k1 - 12.0) <= 1e-12
    assert abs(k0 - (math.pi - 6 * SQ3)) <= 1e-12
    assert (k1, k0) == pytest.approx(hexagram[1].kappa[1::-1], abs=1e-12)


def test_hexagram_angles(hexagram):
    ang = np.sort(hexagram[0].interior_angles())
    np.testing.assert_allclose(ang[:6], math.pi / 3, atol=1e-12)
    np.testing.assert_allclose(ang[6:], 4 * math.pi / 3, atol=1e-12)


def test_square_coefficients(square):
    assert steiner_coefficients(square[0]) == pytest.approx((4.0, -4.0), abs=1e-14)


@pytest.mark.parametrize("alpha, expected", [
    (math.pi / 2, 1.0),
    (math.pi / 3, SQ3),
    (math.pi, 0.0),
    (3 * math.pi / 2, -math.pi / 4),
    (4 * math.pi / 3, -math.pi / 6),
])
def test_corner_defect_values(alpha, expected):
    assert corner_defect(alpha) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("alpha", [0.0, 2 * math.pi, -1.0, math.nan])
def test_corner_defect_domain(alpha):
    with pytest.raises(DomainError):
        corner_defect(alpha)


@given(st.integers(3, 40), st.floats(0.1, 10.0), st.floats(0.0, 2 * math.pi))
def test_regular_polygon_coefficients(n, radius, phase):
    t = phase + 2 * math.pi * np.arange(n) / n
    poly = Polygon(np.c_[radius * np.cos(t), radius * np.sin(t)])
    k1, k0 = steiner_coefficients(poly)
    assert k1 == pytest.approx(2 * n * radius * math.sin(math.pi / n), rel=1e-12)
    assert k0 == pytest.approx(-n * math.tan(math.pi / n), rel=1e-12)


def test_clockwise_input_is_reoriented():
    poly = Polygon([(0, 0), (0, 1), (1, 1), (1, 0)])
    assert poly.area == pytest.approx(1.0)
    assert steiner_coefficients(poly) == pytest.approx((4.0, -4.0))


@pytest.mark.parametrize("verts", [
    [(0, 0), (1, 1), (1, 0), (0, 1)],          # bow tie
    [(0, 0), (1, 0), (1, 0), (0, 1)],          # repeated vertex
    [(0, 0), (1, 0), (2, 0)],                  # zero area
    [(0, 0), (1, 0)],
])
def test_invalid_polygons(verts):
    with pytest.raises(GeometryError):
        Polygon(verts)


def test_polygon_contains(hexagram):
    poly = hexagram[0]
    assert poly.contains(0.0, 0.0)
    assert poly.contains(0.0, -1.6)
    assert not poly.contains(0.9, -0.9)
    assert not poly.contains(5.0, 0.0)


# --- profile ----------------------------------------------------------------

def test_lambda_continuity_and_saturation(hexagram):
    prof = hexagram[1]
    h = 1 / SQ3
    assert prof.h == h and prof.g == 1.0
    assert abs(prof.polynomial(h) - (2 * SQ3 + math.pi / 3)) <= 1e-12
    assert abs(hexagram_lambda(h) - (2 * SQ3 + math.pi / 3)) <= 1e-12
    assert abs(hexagram_lambda(1.0) - 3 * SQ3) <= 1e-12


def test_hexagram_lambda_frozen_values():
    # independent evaluation with mpmath at 30 digits
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 30
    for u in (0.6, 0.7, 0.8, 0.9, 0.99):
        r = mpmath.sqrt(16 * mpmath.mpf(u) ** 2 - 4)
        ref = (6 * mpmath.sqrt(3) + 3 * r) / 4 + 6 * mpmath.mpf(u) ** 2 * mpmath.asin(
            (2 * mpmath.sqrt(3) - r) / (8 * mpmath.mpf(u)))
        assert hexagram_lambda(u) == pytest.approx(float(ref), rel=1e-14)
    assert hexagram_lambda(0.7) == pytest.approx(4.867462340008758, rel=1e-14)


def test_profile_volume_regimes(hexagram):
    prof = hexagram[1]
    assert profile_volume(prof, 0.1) == pytest.approx(1.2 + (math.pi - 6 * SQ3) * 0.01)
    assert profile_volume(prof, 0.8) == pytest.approx(hexagram_lambda(0.8))
    assert profile_volume(prof, 3.0) == prof.volume
    assert np.all(np.diff([profile_volume(prof, e) for e in np.linspace(0.01, 1.2, 200)]) >= 0)


def test_profile_validation(hexagram):
    lam = hexagram[1].lam
    base = dict(d=2, kappa=(math.pi - 6 * SQ3, 12.0, -3 * SQ3), h=1 / SQ3, g=1.0)
    with pytest.raises(GeometryError, match="negative"):
        GeneratorProfile(**{**base, "kappa": (0.0, 12.0, 3 * SQ3)}, lam=lam)
    with pytest.raises(GeometryError, match="required"):
        GeneratorProfile(**base)
    with pytest.raises(GeometryError, match="disagree"):
        GeneratorProfile(**{**base, "kappa": (0.0, 12.0, -3 * SQ3)}, lam=lam)
    with pytest.raises(GeometryError, match="h <= g"):
        GeneratorProfile(d=2, kappa=(-4, 4, -1), h=0.6, g=0.5)
    short = ClosedFormLambda("x", hexagram_lambda, 0.6, 1.0)
    with pytest.raises(GeometryError, match="domain"):
        GeneratorProfile(**base, lam=short)


def test_tabulated_lambda_matches_closed_form(hexagram):
    prof = hexagram[1]
    u = np.linspace(prof.h, prof.g, 2001)
    tab = GeneratorProfile(2, prof.kappa, prof.h, prof.g, TabulatedLambda(u, hexagram_lambda(u)))
    for e in (0.6, 0.75, 0.95):
        assert profile_volume(tab, e) == pytest.approx(profile_volume(prof, e), rel=1e-6)
    with pytest.raises(GeometryError, match="256"):
        TabulatedLambda(u[:100], hexagram_lambda(u[:100]))


@given(st.integers(0, 12), st.floats(1e-3, 5.0), st.sampled_from(["hexagram", "square"]))
def test_scaling_law_is_exact(k, eps, which):
    if which == "hexagram":
        prof = hexagram_builtin()[1]
    else:
        prof = GeneratorProfile(d=2, kappa=(-4.0, 4.0, -1.0), h=0.5, g=0.5)
    x = 2.0 ** -k
    assert scaled_profile_volume(prof, x, eps) == x ** 2 * profile_volume(prof, eps / x)


# --- raster oracle ----------------------------------------------------------

def test_raster_hexagram_small_eps(hexagram):
    rv = inner_tube_volume_raster(hexagram[0], 0.1, resolution=1024)
    exact = 12 * 0.1 + (math.pi - 6 * SQ3) * 0.01
    assert abs(rv.value - exact) <= 0.01 * exact
    assert abs(rv.value - exact) <= rv.error_bound


@pytest.mark.parametrize("eps", [0.7, 0.9])
def test_raster_hexagram_lambda_branch(hexagram, eps):
    rv = inner_tube_volume_raster(hexagram[0], eps, resolution=1024)
    assert rv.value == pytest.approx(hexagram_lambda(eps), rel=0.01)


def test_raster_saturates(hexagram):
    rv = inner_tube_volume_raster(hexagram[0], 1.05, resolution=256)
    assert rv.band_pixels == rv.inside_pixels
    assert rv.value == pytest.approx(3 * SQ3, abs=rv.error_bound)


def test_raster_pgm(tmp_path, square):
    path = tmp_path / "band.pgm"
    rv = inner_tube_volume_raster(square[0], 0.25, resolution=64, pgm_path=path)
    data = path.read_bytes()
    assert data.startswith(b"P5\n64 64\n255\n")
    body = np.frombuffer(data[len(b"P5\n64 64\n255\n"):], dtype=np.uint8)
    assert np.count_nonzero(body == 255) == rv.band_pixels == 64 * 64 - 32 * 32


def test_raster_resolution_floor(square):
    with pytest.raises(DomainError):
        inner_tube_volume_raster(square[0], 0.1, resolution=32)


def test_inside_mask_counts_square_exactly(square):
    win = Window.covering(-0.5, -0.5, 1.5, 1.5, 100)
    assert np.count_nonzero(inside_mask(square[0].points, win)) == 100 * 100


def _safe_h(poly):
    """Lower bound for the end of the quadratic regime of a simple polygon.

    Edge collapse between convex corners and half the distance between
    non-adjacent edges; reflex corners do not shorten an offset edge.
    """
    p = poly.points
    n = len(p)
    ang = poly.interior_angles()
    c = np.where(ang < math.pi, 1 / np.tan(ang / 2), 0.0)
    lengths = poly.edge_lengths
    collapse = min(lengths[i] / max(c[i] + c[(i + 1) % n], 1e-300) for i in range(n))

    def seg_dist(a, b, q):
        e = b - a
        t = np.clip(np.dot(q - a, e) / np.dot(e, e), 0, 1)
        return np.hypot(*(q - a - t * e))

    gap = np.inf
    for i in range(n):
        for j in range(n):
            if j in (i, (i + 1) % n, (i - 1) % n):
                continue
            a, b = p[i], p[(i + 1) % n]
            for q in (p[j], p[(j + 1) % n]):
                gap = min(gap, seg_dist(a, b, q))
    return min(collapse, 0.5 * gap)


@settings(max_examples=20)
@given(st.integers(3, 9), st.data())
def test_raster_matches_quadratic_on_random_polygons(n, data):
    gaps = data.draw(st.lists(st.floats(0.3, 1.0), min_size=n, max_size=n))
    t = np.cumsum(gaps)
    t = 2 * math.pi * t / t[-1]
    r = np.array(data.draw(st.lists(st.floats(0.5, 1.5), min_size=n, max_size=n)))
    poly = Polygon(np.c_[r * np.cos(t), r * np.sin(t)])
    h = _safe_h(poly)
    eps = data.draw(st.floats(0.05, 0.95)) * h / 2
    k1, k0 = steiner_coefficients(poly)
    exact = k1 * eps + k0 * eps ** 2
    rv = inner_tube_volume_raster(poly, eps, resolution=512)
    assert abs(rv.value - exact) <= max(0.01 * exact, 2 * poly.perimeter / 512)
