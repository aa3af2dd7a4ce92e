import math

import pytest
from hypothesis import given, strategies as st

from tubeformula import oracle
from tubeformula.errors import (DomainError, HypothesisViolation, ResourceError,
                                TilingConsistencyError)
from tubeformula.geometry import Polygon, inner_tube_volume_raster
from tubeformula.oracle import direct_tile_sum, raster_tiling_volume, sweep_compare
from tubeformula.system import SelfSimilarSystem, Similitude, total_tile_volume

SQ3 = math.sqrt(3.0)


def test_toy_hand_enumeration(toy_system, square):
    # depth 0: 0.75, depth 1: 3 * 0.25, depths >= 2 saturated: 2.25
    assert abs(direct_tile_sum(toy_system, square[1], 0.25) - 3.75) <= 1e-12




def test_toy_values(toy_system, square):
    # eps = 0.1: depth 0 polynomial 0.36; depth 1 (x = 1/2): 4*0.05 - 0.01 ... scaled
    prof = square[1]
    v = direct_tile_sum(toy_system, prof, 0.1)
    by_hand = (4 * 0.1 - 4 * 0.01) + 3 * (4 * 0.5 * 0.1 - 4 * 0.01) + 9 * (4 * 0.25 * 0.1 - 4 * 0.01) \
        + 27 * 0.125 ** 2 * 4
    assert v == pytest.approx(by_hand, abs=1e-14)


def test_saturated_limit(toy_system, square, hex_system, hexagram):
    assert direct_tile_sum(toy_system, square[1], 100.0) == pytest.approx(
        total_tile_volume(toy_system, 1.0), rel=1e-14)
    assert direct_tile_sum(hex_system, hexagram[1], 50.0) == pytest.approx(9 * SQ3, rel=1e-14)


def test_hexagram_refined_cutoff(hex_system, hexagram):
    a = direct_tile_sum(hex_system, hexagram[1], 0.3)
    b = direct_tile_sum(hex_system, hexagram[1], 0.3, cutoff=0.15)
    assert abs(a - b) <= 1e-10 * a
    assert a == pytest.approx(13.33974074814915, rel=1e-13)


@given(st.floats(0.01, 2.0), st.floats(0.02, 1.0))
def test_cutoff_independence(eps, frac):
    sysm = SelfSimilarSystem(2, tuple(Similitude(r) for r in (0.4, 0.35, 0.3, 0.2)))
    from tubeformula.geometry import hexagram_builtin
    prof = hexagram_builtin()[1]
    a = direct_tile_sum(sysm, prof, eps)
    b = direct_tile_sum(sysm, prof, eps, cutoff=frac * eps / prof.g)
    assert abs(a - b) <= 1e-10 * a


@given(st.floats(0.005, 3.0), st.floats(0.005, 3.0))
def test_monotone_and_bounded(hex_system, hexagram, e1, e2):
    lo, hi = sorted((e1, e2))
    v1 = direct_tile_sum(hex_system, hexagram[1], lo)
    v2 = direct_tile_sum(hex_system, hexagram[1], hi)
    assert v1 <= v2 * (1 + 1e-14)
    assert v2 <= total_tile_volume(hex_system, 3 * SQ3) * (1 + 1e-14)


def test_direct_sum_errors(hex_system, hexagram):
    with pytest.raises(DomainError):
        direct_tile_sum(hex_system, hexagram[1], 0.0)
    with pytest.raises(DomainError, match="cutoff"):
        direct_tile_sum(hex_system, hexagram[1], 0.3, cutoff=0.5)
    mixed = SelfSimilarSystem(2, tuple(Similitude(r) for r in (0.4, 0.35, 0.3, 0.2)))
    with pytest.raises(ResourceError, match="budget"):
        direct_tile_sum(mixed, hexagram[1], 1e-4, budget=100)


# --- sweep --------------------------------------------------------------------

def test_sweep_report(hex_system, hexagram, hex_dims, hex_gz):
    grid = [0.1, 0.2, 0.3, 0.4, 0.5]
    rep = sweep_compare(hex_system, hexagram[1], hex_dims, grid, 100, gz=hex_gz)
    assert [r.eps for r in rep.rows] == grid
    direct = [r.direct_value for r in rep.rows]
    assert direct == sorted(direct)
    assert rep.max_rel_err <= 1e-7
    assert not rep.failed
    rows = list(rep.csv_rows())
    assert len(rows[0]) == len(rep.CSV_HEADER)


def test_sweep_empty(hex_system, hexagram, hex_dims):
    rep = sweep_compare(hex_system, hexagram[1], hex_dims, [], 10)
    assert rep.rows == () and math.isnan(rep.max_rel_err)


def test_sweep_validation(hex_system, hexagram, hex_dims):
    with pytest.raises(HypothesisViolation):
        sweep_compare(hex_system, hexagram[1], hex_dims, [0.1, 0.6], 10)
    with pytest.raises(ValueError, match="increasing"):
        sweep_compare(hex_system, hexagram[1], hex_dims, [0.3, 0.2], 10)


def test_sweep_continues_after_row_error(hex_system, hexagram, hex_dims, hex_gz, monkeypatch):
    real = oracle.direct_tile_sum

    def flaky(sysm, prof, eps, **kw):
        if eps == 0.2:
            raise ResourceError("budget")
        return real(sysm, prof, eps, **kw)

    monkeypatch.setattr(oracle, "direct_tile_sum", flaky)
    rep = sweep_compare(hex_system, hexagram[1], hex_dims, [0.1, 0.2, 0.3], 10, gz=hex_gz)
    assert len(rep.rows) == 3
    assert [r.eps for r in rep.failed] == [0.2]
    assert "ResourceError" in rep.rows[1].error
    assert rep.max_rel_err < 1e-3


# --- raster tiling oracle ------------------------------------------------------

def test_raster_tiling_example(hex_system, hexagram):
    rv = raster_tiling_volume(hex_system, hexagram[0], 0.3, depth=3, resolution=512)
    direct = direct_tile_sum(hex_system, hexagram[1], 0.3)
    assert rv.tiles == 1 + 24 + 576
    assert rv.overlap_area == 0
    assert abs(rv.value - direct) <= max(0.02 * direct, rv.error_bound)


def test_raster_tiling_saturated(hex_system, hexagram):
    rv = raster_tiling_volume(hex_system, hexagram[0], 2.0, depth=2, resolution=256)
    assert abs(rv.value - 9 * SQ3) <= rv.error_bound


def test_raster_tiling_single_tile(hex_system, hexagram):
    rv = raster_tiling_volume(hex_system, hexagram[0], 0.3, depth=1, resolution=256, tail=False)
    assert rv.value == inner_tube_volume_raster(hexagram[0], 0.3, 256).value


def test_raster_tiling_errors(hex_system, hexagram):
    with pytest.raises(DomainError, match="depth"):
        raster_tiling_volume(hex_system, hexagram[0], 0.3, depth=5)
    with pytest.raises(DomainError, match="saturated"):
        raster_tiling_volume(hex_system, hexagram[0], 0.01, depth=1)
    square = Polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
    overlapping = [Similitude(0.6, 0.0, False, (0, 0)), Similitude(0.6, 0.0, False, (0.3, 0.3))]
    with pytest.raises(TilingConsistencyError):
        raster_tiling_volume(overlapping, square, 0.2, depth=2, resolution=128, tail=False)
