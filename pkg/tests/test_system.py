import math

import pytest
from hypothesis import given, strategies as st

from tubeformula.errors import ResourceError, UnsupportedConfigurationError
from tubeformula.geometry import Polygon
from tubeformula.system import (SelfSimilarSystem, Similitude, enumerate_ratios,
                                hexagram_tiling_hull, raster_condition_check,
                                total_tile_volume)

ratio_lists = st.lists(st.floats(0.05, 0.6), min_size=2, max_size=6).filter(
    lambda rs: sum(r * r for r in rs) < 0.95)


def test_hexagram_system_shape(hex_system):
    assert len(hex_system.maps) == 24
    assert set(hex_system.ratios) == {1 / 6}
    assert hex_system.moment() == pytest.approx(2 / 3, rel=1e-15)


def test_enumeration_example_cutoff(hex_system):
    agg = enumerate_ratios(hex_system, 0.05)
    assert [(r, m) for r, m in agg.entries] == [(1.0, 1), (pytest.approx(1 / 6), 24)]
    # everything at depth >= 2 is closed: 576 (1/36)^2 / (1 - 2/3)
    assert agg.closure_mass == pytest.approx(576 / 36 ** 2 * 3, rel=1e-14)


def test_enumeration_toy():
    agg = enumerate_ratios(SelfSimilarSystem.uniform(3, 0.5), 0.5)
    assert agg.entries == ((1.0, 1), (0.5, 3))
    assert agg.closure_mass == pytest.approx(2.25, abs=1e-15)
    assert agg.total_mass == pytest.approx(4.0, abs=1e-15)


@given(st.integers(2, 5), st.floats(0.1, 0.45), st.integers(1, 6))
def test_equal_ratio_multiplicity_is_power(count, ratio, depth):
    if count * ratio ** 2 >= 1:
        return
    sysm = SelfSimilarSystem.uniform(count, ratio)
    agg = enumerate_ratios(sysm, ratio ** depth * (1 - 1e-9))
    assert [m for _, m in agg.entries] == [count ** k for k in range(depth + 1)]


@given(ratio_lists, st.floats(1e-3, 0.5))
def test_moment_conservation(ratios, cutoff):
    sysm = SelfSimilarSystem(2, tuple(Similitude(r) for r in ratios))
    agg = enumerate_ratios(sysm, cutoff)
    assert agg.total_mass == pytest.approx(1 / (1 - sysm.moment()), rel=1e-10)
    assert all(r >= cutoff * (1 - 1e-12) for r, _ in agg.entries)


@given(ratio_lists, st.floats(1e-3, 0.1), st.floats(1.0, 5.0))
def test_reclose_matches_direct(ratios, fine, factor):
    sysm = SelfSimilarSystem(2, tuple(Similitude(r) for r in ratios))
    coarse = fine * factor
    a = enumerate_ratios(sysm, fine).reclose(coarse)
    b = enumerate_ratios(sysm, coarse)
    assert a.total_mass == pytest.approx(b.total_mass, rel=1e-12)
    assert len(a.entries) == len(b.entries)


def test_repeated_ratios_merge():
    sysm = SelfSimilarSystem(2, (Similitude(0.5), Similitude(0.25), Similitude(0.25)))
    agg = enumerate_ratios(sysm, 0.25)
    # 0.25 appears as one 0.5*0.5 word and two single 0.25 maps
    assert dict(agg.entries)[0.25] == 3


def test_enumeration_budget():
    with pytest.raises(ResourceError, match="budget"):
        enumerate_ratios(SelfSimilarSystem(2, (Similitude(0.5), Similitude(0.3))), 1e-6, budget=50)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.5])
def test_similitude_ratio_range(bad):
    with pytest.raises(ValueError):
        Similitude(bad)


def test_system_validation():
    with pytest.raises(ValueError, match="two maps"):
        SelfSimilarSystem(2, (Similitude(0.5),))
    with pytest.raises(ValueError, match="below d"):
        SelfSimilarSystem.uniform(4, 0.5)


def test_total_tile_volume(hex_system):
    assert total_tile_volume(hex_system, 3 * math.sqrt(3)) == pytest.approx(9 * math.sqrt(3))


def test_conditions_hexagram(hex_system):
    rep = raster_condition_check(hex_system, hexagram_tiling_hull(), resolution=256)
    assert rep.tileset_ok and rep.nontrivial_ok
    assert rep.overlap_area == 0 and rep.outside_area == 0
    assert rep.hull_area == pytest.approx(9 * math.sqrt(3), abs=rep.error_bound)
    assert rep.mask_area == pytest.approx(3 * math.sqrt(3), abs=rep.error_bound)


def test_conditions_trivial_square():
    square = Polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
    maps = [Similitude(0.5, 0.0, False, (x, y)) for x in (0, 0.5) for y in (0, 0.5)]
    rep = raster_condition_check(maps, square, resolution=128)
    assert rep.tileset_ok
    assert not rep.nontrivial_ok


def test_conditions_overlap_and_escape():
    square = Polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
    maps = [Similitude(0.6, 0.0, False, (0, 0)), Similitude(0.6, 0.0, False, (0.3, 0.3)),
            Similitude(0.3, 0.0, False, (0.9, 0.0))]
    rep = raster_condition_check(maps, square, resolution=128)
    assert not rep.tileset_ok
    assert rep.overlap_area > 0.08 and rep.outside_area > 0.02


def test_conditions_need_planar_maps():
    with pytest.raises(UnsupportedConfigurationError):
        raster_condition_check(SelfSimilarSystem.uniform(3, 0.5), hexagram_tiling_hull())
