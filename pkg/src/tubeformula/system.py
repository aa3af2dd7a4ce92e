"""Iterated function systems and the enumeration of word scaling ratios."""

from dataclasses import dataclass
import math

import numpy as np

from . import raster
from .errors import ResourceError, UnsupportedConfigurationError
from .geometry import Polygon, SQRT3

DEFAULT_NODE_BUDGET = 10 ** 7
LOG_TOL = 1e-12


@dataclass(frozen=True)
class Similitude:
    """Contracting similitude ``p -> ratio * R(rotation) F(reflect) p + translate``.

    The rigid part is optional; maps without a translation only carry a ratio.
    ``rotation`` is in radians, reflection is across the x-axis and applied first.
    """

    ratio: float
    rotation: float = 0.0
    reflect: bool = False
    translate: tuple = None

    def __post_init__(self):
        if not (0.0 < self.ratio < 1.0):
            raise ValueError(f"similitude ratio must lie in (0, 1), got {self.ratio!r}")
        if self.translate is not None:
            object.__setattr__(self, "translate", tuple(float(t) for t in self.translate))

    @property
    def planar(self):
        return self.translate is not None

    def affine(self):
        """``(matrix, offset)`` of the planar map."""
        if not self.planar:
            raise UnsupportedConfigurationError("similitude has no rigid part")
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        m = self.ratio * np.array([[c, -s], [s, c]])
        if self.reflect:
            m = m @ np.diag([1.0, -1.0])
        return m, np.array(self.translate)


@dataclass(frozen=True)
class SelfSimilarSystem:
    d: int
    maps: tuple

    def __post_init__(self):
        maps = tuple(self.maps)
        object.__setattr__(self, "maps", maps)
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"ambient dimension must be a positive integer, got {self.d!r}")
        if len(maps) < 2:
            raise ValueError("a self-similar system needs at least two maps")
        if self.moment() >= 1.0:
            raise ValueError(
                f"sum of ratio^d is {self.moment()!r}; need < 1 (similarity dimension below d)")

    @classmethod
    def uniform(cls, count, ratio, d=2):
        return cls(d, tuple(Similitude(ratio) for _ in range(count)))

    @property
    def ratios(self):
        return tuple(m.ratio for m in self.maps)

    @property
    def planar(self):
        return self.d == 2 and all(m.planar for m in self.maps)

    def moment(self, power=None):
        power = self.d if power is None else power
        return math.fsum(r ** power for r in self.ratios)


@dataclass(frozen=True)
class RatioAggregate:
    """Distinct word ratios ``r_w >= cutoff`` with multiplicities.

    ``closure_mass`` is the d-th moment of every word not listed, i.e. the sum
    of ``r_w^d`` over all subtrees cut off below the cutoff.
    """

    entries: tuple
    cutoff: float
    closure_mass: float
    d: int
    moment: float

    @property
    def total_mass(self):
        return math.fsum(m * r ** self.d for r, m in self.entries) + self.closure_mass

    def reclose(self, cutoff):
        """Aggregate for a larger cutoff, derived from this finer one."""
        if cutoff < self.cutoff:
            raise ValueError("can only re-close at a coarser cutoff")
        keep, moved = [], []
        for r, m in self.entries:
            if r == 1.0 or r >= cutoff * (1.0 - LOG_TOL):
                keep.append((r, m))
            else:
                moved.append(m * r ** self.d)
        return RatioAggregate(tuple(keep), cutoff, math.fsum([self.closure_mass, *moved]),
                              self.d, self.moment)


def _ratio_classes(ratios):
    """Group equal ratios: list of (ratio, count)."""
    classes = []
    for r in sorted(ratios, reverse=True):
        if classes and abs(math.log(r) - math.log(classes[-1][0])) <= LOG_TOL:
            classes[-1][1] += 1
        else:
            classes.append([r, 1])
    return [(r, c) for r, c in classes]


def enumerate_ratios(system, cutoff, budget=DEFAULT_NODE_BUDGET):
    """Expand words while ``r_w >= cutoff``; close every subtree below it.

    Words are tracked as exponent vectors over the distinct ratios, so a node
    stands for all words sharing that vector (multinomial multiplicity).
    """
    if not cutoff > 0:
        raise ValueError(f"cutoff must be positive, got {cutoff!r}")
    d = system.d
    classes = _ratio_classes(system.ratios)
    rho = [r for r, _ in classes]
    counts = [c for _, c in classes]
    moment = system.moment()
    tail = 1.0 / (1.0 - moment)
    threshold = cutoff * (1.0 - LOG_TOL)

    def ratio_of(vec):
        return math.prod(r ** k for r, k in zip(rho, vec))

    def mult_of(vec):
        out, n = 1, 0
        for k, c in zip(vec, counts):
            n += k
            out *= math.comb(n, k) * c ** k
        return out

    root = (0,) * len(rho)
    seen = {root: 1.0}
    frontier = [root]
    closure = []
    nodes = 0
    while frontier:
        nxt = []
        for vec in frontier:
            nodes += 1
            if nodes > budget:
                raise ResourceError(
                    f"ratio enumeration exceeded the node budget of {budget} "
                    f"(cutoff {cutoff:g}); use a larger eps or raise the budget")
            r = seen[vec]
            m = mult_of(vec)
            for i, (ri, ci) in enumerate(zip(rho, counts)):
                child_r = r * ri
                if child_r >= threshold:
                    child = vec[:i] + (vec[i] + 1,) + vec[i + 1:]
                    if child not in seen:
                        seen[child] = ratio_of(child)
                        nxt.append(child)
                else:
                    closure.append(m * ci * child_r ** d * tail)
        frontier = nxt

    merged = []
    for vec, r in sorted(seen.items(), key=lambda kv: -kv[1]):
        m = mult_of(vec)
        if merged and abs(math.log(merged[-1][0]) - math.log(r)) <= LOG_TOL:
            merged[-1][1] += m
        else:
            merged.append([r, m])
    return RatioAggregate(tuple((r, m) for r, m in merged), float(cutoff),
                          math.fsum(closure), d, moment)


def total_tile_volume(system, generator_volume):
    return generator_volume / (1.0 - system.moment())


# --- raster checks of the tileset and non-triviality conditions -------------

@dataclass(frozen=True)
class ConditionReport:
    tileset_ok: bool
    nontrivial_ok: bool
    generator_mask: np.ndarray
    window: raster.Window
    hull_area: float
    outside_area: float
    overlap_area: float
    uncovered_area: float
    error_bound: float

    @property
    def mask_area(self):
        return self.uncovered_area


def _planar_maps(system):
    maps = system.maps if isinstance(system, SelfSimilarSystem) else tuple(system)
    if not maps or not all(isinstance(m, Similitude) and m.planar for m in maps):
        raise UnsupportedConfigurationError(
            "raster checks need planar maps with rotation, reflection and translation")
    if isinstance(system, SelfSimilarSystem) and system.d != 2:
        raise UnsupportedConfigurationError("raster checks are only available for d = 2")
    return maps


def raster_condition_check(system, hull, resolution=256):
    """Falsify the tileset and non-triviality conditions at finite resolution.

    ``system`` is a :class:`SelfSimilarSystem` or a bare sequence of planar
    :class:`Similitude` maps.  Areas are pixel counts / resolution^2; the
    error bound is the total boundary length / resolution.
    """
    maps = _planar_maps(system)
    images = [hull.transformed(*m.affine()) for m in maps]
    win = raster.Window.covering(*hull.bbox, resolution)
    for image in images:
        win = win.union(raster.Window.covering(*image.bbox, resolution))
    hull_mask = raster.inside_mask(hull.points, win)
    cover = np.zeros(hull_mask.shape, dtype=np.int32)
    outside = 0
    boundary = hull.perimeter + math.fsum(im.perimeter for im in images)
    for image in images:
        iwin = raster.Window.covering(*image.bbox, resolution)
        sl = iwin.slices_in(win)
        mask = raster.inside_mask(image.points, iwin)
        outside += int(np.count_nonzero(mask & ~hull_mask[sl]))
        cover[sl] += mask
    px = 1.0 / resolution ** 2
    bound = boundary / resolution
    overlap_area = float(np.count_nonzero(cover >= 2)) * px
    outside_area = outside * px
    gen = hull_mask & (cover == 0)
    uncovered = float(np.count_nonzero(gen)) * px
    return ConditionReport(
        tileset_ok=overlap_area <= bound and outside_area <= bound,
        nontrivial_ok=uncovered > bound,
        generator_mask=gen,
        window=win,
        hull_area=float(np.count_nonzero(hull_mask)) * px,
        outside_area=outside_area,
        overlap_area=overlap_area,
        uncovered_area=uncovered,
        error_bound=bound,
    )


# --- builtin planar system --------------------------------------------------

def hexagram_tiling_hull():
    """Equilateral triangle of side 6 centred at the origin, apex up."""
    r = 2.0 * SQRT3
    return Polygon([(r * math.cos(math.radians(a)), r * math.sin(math.radians(a)))
                    for a in (90.0, 210.0, 330.0)])


def hexagram_tiling_system():
    """24 maps of ratio 1/6 whose first-level gap is the unit-edge hexagram.

    The hull is cut into its 36 unit triangles; the 12 covered by the centred
    hexagram are the gap, the other 24 are the images of the hull.  Upward
    triangles are translates, downward ones are turned by 180 degrees.
    """
    from .geometry import hexagram_polygon

    star = hexagram_polygon()
    maps = []
    h = SQRT3 / 2.0
    for row in range(6):
        y = -SQRT3 + row * h
        for i in range(6 - row):
            x = -3.0 + 0.5 * row + i
            up = (x + 0.5, y + h / 3.0)
            if not star.contains(*up):
                maps.append(Similitude(1.0 / 6.0, 0.0, False, up))
            if i < 5 - row:
                down = (x + 1.0, y + 2.0 * h / 3.0)
                if not star.contains(*down):
                    maps.append(Similitude(1.0 / 6.0, math.pi, False, down))
    return SelfSimilarSystem(2, tuple(maps))
