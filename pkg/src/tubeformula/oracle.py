"""Ground truth for the tiling tube volume and sweep comparisons.

``direct_tile_sum`` adds the inner tube volume of every scaled copy of the
generator.  Subtrees whose tiles are all saturated (r_w g < eps) are closed with
the geometric series of their d-th moments, so the infinite sum is finite.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import raster
from .errors import DomainError, HypothesisViolation, TilingConsistencyError, TubeFormulaError
from .geometry import scaled_profile_volume
from .system import DEFAULT_NODE_BUDGET, _planar_maps, enumerate_ratios
from .tube import GeometricZeta, tube_formula


def direct_tile_sum(system, profile, eps, cutoff=None, budget=DEFAULT_NODE_BUDGET):
    """V_T(eps) as the sum of V_{r_w G}(eps) over all words w.

    ``cutoff`` defaults to eps / g; any smaller cutoff gives the same value
    (more tiles are summed explicitly instead of being closed).
    """
    if not (eps > 0 and math.isfinite(eps)):
        raise DomainError(f"eps must be positive and finite, got {eps!r}")
    limit = eps / profile.g
    if cutoff is None:
        cutoff = limit
    elif cutoff > limit * (1.0 + 1e-12):
        raise DomainError(f"cutoff {cutoff!r} exceeds eps/g = {limit!r}; the tail would not be saturated")
    agg = enumerate_ratios(system, cutoff, budget=budget)
    terms = [m * scaled_profile_volume(profile, r, eps) for r, m in agg.entries]
    terms.append(agg.closure_mass * -profile.kappa[profile.d])
    return math.fsum(terms)


# --- sweep ------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    eps: float
    residue_value: float
    direct_value: float
    abs_err: float
    rel_err: float
    integer_part: float = math.nan
    complex_part: float = math.nan
    imag_leak: float = math.nan
    error: str = ""


@dataclass(frozen=True)
class SweepReport:
    rows: tuple
    N: int
    cutoff_policy: str = "eps/g"

    @property
    def max_rel_err(self):
        errs = [r.rel_err for r in self.rows if not r.error]
        return max(errs) if errs else math.nan

    @property
    def failed(self):
        return [r for r in self.rows if r.error]

    CSV_HEADER = ("eps", "N", "integer_part", "complex_part", "total", "direct_oracle",
                  "abs_err", "rel_err", "imag_leak")

    def csv_rows(self):
        for r in self.rows:
            yield (r.eps, self.N, r.integer_part, r.complex_part, r.residue_value,
                   r.direct_value, r.abs_err, r.rel_err, r.imag_leak)


def _validate_grid(eps_grid, h):
    grid = [float(e) for e in eps_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("eps grid must be strictly increasing")
    bad = [e for e in grid if not 0 < e < h]
    if bad:
        raise HypothesisViolation(f"eps grid points {bad} are outside (0, h = {h!r})")
    return grid


def sweep_compare(system, profile, dims, eps_grid, N, gz=None):
    """Tube formula against the direct sum on each grid point.

    ``profile`` may be a sequence of generator profiles (with ``gz`` a
    matching sequence); both sides are then summed over the generators.
    Errors on one row are recorded in ``row.error`` and the sweep continues.
    """
    profiles = tuple(profile) if isinstance(profile, (list, tuple)) else (profile,)
    grid = _validate_grid(eps_grid, min(p.h for p in profiles))
    if gz is None:
        from .spectrum import ScalingZeta
        zeta = ScalingZeta.of(system)
        gzs = [GeometricZeta(zeta, p) for p in profiles]
    else:
        gzs = list(gz) if isinstance(gz, (list, tuple)) else [gz]
    rows = []
    for eps in grid:
        try:
            evs = [tube_formula(g, dims, eps, N) for g in gzs]
            direct = math.fsum(direct_tile_sum(system, p, eps) for p in profiles)
        except (TubeFormulaError, ValueError) as exc:
            nan = math.nan
            rows.append(SweepRow(eps, nan, nan, nan, nan, error=f"{type(exc).__name__}: {exc}"))
            continue
        total = math.fsum(ev.total for ev in evs)
        err = abs(total - direct)
        rows.append(SweepRow(eps, total, direct, err, err / abs(direct),
                             math.fsum(ev.integer_part for ev in evs),
                             math.fsum(ev.complex_part for ev in evs),
                             max(ev.imag_leak for ev in evs)))
    return SweepReport(tuple(rows), N)


# --- raster tiling oracle ---------------------------------------------------

@dataclass(frozen=True)
class TilingRaster:
    value: float
    raster_part: float
    tail: float
    error_bound: float
    overlap_area: float
    tiles: int
    resolution: float
    owner_count: np.ndarray = field(repr=False, default=None)


def _word_maps(maps, depth):
    """Affine maps (A, b) of all words of length < depth, level by level."""
    level = [(np.eye(2), np.zeros(2))]
    out = list(level)
    for _ in range(depth - 1):
        nxt = []
        for a, b in level:
            for m in maps:
                ma, mb = m.affine()
                nxt.append((a @ ma, a @ mb + b))
        out.extend(nxt)
        level = nxt
    return out


def raster_tiling_volume(system, generator, eps, depth=3, resolution=512, tail=True,
                         g=None):
    """Raster estimate of V_T(eps) from the actual tile images Phi_w(G), |w| < depth.

    Deeper words are added as the saturated tail vol(G) S^depth / (1 - S) with
    S = sum r_j^2, which requires r_max^depth * g <= eps (``g`` defaults to the
    largest distance from a generator vertex to its centroid, an upper bound
    on the inradius).  With ``tail=False`` the deeper levels are dropped.
    Overlapping tile interiors beyond the raster error bound raise
    :class:`TilingConsistencyError`.
    """
    maps = _planar_maps(system)
    if not 1 <= depth <= 4:
        raise DomainError(f"depth must be between 1 and 4, got {depth!r}")
    if not (eps > 0 and math.isfinite(eps)):
        raise DomainError(f"eps must be positive, got {eps!r}")
    if resolution < 64:
        raise DomainError("resolution must be at least 64 pixels per unit")
    pts = generator.points
    if g is None:
        g = float(np.max(np.hypot(*(pts - pts.mean(axis=0)).T)))
    moment = math.fsum(m.ratio ** 2 for m in maps)
    rmax = max(m.ratio for m in maps)
    if tail and rmax ** depth * g > eps:
        raise DomainError(
            f"tiles beyond depth {depth} are not saturated at eps = {eps}; increase depth")

    words = _word_maps(maps, depth)
    tiles = [generator.transformed(a, b) for a, b in words]
    win = raster.Window.covering(*tiles[0].bbox, resolution)
    for t in tiles[1:]:
        win = win.union(raster.Window.covering(*t.bbox, resolution))
    owner = np.zeros((win.ny, win.nx), dtype=np.uint8)
    band_pixels = 0
    perimeter = 0.0
    for t, (a, _) in zip(tiles, words):
        scale = math.sqrt(abs(np.linalg.det(a)))
        twin = raster.Window.covering(*t.bbox, resolution)
        if scale * g <= eps:
            inside = raster.inside_mask(t.points, twin)
            band = inside
        else:
            inside, band = raster.band_mask(t.points, eps, twin)
        band_pixels += int(np.count_nonzero(band))
        owner[twin.slices_in(win)] += inside
        perimeter += t.perimeter
    px = 1.0 / resolution ** 2
    overlap = float(np.count_nonzero(owner >= 2)) * px
    bound = perimeter / resolution
    if overlap > bound:
        raise TilingConsistencyError(
            f"tile images overlap on {overlap:.4g} area units (raster bound {bound:.4g})")
    tail_mass = generator.area * moment ** depth / (1.0 - moment) if tail else 0.0
    raster_part = band_pixels * px
    return TilingRaster(
        value=raster_part + tail_mass,
        raster_part=raster_part,
        tail=tail_mass,
        error_bound=2.0 * bound,
        overlap_area=overlap,
        tiles=len(tiles),
        resolution=float(resolution),
        owner_count=owner,
    )
