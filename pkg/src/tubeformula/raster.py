"""Pixel-center rasterization kernels shared by the raster oracles.

All grids are aligned to the global lattice ``(i + 0.5) / resolution`` so that
masks computed for different polygons can be overlaid without resampling.
"""

from dataclasses import dataclass
import math

import numpy as np

_ROW_CHUNK = 128


@dataclass(frozen=True)
class Window:
    """Block of pixels ``[i0, i0 + nx) x [j0, j0 + ny)`` on the global lattice."""

    i0: int
    j0: int
    nx: int
    ny: int
    resolution: float

    @classmethod
    def covering(cls, xmin, ymin, xmax, ymax, resolution, pad=0.0):
        i0 = math.floor((xmin - pad) * resolution)
        j0 = math.floor((ymin - pad) * resolution)
        i1 = math.ceil((xmax + pad) * resolution)
        j1 = math.ceil((ymax + pad) * resolution)
        return cls(i0, j0, max(i1 - i0, 0), max(j1 - j0, 0), float(resolution))

    @property
    def xs(self):
        return (self.i0 + np.arange(self.nx) + 0.5) / self.resolution

    @property
    def ys(self):
        return (self.j0 + np.arange(self.ny) + 0.5) / self.resolution

    def union(self, other):
        i0 = min(self.i0, other.i0)
        j0 = min(self.j0, other.j0)
        i1 = max(self.i0 + self.nx, other.i0 + other.nx)
        j1 = max(self.j0 + self.ny, other.j0 + other.ny)
        return Window(i0, j0, i1 - i0, j1 - j0, self.resolution)

    def slices_in(self, outer):
        """Index slices of this window inside the (larger) window ``outer``."""
        di, dj = self.i0 - outer.i0, self.j0 - outer.j0
        return slice(dj, dj + self.ny), slice(di, di + self.nx)


def inside_mask(points, window):
    """Even-odd test of every pixel center in ``window`` (rows are y)."""
    p = np.asarray(points, dtype=float)
    q = np.roll(p, -1, axis=0)
    xs = window.xs
    mask = np.zeros((window.ny, window.nx), dtype=bool)
    for row, y in enumerate(window.ys):
        cross = (p[:, 1] > y) != (q[:, 1] > y)
        if not cross.any():
            continue
        a, b = p[cross], q[cross]
        xc = np.sort(a[:, 0] + (y - a[:, 1]) * (b[:, 0] - a[:, 0]) / (b[:, 1] - a[:, 1]))
        right = len(xc) - np.searchsorted(xc, xs, side="right")
        mask[row] = (right & 1).astype(bool)
    return mask


def boundary_distance_sq(points, px, py):
    """Squared distance from each (px, py) to the closed polyline ``points``."""
    p = np.asarray(points, dtype=float)
    q = np.roll(p, -1, axis=0)
    best = np.full(px.shape, np.inf)
    for (ax, ay), (bx, by) in zip(p, q):
        ex, ey = bx - ax, by - ay
        ll = ex * ex + ey * ey
        dx, dy = px - ax, py - ay
        t = np.clip((dx * ex + dy * ey) / ll, 0.0, 1.0)
        dx -= t * ex
        dy -= t * ey
        np.minimum(best, dx * dx + dy * dy, out=best)
    return best


def band_mask(points, eps, window):
    """Masks (inside, inside-and-within-eps-of-boundary) over ``window``."""
    inside = inside_mask(points, window)
    band = np.zeros_like(inside)
    xs, ys = window.xs, window.ys
    eps2 = eps * eps
    for r0 in range(0, window.ny, _ROW_CHUNK):
        blk = inside[r0:r0 + _ROW_CHUNK]
        jj, ii = np.nonzero(blk)
        if len(ii) == 0:
            continue
        d2 = boundary_distance_sq(points, xs[ii], ys[r0 + jj])
        band[r0 + jj[d2 < eps2], ii[d2 < eps2]] = True
    return inside, band


def write_pgm(path, mask):
    """Binary P5 greymap, 255 where ``mask`` is set; first row written is the top."""
    img = np.where(np.asarray(mask)[::-1], 255, 0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
