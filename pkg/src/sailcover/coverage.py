"""Observed-area bookkeeping on a fine pixel raster.

Cells are subdivided into square pixels. Arriving at a cell center stamps a
disk of observation radius d_obs: every pixel whose center lies within that
distance of the cell center gets its visit count incremented. Since the cell
size is an exact multiple of the pixel size, one precomputed disk template
serves every cell, clipped at the map edge. Counts only ever grow.
"""

from __future__ import annotations

import numpy as np

from .env import GridSpec

DEFAULT_PIXEL_SIZE = 5.0
DEFAULT_D_OBS = 72.0
DEFAULT_ALPHA = 0.2


def disk_template(grid: GridSpec, pixel_size_m: float, d_obs_m: float
                  ) -> tuple[np.ndarray, int]:
    """Boolean stamp patch and its anchor offset relative to a cell's first pixel.

    Pixel centers sit at half-integer offsets from cell centers, so no center
    ever lands exactly on the radius: the template is unambiguous.
    """
    ppc = grid.cell_size_m / pixel_size_m
    if abs(ppc - round(ppc)) > 1e-9:
        raise ValueError("cell_size_m must be an integer multiple of pixel_size_m")
    ppc = int(round(ppc))
    half = ppc / 2.0
    reach = int(np.ceil(d_obs_m / pixel_size_m + half))
    e = np.arange(-reach, ppc + reach)
    off = (e + 0.5 - half) * pixel_size_m
    d2 = off[:, None] ** 2 + off[None, :] ** 2
    patch = d2 <= d_obs_m * d_obs_m
    rows = np.flatnonzero(patch.any(axis=1))
    cols = np.flatnonzero(patch.any(axis=0))
    patch = patch[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]
    anchor = int(e[rows[0]])
    return patch, anchor


class CoverageRaster:
    """Visit counts per pixel plus the derived covered mask."""

    def __init__(self, grid: GridSpec, pixel_size_m: float = DEFAULT_PIXEL_SIZE,
                 d_obs_m: float = DEFAULT_D_OBS):
        if pixel_size_m <= 0 or d_obs_m <= 0:
            raise ValueError("pixel_size_m and d_obs_m must be positive")
        self.grid = grid
        self.pixel_size_m = float(pixel_size_m)
        self.d_obs_m = float(d_obs_m)
        self.pixels_per_cell = int(round(grid.cell_size_m / pixel_size_m))
        self.template, self.anchor = disk_template(grid, pixel_size_m, d_obs_m)
        self.shape = (grid.rows * self.pixels_per_cell, grid.cols * self.pixels_per_cell)
        self.counts = np.zeros(self.shape, dtype=np.uint16)
        self.covered = np.zeros(self.shape, dtype=bool)

    @property
    def pixel_area_m2(self) -> float:
        return self.pixel_size_m * self.pixel_size_m

    def _window(self, cell: tuple[int, int]):
        """Clipped raster slice and matching template slice for one stamp."""
        i, j = cell
        if not self.grid.contains(cell):
            raise ValueError(f"cell {cell} outside grid")
        th, tw = self.template.shape
        r0 = i * self.pixels_per_cell + self.anchor
        c0 = j * self.pixels_per_cell + self.anchor
        rr0, cc0 = max(r0, 0), max(c0, 0)
        rr1, cc1 = min(r0 + th, self.shape[0]), min(c0 + tw, self.shape[1])
        return (slice(rr0, rr1), slice(cc0, cc1)), \
               (slice(rr0 - r0, rr1 - r0), slice(cc0 - c0, cc1 - c0))

    def stamp_visit(self, cell: tuple[int, int]) -> int:
        """Apply the observation disk at a cell center; returns new pixels."""
        win, twin = self._window(cell)
        patch = self.template[twin]
        fresh = int(np.count_nonzero(patch & ~self.covered[win]))
        self.counts[win] += patch
        self.covered[win] |= patch
        return fresh

    def new_pixels(self, cell: tuple[int, int],
                   covered: np.ndarray | None = None) -> int:
        """Pixels a stamp at this cell would newly cover (no mutation)."""
        if covered is None:
            covered = self.covered
        win, twin = self._window(cell)
        return int(np.count_nonzero(self.template[twin] & ~covered[win]))

    def coverage_fraction(self) -> float:
        return float(np.count_nonzero(self.covered)) / self.covered.size

    def copy(self) -> "CoverageRaster":
        dup = object.__new__(CoverageRaster)
        dup.__dict__.update(self.__dict__)
        dup.counts = self.counts.copy()
        dup.covered = self.covered.copy()
        return dup


def coverage_fraction(counts: np.ndarray) -> float:
    return float(np.count_nonzero(counts)) / counts.size


def _cell_blocks(counts: np.ndarray, pixels_per_cell: int) -> np.ndarray:
    """View of the raster as (rows, cols, ppc*ppc) per-cell pixel blocks."""
    pr, pc = counts.shape
    p = pixels_per_cell
    if pr % p or pc % p:
        raise ValueError("raster shape is not a multiple of pixels_per_cell")
    return counts.reshape(pr // p, p, pc // p, p).swapaxes(1, 2).reshape(pr // p, pc // p, p * p)


def redundancy_score(counts: np.ndarray, pixels_per_cell: int,
                     alpha: float = DEFAULT_ALPHA) -> float:
    """Coverage utility with multiple-visit penalty, averaged over cells.

    Per cell: the covered pixel fraction minus alpha times the mean excess
    visit count (visits beyond the first). Excess is accumulated in integer
    arithmetic before the single division so independent recomputations
    agree bit for bit.
    """
    blocks = _cell_blocks(counts, pixels_per_cell)
    n = blocks.shape[2]
    pos = np.count_nonzero(blocks, axis=2).astype(np.int64)
    excess = np.maximum(blocks.astype(np.int64) - 1, 0).sum(axis=2)
    terms = pos / n - alpha * (excess / n)
    return float(terms.mean())


def redundancy_percent(counts: np.ndarray, pixels_per_cell: int,
                       alpha: float = DEFAULT_ALPHA) -> float:
    """Penalty mass as a percentage of covered mass (0 on an empty raster)."""
    blocks = _cell_blocks(counts, pixels_per_cell)
    n = blocks.shape[2]
    pos = np.count_nonzero(blocks, axis=2).astype(np.int64)
    excess = np.maximum(blocks.astype(np.int64) - 1, 0).sum(axis=2)
    covered_mass = float((pos / n).mean())
    penalty_mass = float(alpha * (excess / n).mean())
    if covered_mass == 0.0:
        return 0.0
    return 100.0 * penalty_mass / covered_mass


def write_pgm(path, counts: np.ndarray) -> None:
    """Plain-text PGM dump of the visit counts."""
    maxval = max(int(counts.max()), 1)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"P2\n{counts.shape[1]} {counts.shape[0]}\n{maxval}\n")
        for row in counts:
            fh.write(" ".join(str(int(v)) for v in row))
            fh.write("\n")


def read_pgm(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        tokens: list[str] = []
        for line in fh:
            hash_at = line.find("#")
            if hash_at != -1:
                line = line[:hash_at]
            tokens.extend(line.split())
    if not tokens or tokens[0] != "P2":
        raise ValueError("not a plain PGM file")
    width, height = int(tokens[1]), int(tokens[2])
    values = np.array([int(v) for v in tokens[4:4 + width * height]], dtype=np.int64)
    if values.size != width * height:
        raise ValueError("truncated PGM data")
    return values.reshape(height, width)
