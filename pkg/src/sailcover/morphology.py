"""Shape analysis of the covered and uncovered pixel regions.

Both regions are read as sets of 4-connected components. Two scores grade a
component, each capped at 1.05:

* convexity: pixel area over the area of the convex hull of the pixel
  centers, the hull getting one pixel of dilation slack so thin shapes are
  not punished for discretization. Components without three non-collinear
  pixel centers score exactly 1.0.
* shape: the isoperimetric ratio 4*pi*A / P^2, after filling interior voids
  smaller than the area threshold, with P the outer boundary edge count
  (4-neighborhood) times the pixel size.

Two implementations share these conventions. The fast path, used inside the
planner's scoring loop, is a numba run-length engine: each row is split into
runs, components are unions of vertically overlapping runs, and hulls,
perimeters, and hole filling all work on run intervals rather than pixels.
The plain numpy/scipy reference is selected with ``exact=True`` and serves
as the oracle the fast path is verified against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError

FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.int32)
SCORE_CAP = 1.05


# ---------------------------------------------------------------------------
# fast path: run-length components
# ---------------------------------------------------------------------------

@njit(cache=True)
def _find(parent: np.ndarray, x: int) -> int:
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def _union(parent: np.ndarray, a: int, b: int) -> None:
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra < rb:
        parent[rb] = ra
    elif rb < ra:
        parent[ra] = rb


@njit(cache=True)
def _scan_runs(mask: np.ndarray):
    """Row runs of set pixels: (row, lo, hi) per run plus per-row offsets."""
    rows, cols = mask.shape
    total = 0
    for r in range(rows):
        prev = np.uint8(0)
        for c in range(cols):
            v = mask[r, c]
            if v == 1 and prev == 0:
                total += 1
            prev = v
    run_row = np.empty(total, np.int64)
    run_lo = np.empty(total, np.int64)
    run_hi = np.empty(total, np.int64)
    rowstart = np.empty(rows + 1, np.int64)
    k = 0
    for r in range(rows):
        rowstart[r] = k
        c = 0
        while c < cols:
            if mask[r, c] == 1:
                c0 = c
                while c < cols and mask[r, c] == 1:
                    c += 1
                run_row[k] = r
                run_lo[k] = c0
                run_hi[k] = c
                k += 1
            else:
                c += 1
    rowstart[rows] = k
    return run_row, run_lo, run_hi, rowstart


@njit(cache=True)
def _label_runs(run_lo: np.ndarray, run_hi: np.ndarray, rowstart: np.ndarray):
    """Union vertically overlapping runs; returns per-run component ids,
    component pixel areas, and the component count."""
    nr = run_lo.shape[0]
    rows = rowstart.shape[0] - 1
    parent = np.arange(nr)
    for r in range(1, rows):
        a = rowstart[r - 1]
        aend = rowstart[r]
        b = rowstart[r]
        bend = rowstart[r + 1]
        while a < aend and b < bend:
            if run_lo[a] < run_hi[b] and run_lo[b] < run_hi[a]:
                _union(parent, a, b)
            if run_hi[a] < run_hi[b]:
                a += 1
            elif run_hi[b] < run_hi[a]:
                b += 1
            else:
                a += 1
                b += 1
    comp = np.empty(nr, np.int64)
    ncomp = 0
    for k in range(nr):
        if _find(parent, k) == k:
            comp[k] = ncomp
            ncomp += 1
    areas = np.zeros(ncomp, np.int64)
    for k in range(nr):
        cid = comp[_find(parent, k)]
        comp[k] = cid
        areas[cid] += run_hi[k] - run_lo[k]
    return comp, areas, ncomp


@njit(cache=True)
def _hull_area_px(ext_lo: np.ndarray, ext_hi: np.ndarray, r0: int) -> float:
    """Convex hull area of pixel centers given per-row column extremes.

    Coordinates are doubled so the half-pixel centers stay integral; the
    shoelace sum is divided by 8 (2 for shoelace, 4 for the doubling).
    Returns -1.0 for degenerate (collinear) point sets.
    """
    nrows = ext_lo.shape[0]
    xs = np.empty(2 * nrows, np.int64)
    ys = np.empty(2 * nrows, np.int64)
    m = 0
    for rr in range(nrows):
        if ext_lo[rr] < 0:
            continue
        xs[m] = 2 * ext_lo[rr] + 1
        ys[m] = 2 * (r0 + rr) + 1
        m += 1
        if ext_hi[rr] != ext_lo[rr]:
            xs[m] = 2 * ext_hi[rr] + 1
            ys[m] = 2 * (r0 + rr) + 1
            m += 1
    if m < 3:
        return -1.0
    span = np.int64(0)
    for v in range(m):
        if ys[v] > span:
            span = ys[v]
    key = xs[:m] * (span + 2) + ys[:m]
    order = np.argsort(key)
    hx = np.empty(2 * m + 2, np.int64)
    hy = np.empty(2 * m + 2, np.int64)
    k = 0
    for pass_dir in range(2):
        start_k = k
        for oi in range(m):
            idx = order[oi] if pass_dir == 0 else order[m - 1 - oi]
            x = xs[idx]
            y = ys[idx]
            while k >= start_k + 2:
                cross = (hx[k - 1] - hx[k - 2]) * (y - hy[k - 2]) - \
                        (hy[k - 1] - hy[k - 2]) * (x - hx[k - 2])
                if cross <= 0:
                    k -= 1
                else:
                    break
            hx[k] = x
            hy[k] = y
            k += 1
        k -= 1
    if k < 3:
        return -1.0
    shoel = np.int64(0)
    for v in range(k):
        w = v + 1 if v + 1 < k else 0
        shoel += hx[v] * hy[w] - hx[w] * hy[v]
    return abs(shoel) / 8.0


@njit(cache=True)
def _overlap_len(alo, ahi, astart, aend, blo, bhi, bstart, bend) -> int:
    """Total intersection length of two sorted interval lists."""
    total = 0
    a = astart
    b = bstart
    while a < aend and b < bend:
        lo = max(alo[a], blo[b])
        hi = min(ahi[a], bhi[b])
        if hi > lo:
            total += hi - lo
        if ahi[a] < bhi[b]:
            a += 1
        elif bhi[b] < ahi[a]:
            b += 1
        else:
            a += 1
            b += 1
    return total


@njit(cache=True)
def _component_scores(run_row, run_lo, run_hi, rowstart, comp, target: int,
                      area_px: int, thr_px: float) -> tuple:
    """Convexity and shape of one labeled component.

    Works inside the component's bounding box. Complement regions enclosed
    by the box either touch its border (and therefore drain to the outside)
    or are genuine holes of the component; holes strictly smaller than the
    threshold are filled before the perimeter is measured.
    """
    nr = run_lo.shape[0]
    rows = rowstart.shape[0] - 1
    # bounding box of the target component
    r0 = rows
    r1 = -1
    c0 = np.int64(1 << 60)
    c1 = np.int64(-1)
    nruns_t = 0
    for k in range(nr):
        if comp[k] != target:
            continue
        nruns_t += 1
        rr = run_row[k]
        if rr < r0:
            r0 = rr
        if rr > r1:
            r1 = rr
        if run_lo[k] < c0:
            c0 = run_lo[k]
        if run_hi[k] - 1 > c1:
            c1 = run_hi[k] - 1
    nbr = r1 - r0 + 1

    # hull from per-row extremes
    ext_lo = np.full(nbr, -1, np.int64)
    ext_hi = np.full(nbr, -1, np.int64)
    for k in range(nr):
        if comp[k] != target:
            continue
        rr = run_row[k] - r0
        if ext_lo[rr] < 0 or run_lo[k] < ext_lo[rr]:
            ext_lo[rr] = run_lo[k]
        if run_hi[k] - 1 > ext_hi[rr]:
            ext_hi[rr] = run_hi[k] - 1
    hull_px = _hull_area_px(ext_lo, ext_hi, r0)
    if hull_px <= 0.0:
        conv = 1.0
    else:
        conv = min(area_px / (hull_px + 1.0), SCORE_CAP)

    # gaps: complement intervals of the component within the box
    gap_cap = nruns_t + nbr + 1
    g_row = np.empty(gap_cap, np.int64)
    g_lo = np.empty(gap_cap, np.int64)
    g_hi = np.empty(gap_cap, np.int64)
    g_rowstart = np.empty(nbr + 1, np.int64)
    ng = 0
    for rr in range(nbr):
        g_rowstart[rr] = ng
        r = r0 + rr
        cursor = c0
        for k in range(rowstart[r], rowstart[r + 1]):
            if comp[k] != target:
                continue
            if run_lo[k] > cursor:
                g_row[ng] = rr
                g_lo[ng] = cursor
                g_hi[ng] = run_lo[k]
                ng += 1
            cursor = run_hi[k]
        if cursor < c1 + 1:
            g_row[ng] = rr
            g_lo[ng] = cursor
            g_hi[ng] = c1 + 1
            ng += 1
    g_rowstart[nbr] = ng

    gcomp, gareas, ngc = _label_runs(g_lo[:ng], g_hi[:ng], g_rowstart)
    touches = np.zeros(ngc, np.uint8)
    for k in range(ng):
        if g_row[k] == 0 or g_row[k] == nbr - 1 or g_lo[k] == c0 or g_hi[k] == c1 + 1:
            touches[gcomp[k]] = 1
    fill = np.zeros(ngc, np.uint8)
    filled_area = np.int64(0)
    for gc in range(ngc):
        if touches[gc] == 0 and gareas[gc] < thr_px:
            fill[gc] = 1
    for gc in range(ngc):
        if fill[gc]:
            filled_area += gareas[gc]

    # merged material intervals per box row: component runs plus filled gaps
    m_lo = np.empty(nruns_t + ng, np.int64)
    m_hi = np.empty(nruns_t + ng, np.int64)
    m_rowstart = np.empty(nbr + 1, np.int64)
    nm = 0
    for rr in range(nbr):
        m_rowstart[rr] = nm
        r = r0 + rr
        ti = rowstart[r]
        tend = rowstart[r + 1]
        gi = g_rowstart[rr]
        gend = g_rowstart[rr + 1]
        while True:
            # next target run in this row
            while ti < tend and comp[ti] != target:
                ti += 1
            # next filled gap in this row
            while gi < gend and fill[gcomp[gi]] == 0:
                gi += 1
            t_ok = ti < tend
            g_ok = gi < gend
            if not t_ok and not g_ok:
                break
            if t_ok and (not g_ok or run_lo[ti] < g_lo[gi]):
                lo = run_lo[ti]
                hi = run_hi[ti]
                ti += 1
            else:
                lo = g_lo[gi]
                hi = g_hi[gi]
                gi += 1
            if nm > m_rowstart[rr] and lo <= m_hi[nm - 1]:
                if hi > m_hi[nm - 1]:
                    m_hi[nm - 1] = hi
            else:
                m_lo[nm] = lo
                m_hi[nm] = hi
                nm += 1
    m_rowstart[nbr] = nm

    a_filled = area_px + filled_area
    edges = np.int64(0)
    for rr in range(nbr):
        edges += 2 * (m_rowstart[rr + 1] - m_rowstart[rr])
    edges += 2 * a_filled
    for rr in range(nbr - 1):
        ov = _overlap_len(m_lo, m_hi, m_rowstart[rr], m_rowstart[rr + 1],
                          m_lo, m_hi, m_rowstart[rr + 1], m_rowstart[rr + 2])
        edges -= 2 * ov
    shape = min(4.0 * np.pi * a_filled / (edges * edges), SCORE_CAP)
    return conv, shape


@njit(cache=True)
def _phase_metrics_runs(mask: np.ndarray, thr_px: float) -> tuple:
    """(component count, largest area px, convexity, shape, big count) for
    the set pixels of a mask."""
    run_row, run_lo, run_hi, rowstart = _scan_runs(mask)
    if run_lo.shape[0] == 0:
        return 0, np.int64(0), 1.0, 1.0, 0
    comp, areas, ncomp = _label_runs(run_lo, run_hi, rowstart)
    largest = 0
    big = 0
    for cid in range(ncomp):
        if areas[cid] > areas[largest]:
            largest = cid
        if areas[cid] > thr_px:
            big += 1
    conv, shape = _component_scores(run_row, run_lo, run_hi, rowstart, comp,
                                    largest, areas[largest], thr_px)
    return ncomp, areas[largest], conv, shape, big


@njit(cache=True)
def _set_scores(mask: np.ndarray, thr_px: float) -> tuple:
    """Convexity and shape of all set pixels taken as one collection,
    regardless of how many components they form."""
    run_row, run_lo, run_hi, rowstart = _scan_runs(mask)
    nr = run_lo.shape[0]
    if nr == 0:
        return 1.0, 1.0
    whole = np.zeros(nr, np.int64)
    area = np.int64(0)
    for k in range(nr):
        area += run_hi[k] - run_lo[k]
    return _component_scores(run_row, run_lo, run_hi, rowstart, whole, 0,
                             area, thr_px)


@njit(cache=True)
def _invert_mask(mask: np.ndarray) -> np.ndarray:
    rows, cols = mask.shape
    out = np.empty((rows, cols), np.uint8)
    for r in range(rows):
        for c in range(cols):
            out[r, c] = 1 - mask[r, c]
    return out


@njit(cache=True)
def _joint_metrics(mask: np.ndarray, thr_px: float) -> tuple:
    cov = _phase_metrics_runs(mask, thr_px)
    unc = _phase_metrics_runs(_invert_mask(mask), thr_px)
    return cov + unc


# ---------------------------------------------------------------------------
# exact reference path (numpy / scipy)
# ---------------------------------------------------------------------------

def _label_exact(mask: np.ndarray):
    labels, n = ndimage.label(mask, structure=FOUR_CONN)
    if n == 0:
        return labels, np.zeros(1, dtype=np.int64)
    areas = np.bincount(labels.ravel(), minlength=n + 1).astype(np.int64)
    areas[0] = 0
    return labels, areas


def _hull_ratio_exact(comp: np.ndarray) -> float:
    pts = np.argwhere(comp)
    npix = pts.shape[0]
    if npix < 3:
        return 1.0
    centers = pts.astype(float) + 0.5
    try:
        hull = ConvexHull(centers[:, ::-1])
    except QhullError:
        return 1.0  # collinear centers
    area_px = hull.volume
    if area_px == 0.0:
        return 1.0
    return min(npix / (area_px + 1.0), SCORE_CAP)


def _fill_small_holes_exact(comp: np.ndarray, max_hole_px: float) -> np.ndarray:
    inv = ~comp
    labels, n = ndimage.label(inv, structure=FOUR_CONN)
    if n == 0:
        return comp
    border = np.zeros(n + 1, dtype=bool)
    border[labels[0, :]] = True
    border[labels[-1, :]] = True
    border[labels[:, 0]] = True
    border[labels[:, -1]] = True
    areas = np.bincount(labels.ravel(), minlength=n + 1)
    out = comp.copy()
    for lab in range(1, n + 1):
        if not border[lab] and areas[lab] < max_hole_px:
            out[labels == lab] = True
    return out


def _perimeter_edges_exact(comp: np.ndarray) -> int:
    a = int(comp.sum())
    hadj = int(np.count_nonzero(comp[:, 1:] & comp[:, :-1]))
    vadj = int(np.count_nonzero(comp[1:, :] & comp[:-1, :]))
    return 4 * a - 2 * (hadj + vadj)


def _shape_exact(comp: np.ndarray, max_hole_px: float) -> float:
    filled = _fill_small_holes_exact(comp, max_hole_px)
    edges = _perimeter_edges_exact(filled)
    if edges == 0:
        return 1.0
    return min(4.0 * np.pi * float(filled.sum()) / (edges * edges), SCORE_CAP)


def _phase_metrics_exact(mask: np.ndarray, thr_px: float):
    labels, areas = _label_exact(mask)
    n = areas.shape[0] - 1
    if n == 0:
        return 0, 0, 1.0, 1.0, 0
    largest = int(areas[1:].argmax()) + 1
    big = int(np.count_nonzero(areas[1:] > thr_px))
    comp = labels == largest
    return n, int(areas[largest]), _hull_ratio_exact(comp), \
        _shape_exact(comp, thr_px), big


# ---------------------------------------------------------------------------
# public surface
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MorphologyReport:
    """Joint shape summary of the covered and uncovered regions."""

    covered_components: int
    uncovered_components: int
    largest_covered_m2: float
    largest_uncovered_m2: float
    covered_convexity: float
    covered_shape: float
    uncovered_convexity: float
    uncovered_shape: float
    uncovered_big_components: int

    @property
    def regularity(self) -> float:
        return (self.covered_convexity * self.uncovered_convexity
                * self.covered_shape * self.uncovered_shape)


def connected_components(mask: np.ndarray, pixel_area_m2: float
                         ) -> tuple[list[float], np.ndarray]:
    """Areas (m^2, descending) and the label grid of a region's components."""
    labels, areas = _label_exact(np.asarray(mask, dtype=bool))
    sizes = sorted((float(a) * pixel_area_m2 for a in areas[1:]), reverse=True)
    return sizes, labels


def _as_mask_u1(mask: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(mask, dtype=bool).view(np.uint8))


def convexity_score(comp: np.ndarray, exact: bool = False) -> float:
    """Convexity of the set pixels of a mask."""
    comp = np.asarray(comp, dtype=bool)
    if not comp.any():
        return 1.0
    if exact:
        return _hull_ratio_exact(comp)
    return float(_set_scores(_as_mask_u1(comp), 0.0)[0])


def shape_score(comp: np.ndarray, a_thres_m2: float, pixel_area_m2: float,
                exact: bool = False) -> float:
    """Isoperimetric score of the set pixels of a mask after hole filling."""
    comp = np.asarray(comp, dtype=bool)
    if not comp.any():
        return 1.0
    thr_px = a_thres_m2 / pixel_area_m2
    if exact:
        return float(_shape_exact(comp, thr_px))
    return float(_set_scores(_as_mask_u1(comp), thr_px)[1])


def region_report(covered: np.ndarray, pixel_area_m2: float, a_thres_m2: float,
                  exact: bool = False) -> MorphologyReport:
    """Full report for a covered mask and its complement."""
    thr_px = a_thres_m2 / pixel_area_m2
    if exact:
        cov_mask = np.asarray(covered, dtype=bool)
        vals = _phase_metrics_exact(cov_mask, thr_px) + _phase_metrics_exact(~cov_mask, thr_px)
    else:
        vals = _joint_metrics(_as_mask_u1(covered), thr_px)
    return MorphologyReport(
        covered_components=int(vals[0]),
        uncovered_components=int(vals[5]),
        largest_covered_m2=float(vals[1]) * pixel_area_m2,
        largest_uncovered_m2=float(vals[6]) * pixel_area_m2,
        covered_convexity=float(vals[2]),
        covered_shape=float(vals[3]),
        uncovered_convexity=float(vals[7]),
        uncovered_shape=float(vals[8]),
        uncovered_big_components=int(vals[9]),
    )


def would_split_uncovered(raster, cells, a_thres_m2: float,
                          exact: bool = False) -> bool:
    """Would stamping these cells leave two or more uncovered components,
    each strictly larger than the area threshold?"""
    covered = raster.covered.copy()
    for cell in cells:
        win, twin = raster._window(cell)
        covered[win] |= raster.template[twin]
    thr_px = a_thres_m2 / raster.pixel_area_m2
    if exact:
        _, areas = _label_exact(~covered)
        return int(np.count_nonzero(areas[1:] > thr_px)) >= 2
    vals = _phase_metrics_runs(_as_mask_u1(~covered), thr_px)
    return int(vals[4]) >= 2
