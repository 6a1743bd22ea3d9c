"""Orientation-reversing set {|p'| < |q'|} of a harmonic polynomial on a sampling grid.

Rows of every grid run along the imaginary axis from the bottom (row 0 at Im z minimal),
columns along the real axis from the left. Stereographic grids keep that orientation in chart
coordinates.
"""
import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import ndimage
from tqdm import tqdm

from constants import GridProjection
from services.polynomial import derivative_radius_bound, dominant_sign, sample
from utils.schemas import ComponentReport, ComponentSurvey, EnsembleSpec, GridWindow, HarmonicPolynomial

logger = logging.getLogger(__name__)

# rows evaluated per block when building a mask
ROW_BLOCK = 256
# log|p'| - log|q'| is clipped here so zeros of either derivative interpolate cleanly
LOG_CLIP = 700.0
# full-disk windows reach slightly past the derivative radius bound
FULL_DISK_MARGIN = 1.05


class UnionFind:
    """Disjoint sets over 0..size-1 with path compression and union by size."""

    def __init__(self, size: int = 0):
        self.parents = list(range(size))
        self.sizes = [1] * size
        self.num_components = size

    def add(self) -> int:
        label = len(self.parents)
        self.parents.append(label)
        self.sizes.append(1)
        self.num_components += 1
        return label

    def find(self, elem: int) -> int:
        root = elem
        while root != self.parents[root]:
            root = self.parents[root]
        while elem != root:
            self.parents[elem], elem = root, self.parents[elem]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.sizes[ra] < self.sizes[rb]:
            ra, rb = rb, ra
        self.parents[rb] = ra
        self.sizes[ra] += self.sizes[rb]
        self.num_components -= 1


def cell_centers(window: GridWindow) -> Tuple[np.ndarray, np.ndarray]:
    """Real-axis and imaginary-axis coordinates of the cell centers (chart coordinates when stereographic)."""
    step = 2.0 * window.half_width / window.resolution
    offsets = -window.half_width + (np.arange(window.resolution) + 0.5) * step
    return window.center.real + offsets, window.center.imag + offsets


def chart_to_plane(w: np.ndarray) -> np.ndarray:
    """Stereographic chart point w to z = tan(|w|/2) w/|w|; |w| must stay below pi."""
    rho = np.abs(w)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.tan(0.5 * rho) * w / rho
    return np.where(rho > 0, z, 0j)


def _block_points(window: GridWindow, xs: np.ndarray, rows: np.ndarray) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    # plane points of one block of rows, plus the cells lying past the chart disk
    w = xs[None, :] + 1j * rows[:, None]
    if window.projection == GridProjection.FLAT:
        return w, None
    beyond = np.abs(w) >= window.half_width
    return chart_to_plane(np.where(beyond, 0j, w)), beyond


def cell_points(window: GridWindow) -> np.ndarray:
    """Plane points z of every cell center, NaN for stereographic cells past the chart disk."""
    xs, ys = cell_centers(window)
    z, beyond = _block_points(window, xs, ys)
    if beyond is not None:
        z[beyond] = np.nan
    return z


def _derivative_field(F: HarmonicPolynomial, window: GridWindow, func, dtype, beyond_value=None) -> np.ndarray:
    xs, ys = cell_centers(window)
    dp = P.polyder(F.a)
    dq = P.polyder(F.b) if F.m >= 1 else None
    out = np.empty((window.resolution, window.resolution), dtype=dtype)
    for start in range(0, window.resolution, ROW_BLOCK):
        z, beyond = _block_points(window, xs, ys[start:start + ROW_BLOCK])
        p_prime = P.polyval(z, dp)
        q_prime = P.polyval(z, dq) if dq is not None else np.zeros_like(z)
        block = func(p_prime, q_prime)
        if beyond is not None:
            block = np.where(beyond, beyond_value, block)
        out[start:start + ROW_BLOCK] = block
    return out


def _reversing_at_infinity(F: HarmonicPolynomial) -> bool:
    return F.m == F.n and dominant_sign(F) < 0


def omega_minus_mask(F: HarmonicPolynomial, window: GridWindow) -> np.ndarray:
    """Boolean grid, True where |p'| < |q'| at the cell center."""
    if F.m == 0:
        return np.zeros((window.resolution, window.resolution), dtype=bool)
    beyond_value = _reversing_at_infinity(F) if window.projection == GridProjection.STEREOGRAPHIC else None
    return _derivative_field(F, window, lambda dp, dq: np.abs(dp) < np.abs(dq), bool, beyond_value)


def full_disk_window(F: HarmonicPolynomial, resolution: int = 1024) -> GridWindow:
    """Stereographic window whose chart disk covers every point where |p'| and |q'| can tie.

    Cell sizes follow the spherical metric, so structure near the origin keeps its resolution
    however far the derivative radius bound reaches.
    """
    radius = max(derivative_radius_bound(F), 1.0)
    return GridWindow(
        center=0j,
        half_width=2.0 * math.atan(FULL_DISK_MARGIN * radius),
        resolution=resolution,
        projection=GridProjection.STEREOGRAPHIC,
    )


def _row_runs(row: np.ndarray) -> List[Tuple[int, int]]:
    padded = np.concatenate(([False], row, [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return list(zip(edges[::2].tolist(), edges[1::2].tolist()))


def _label_runs(mask: np.ndarray) -> Tuple[UnionFind, List[Tuple[int, int, int, int]]]:
    """Union-find over the horizontal runs of True cells, merged with 4-connectivity.

    Returns the forest and the runs as (row, start, stop, label), stop exclusive.
    """
    mask = np.asarray(mask, dtype=bool)
    forest = UnionFind()
    runs: List[Tuple[int, int, int, int]] = []
    previous: List[Tuple[int, int, int]] = []
    for i, row in enumerate(mask):
        current = []
        j = 0
        for start, stop in _row_runs(row):
            label = forest.add()
            # runs above sharing a column are face-adjacent
            while j < len(previous) and previous[j][1] <= start:
                j += 1
            k = j
            while k < len(previous) and previous[k][0] < stop:
                forest.union(label, previous[k][2])
                k += 1
            current.append((start, stop, label))
            runs.append((i, start, stop, label))
        previous = current
    return forest, runs


def count_components(mask: np.ndarray) -> int:
    """Number of 4-connected components of True cells."""
    forest, _ = _label_runs(mask)
    return forest.num_components


def component_report(mask: np.ndarray) -> ComponentReport:
    """Component count plus how many components reach the window edge (possibly truncated)."""
    mask = np.asarray(mask, dtype=bool)
    rows, cols = mask.shape
    forest, runs = _label_runs(mask)
    touching = {
        forest.find(label)
        for i, start, stop, label in runs
        if i == 0 or i == rows - 1 or start == 0 or stop == cols
    }
    return ComponentReport(count=forest.num_components, touching_boundary=len(touching), resolution=rows)


def erode_mask(mask: np.ndarray, iterations: int = 1) -> np.ndarray:
    """Erosion by the 4-neighbour cross; cells beyond the edge count as False."""
    structure = ndimage.generate_binary_structure(2, 1)
    return ndimage.binary_erosion(np.asarray(mask, dtype=bool), structure=structure, iterations=iterations, border_value=0)


def lemniscate_segments(F: HarmonicPolynomial, window: GridWindow) -> List[Tuple[complex, complex]]:
    """Marching-squares segments of the curve |p'| = |q'| through the cell centers.

    The level set is taken of log|p'| - log|q'|; ambiguous saddle cells are split according
    to the value at the cell middle.
    """
    if F.m == 0:
        return []
    beyond_value = None
    if window.projection == GridProjection.STEREOGRAPHIC:
        beyond_value = -LOG_CLIP if _reversing_at_infinity(F) else LOG_CLIP
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = _derivative_field(F, window, lambda dp, dq: np.log(np.abs(dp)) - np.log(np.abs(dq)), np.float64, beyond_value)
    phi = np.nan_to_num(np.clip(phi, -LOG_CLIP, LOG_CLIP), nan=0.0)
    # past the chart disk no crossing can occur, so NaN points there are never used
    grid = cell_points(window)

    # corners: bottom-left, bottom-right, top-right, top-left
    values = [phi[:-1, :-1], phi[:-1, 1:], phi[1:, 1:], phi[1:, :-1]]
    points = [grid[:-1, :-1], grid[:-1, 1:], grid[1:, 1:], grid[1:, :-1]]
    inside = [v < 0 for v in values]

    # edge e joins corner e and corner e+1
    crossings = []
    for e in range(4):
        a, b = e, (e + 1) % 4
        cross = inside[a] != inside[b]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = values[a] / (values[a] - values[b])
        crossings.append((cross, points[a] + np.where(cross, t, 0.0) * (points[b] - points[a])))

    segments: List[Tuple[complex, complex]] = []
    n_cross = sum(c.astype(np.int8) for c, _ in crossings)
    for i, j in zip(*np.nonzero(n_cross == 2)):
        ends = [pts[i, j] for cross, pts in crossings if cross[i, j]]
        segments.append((complex(ends[0]), complex(ends[1])))

    middle = sum(values) / 4.0
    for i, j in zip(*np.nonzero(n_cross == 4)):
        e = [pts[i, j] for _, pts in crossings]
        if (middle[i, j] < 0) == inside[0][i, j]:
            # middle joins bottom-left and top-right; cut off the other two corners
            pairs = [(e[0], e[1]), (e[2], e[3])]
        else:
            pairs = [(e[3], e[0]), (e[1], e[2])]
        segments.extend((complex(u), complex(v)) for u, v in pairs)
    return segments


def component_survey(
    spec: EnsembleSpec,
    trials: int,
    window: GridWindow = GridWindow(),
    full_disk: bool = False,
    check_doubling: bool = False,
    progress: bool = False,
) -> ComponentSurvey:
    """Component counts of the orientation-reversing set for samples 0..trials-1.

    With check_doubling each sample is recounted at twice the resolution on the same window.
    """
    counts, touching, doubled = [], [], []
    for stream in tqdm(range(trials), desc=f"lemniscate n={spec.n} m={spec.m}", disable=not progress):
        F = sample(spec, stream)
        grid = full_disk_window(F, window.resolution) if full_disk else window
        report = component_report(omega_minus_mask(F, grid))
        counts.append(report.count)
        touching.append(report.touching_boundary)
        if report.count > max(spec.n - 1, 0):
            logger.warning("stream %d: %d components exceed n-1 = %d at resolution %d", stream, report.count, spec.n - 1, grid.resolution)
        if check_doubling:
            finer = grid.model_copy(update={"resolution": 2 * grid.resolution})
            doubled.append(count_components(omega_minus_mask(F, finer)))
    return ComponentSurvey(
        spec=spec,
        resolution=window.resolution,
        full_disk=full_disk,
        counts=counts,
        touching_boundary=touching,
        doubled_counts=doubled,
        bound=max(spec.n - 1, 0),
    )


def mask_summary(F: HarmonicPolynomial, window: Optional[GridWindow] = None, full_disk: bool = False) -> Tuple[GridWindow, np.ndarray, ComponentReport]:
    """Window actually used, its mask and the component report for one polynomial."""
    grid = window or GridWindow()
    if full_disk:
        grid = full_disk_window(F, grid.resolution)
    mask = omega_minus_mask(F, grid)
    return grid, mask, component_report(mask)
