"""Maximal operators over a dyadic ball family.

Ball averages divide the cell mass of the samples whose centers fall in the
ball by the continuous ball measure (2r in 1-D, pi r^2 in 2-D).  Radii are
snapped so that the covered cell volume never exceeds the continuous measure:
in 1-D they are whole numbers of cells, in 2-D each radius is inflated until
pi r^2 dominates the lattice count.  This keeps every average of |f| below
sup|f| and makes the power inequality for ball means exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import ndimage

from .errors import ZeroDenominator
from .grid import GridSpec, SampledFunction
from .kernels import ReproducingPair
from .transforms import ConvolutionPlan, build_field, build_plan

__all__ = [
    "BallFamily",
    "ball_volume",
    "hl_maximal",
    "powered_maximal",
    "peetre_maximal",
    "hardy_norm",
    "default_peetre_exponent",
    "fs_vector_check",
]

DEFAULT_RADII_PER_OCTAVE = {1: 32, 2: 8}


def ball_volume(radius: float, dim: int) -> float:
    return 2.0 * radius if dim == 1 else math.pi * radius**2


def _snap_radii_1d(grid: GridSpec, per_octave: int) -> np.ndarray:
    n = grid.points_per_axis
    octaves = int(math.log2(n))
    ladder = n * 2.0 ** (-np.arange(octaves * per_octave + 1) / per_octave)
    cells = np.unique(np.maximum(1, np.round(ladder).astype(int)))
    return cells * grid.spacing


def _snap_radii_2d(grid: GridSpec, per_octave: int) -> np.ndarray:
    n = grid.points_per_axis
    spacing = grid.spacing
    j = np.arange(n)
    d = np.minimum(j, n - j)
    dx, dy = np.meshgrid(d, d, indexing="ij")
    dist2 = (dx**2 + dy**2).astype(np.int64)
    octaves = int(math.log2(n))
    ladder = (n / 2) * 2.0 ** (-np.arange(octaves * per_octave + 1) / per_octave)
    radii = []
    for eta in ladder:
        eta = max(1.0, min(eta, n / 2))
        # inflate until the continuous area dominates the lattice count, so
        # ball averages of a constant never exceed the constant
        for _ in range(64):
            count = int(np.count_nonzero(dist2 < eta**2))
            needed = math.sqrt(count / math.pi)
            if eta >= needed:
                break
            eta = needed * (1.0 + 1e-12)
        if eta <= n / 2:
            radii.append(eta * spacing)
    radii.append(2.0 * grid.half_width)  # full box: every cell, measure 4*pi*L^2
    return np.unique(np.asarray(radii))


@dataclass(frozen=True)
class BallFamily:
    """Finite family of balls: every grid point is a center, radii are dyadic.

    ``radii_per_octave`` refines the classical octave ladder; the default of 1
    reproduces it, larger values give the density needed to track continuum
    suprema to a few percent.
    """

    grid: GridSpec
    radii: np.ndarray
    radii_per_octave: int

    @classmethod
    def build(cls, grid: GridSpec, radii_per_octave: int = 1) -> "BallFamily":
        if radii_per_octave < 1:
            raise ValueError("radii_per_octave must be >= 1")
        if grid.dim == 1:
            radii = _snap_radii_1d(grid, radii_per_octave)
        else:
            radii = _snap_radii_2d(grid, radii_per_octave)
        radii.setflags(write=False)
        return cls(grid=grid, radii=radii, radii_per_octave=radii_per_octave)

    def __len__(self) -> int:
        return len(self.radii)

    def iter_balls(self):
        """Enumerate (center index, radius) over the whole family."""
        for r in self.radii:
            for idx in np.ndindex(self.grid.shape):
                yield idx, float(r)

    def mask(self, radius: float) -> np.ndarray:
        """Offset-indexed membership mask: torus distance < radius."""
        d = self.grid.offset_distances()
        return d < radius

    def cell_count(self, radius: float) -> int:
        return int(np.count_nonzero(self.mask(radius)))

    def ball_sums(self, values: np.ndarray, radius: float) -> np.ndarray:
        """Sum of ``values`` over cells whose centers lie in B(x, r), for all x."""
        grid = self.grid
        if grid.dim == 1:
            w = self.cell_count(radius)
            if w >= grid.points_per_axis:
                return np.full(grid.shape, values.sum())
            half = (w - 1) // 2
            padded = np.concatenate([values[-half:], values, values[:half]]) if half else values
            c = np.concatenate([[0.0], np.cumsum(padded)])
            return c[w:] - c[:-w]
        mask = self.mask(radius)
        if mask.all():
            return np.full(grid.shape, values.sum())
        out = np.fft.irfft2(np.fft.rfft2(values) * np.fft.rfft2(mask.astype(float)),
                            s=grid.shape)
        return out

    def ball_filter(self, values: np.ndarray, radius: float, op: str) -> np.ndarray:
        """Max or min of ``values`` over B(x, r) for every center x."""
        grid = self.grid
        red = np.max if op == "max" else np.min
        if grid.dim == 1:
            w = self.cell_count(radius)
            if w >= grid.points_per_axis:
                return np.full(grid.shape, red(values))
            fn1d = ndimage.maximum_filter1d if op == "max" else ndimage.minimum_filter1d
            return fn1d(values, size=w, mode="wrap")
        mask = self.mask(radius)
        if mask.all():
            return np.full(grid.shape, red(values))
        n = grid.points_per_axis
        centered = np.fft.fftshift(mask)
        offsets = np.argwhere(centered) - n // 2
        k = int(np.abs(offsets).max())  # snapped radii keep k <= n/2 - 1
        foot = centered[n // 2 - k : n // 2 + k + 1, n // 2 - k : n // 2 + k + 1]
        fn = ndimage.maximum_filter if op == "max" else ndimage.minimum_filter
        return fn(values, footprint=foot, mode="wrap")


@lru_cache(maxsize=8)
def _default_family(grid: GridSpec) -> BallFamily:
    return BallFamily.build(grid, DEFAULT_RADII_PER_OCTAVE[grid.dim])


def hl_maximal(f: SampledFunction, balls: BallFamily | None = None) -> SampledFunction:
    """Ball-average maximal function sup over family balls containing x."""
    balls = balls or _default_family(f.grid)
    mag = np.abs(f.values)
    cellvol = f.grid.cell_volume
    out = np.zeros(f.grid.shape)
    for r in balls.radii:
        avg = balls.ball_sums(mag, r) * (cellvol / ball_volume(r, f.grid.dim))
        # x sees exactly the balls whose centers lie within r of x
        np.maximum(out, balls.ball_filter(avg, r, "max"), out=out)
    np.maximum(out, 0.0, out=out)  # FFT ball sums can leave -1e-17 on empty regions
    return SampledFunction(f.grid, out)


def powered_maximal(f: SampledFunction, theta: float, balls: BallFamily | None = None) -> SampledFunction:
    """Composition {M(|f|^theta)}^(1/theta)."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    powered = SampledFunction(f.grid, np.abs(f.values) ** theta)
    m = hl_maximal(powered, balls)
    return SampledFunction(f.grid, np.real(m.values) ** (1.0 / theta))


def peetre_maximal(
    f: SampledFunction,
    psi,
    b: float,
    plan: ConvolutionPlan | None = None,
    chunk: int = 128,
) -> SampledFunction:
    """Smoothed maximal function sup_{y, t} |psi_t * f(x - y)| / (1 + |y|/t)^b.

    The supremum runs over every grid offset y (torus distance, hence |y| <= L)
    and every scale of the plan's grid.
    """
    if b <= 0:
        raise ValueError("b must be positive")
    if plan is None:
        raise ValueError("peetre_maximal needs a convolution plan for psi")
    field = build_field(f, plan)
    grid = f.grid
    shape = grid.shape
    axes = tuple(range(grid.dim))
    dist_grid = grid.offset_distances()
    # offsets beyond half the box are wrap-around aliases; skip them
    keep = np.argwhere(dist_grid <= grid.half_width)
    dist = dist_grid[tuple(keep.T)]
    n_cells = grid.size
    out = np.zeros(n_cells)
    mags = np.abs(field.values.reshape(n_cells, -1))
    for k, t in enumerate(plan.scales.scales):
        weights = (1.0 + dist / t) ** (-b)
        col = mags[:, k].reshape(shape)
        best = np.zeros(n_cells)
        for start in range(0, len(keep), chunk):
            offs = keep[start : start + chunk]
            w = weights[start : start + chunk]
            # x - y for every x at once: roll the column by each offset
            gathered = np.empty((len(offs), n_cells))
            for i, off in enumerate(offs):
                gathered[i] = np.roll(col, shift=tuple(off), axis=axes).ravel()
            np.maximum(best, (gathered * w[:, None]).max(axis=0), out=best)
        np.maximum(out, best, out=out)
    return SampledFunction(grid, out.reshape(shape))


def default_peetre_exponent(dim: int, floor_exponent: float) -> float:
    """Decay exponent b = 2 (n / floor + 1): safely above n / min(p, 1)."""
    return 2.0 * (dim / floor_exponent + 1.0)


def hardy_norm(f: SampledFunction, space, pair: ReproducingPair, b: float | None = None) -> float:
    """Space norm of the smoothed maximal function of the companion kernel."""
    from .spaces import floor_exponent, space_norm  # deferred: spaces uses BallFamily

    if b is None:
        b = default_peetre_exponent(f.grid.dim, floor_exponent(space))
    plan = build_plan(pair.psi, pair.scales)
    m = peetre_maximal(f, pair.psi, b, plan)
    return space_norm(m, space)


def fs_vector_check(
    fs: list[SampledFunction],
    theta: float,
    s: float,
    space,
    balls: BallFamily | None = None,
) -> float:
    """Ratio of the l^s-aggregated powered maximal family to the plain family.

    Finiteness of this ratio across families is the vector-valued boundedness
    the whole theory rests on; the harness records it empirically.
    """
    from .spaces import space_norm

    if not fs:
        raise ValueError("need at least one function")
    if s <= 0:
        raise ValueError("s must be positive")
    grid = fs[0].grid
    num = np.zeros(grid.shape)
    den = np.zeros(grid.shape)
    for f in fs:
        m = powered_maximal(f, theta, balls)
        num += np.real(m.values) ** s
        den += np.abs(f.values) ** s
    num_f = SampledFunction(grid, num ** (1.0 / s))
    den_f = SampledFunction(grid, den ** (1.0 / s))
    denom = space_norm(den_f, space)
    if denom == 0.0:
        raise ZeroDenominator("all inputs vanish")
    return space_norm(num_f, space) / denom
