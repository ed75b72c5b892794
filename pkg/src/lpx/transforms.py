"""Multiscale convolution engine.

Every convolution is a Fourier multiplier on the periodic grid: the dilated
kernel acts as phi_hat(t * xi) on the spectrum, which is exact for periodic
data and costs one FFT pair per scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ScaleOutOfRange
from .grid import GridSpec, HalfSpaceField, SampledFunction, ScaleGrid
from .kernels import Kernel

__all__ = ["ConvolutionPlan", "build_plan", "convolve_at_scale", "build_field", "spatial_kernel"]

WRAP_DECAY_THRESHOLD = 1e-8


@dataclass(frozen=True)
class ConvolutionPlan:
    """Kernel, scale grid, and the cached multiplier table phi_hat(t_k xi)."""

    grid: GridSpec
    kernel: Kernel
    scales: ScaleGrid
    multipliers: np.ndarray  # shape (len(scales),) + grid.shape
    wraparound_warning: bool

    def multiplier_at(self, k: int) -> np.ndarray:
        return self.multipliers[k]


def build_plan(kernel: Kernel, scales: ScaleGrid) -> ConvolutionPlan:
    grid = kernel.grid
    radii = grid.frequency_radii()
    ts = scales.scales
    table = np.empty((len(ts),) + grid.shape)
    for k, t in enumerate(ts):
        table[k] = kernel.profile(t * radii)
    table.setflags(write=False)
    # at the coarsest scale the multiplier should live on the lowest dual band
    # only; otherwise the spatial kernel is wider than the box and wraps
    lowest = np.min(radii[radii > 0])
    tail = np.abs(table[-1][radii > lowest])
    warn = bool(tail.size and tail.max() >= WRAP_DECAY_THRESHOLD)
    return ConvolutionPlan(grid=grid, kernel=kernel, scales=scales, multipliers=table,
                           wraparound_warning=warn)


def _apply_multiplier(values: np.ndarray, mult: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(np.fft.fftn(values) * mult)


def convolve_at_scale(f: SampledFunction, plan: ConvolutionPlan, t: float) -> SampledFunction:
    """Convolve f with the kernel dilated to scale t (t within the grid range)."""
    scales = plan.scales
    if not scales.contains(t):
        raise ScaleOutOfRange(f"t={t:g} outside [{scales.t_min:g}, {scales.t_max:g}]")
    ts = scales.scales
    k = int(np.argmin(np.abs(ts - t)))
    if np.isclose(ts[k], t, rtol=1e-12, atol=0.0):
        mult = plan.multipliers[k]
    else:
        mult = plan.kernel.profile(t * plan.grid.frequency_radii())
    return SampledFunction(f.grid, _apply_multiplier(f.values, mult))


def build_field(f: SampledFunction, plan: ConvolutionPlan) -> HalfSpaceField:
    """All scale slices (phi_t * f) stacked into a half-space field."""
    spectrum = np.fft.fftn(f.values)
    K = len(plan.scales)
    out = np.empty(plan.grid.shape + (K,), dtype=np.complex128)
    for k in range(K):
        out[..., k] = np.fft.ifftn(spectrum * plan.multipliers[k])
    return HalfSpaceField(plan.grid, plan.scales, out)


def spatial_kernel(kernel: Kernel, t: float) -> np.ndarray:
    """Offset-indexed samples of the dilated spatial kernel (index 0 = zero offset).

    Satisfies exactly: convolve_at_scale(f, ., t)(x) equals
    cell_volume * sum_y f(y) * spatial_kernel[x - y] on the torus.
    """
    grid = kernel.grid
    mult = kernel.profile(t * grid.frequency_radii())
    scale = grid.size / (2.0 * grid.half_width) ** grid.dim
    return np.fft.ifftn(mult) * scale
