"""Band-pass convolution kernels, given on the Fourier side.

Two admissible families are provided: an annular kernel whose transform is a
smooth cutoff equal to 1 on 2 <= |xi| <= 4 and supported in 1 < |xi| < 8, and
a weak kernel 2*pi*|xi| * exp(1/2 - 2*pi^2*|xi|^2) (derivative-of-Gaussian
profile, peak normalized to 1) that is positive on every ray.  Both vanish at
xi = 0.  A reproducing companion psi is constructed so that the product
phi_hat * psi_hat integrates to 1 against dt/t along every ray.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import BandCoverageError, DegenerateKernel, DualRangeTooSmall
from .grid import GridSpec, SampledFunction, ScaleGrid

__all__ = [
    "KernelKind",
    "Kernel",
    "ReproducingPair",
    "smooth_step",
    "annular_profile",
    "weak_profile",
    "build_annular_kernel",
    "build_weak_kernel",
    "calderon_companion",
    "band_coverage",
    "reproduce",
    "validate_kernel",
    "write_kernel_csv",
]

NONDEGENERACY_FLOOR = 1e-3
NORMALIZATION_TOL = 1e-3
COVERAGE_MIN = 0.99
UNCOVERED_MASS_TOL = 1e-6


class KernelKind(enum.Enum):
    ANNULAR = "annular"
    WEAK = "weak"


def smooth_step(u: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for u <= 0, 1 for u >= 1, strictly increasing between."""
    u = np.asarray(u, dtype=float)
    a = np.zeros_like(u)
    b = np.zeros_like(u)
    pos = u > 0
    lt1 = u < 1
    with np.errstate(over="ignore"):
        a[pos] = np.exp(-1.0 / u[pos])
        b[lt1] = np.exp(-1.0 / (1.0 - u[lt1]))
    return a / (a + b)  # a + b > 0 everywhere on the real line


def annular_profile(r: np.ndarray) -> np.ndarray:
    """Radial transform: 0 on [0,1], rises to 1 on [1,2], 1 on [2,4], falls to 0 on [4,8]."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    rise = (r > 1) & (r < 2)
    out[rise] = smooth_step(r[rise] - 1.0)
    out[(r >= 2) & (r <= 4)] = 1.0
    fall = (r > 4) & (r < 8)
    out[fall] = smooth_step((8.0 - r[fall]) / 4.0)
    return out


def weak_profile(r: np.ndarray) -> np.ndarray:
    """Radial transform 2*pi*r*exp(1/2 - 2*pi^2*r^2); peak value 1 at r = 1/(2*pi)."""
    r = np.asarray(r, dtype=float)
    return 2.0 * np.pi * r * np.exp(0.5 - 2.0 * np.pi**2 * r**2)


@dataclass(frozen=True)
class Kernel:
    """Convolution kernel represented by its transform on the dual grid.

    ``profile`` gives the radial transform at arbitrary radius, which is what
    scale dilation phi_hat(t*xi) evaluates; ``fourier_values`` caches it on
    the grid's own dual nodes.
    """

    grid: GridSpec
    fourier_values: np.ndarray
    kind: KernelKind
    radial: bool
    profile: Callable[[np.ndarray], np.ndarray]
    witness_range: tuple[float, float] | None = None  # scales realizing nondegeneracy

    def multiplier(self, t: float) -> np.ndarray:
        """Transform of the t-dilated kernel on the dual grid."""
        return self.profile(t * self.grid.frequency_radii())


def validate_kernel(kernel: Kernel) -> None:
    """Check the admissibility contract on the dual grid; raise on violation."""
    vals = kernel.fourier_values
    radii = kernel.grid.frequency_radii()
    if not np.all(np.isfinite(vals)):
        raise ValueError("fourier values must be finite")
    zero = radii == 0.0
    if not np.all(vals[zero] == 0.0):
        raise ValueError("transform must vanish at frequency zero")
    if kernel.kind is KernelKind.ANNULAR:
        if np.any(vals < 0) or np.any(vals > 1):
            raise ValueError("annular transform must lie in [0, 1]")
        plateau = (radii >= 2.0) & (radii <= 4.0)
        if not np.all(vals[plateau] == 1.0):
            raise ValueError("annular transform must equal 1 on 2 <= |xi| <= 4")
        outside = (radii <= 1.0) | (radii >= 8.0)
        if not np.all(vals[outside] == 0.0):
            raise ValueError("annular transform must vanish off 1 < |xi| < 8")
    elif kernel.kind is KernelKind.WEAK:
        if kernel.witness_range is None:
            raise ValueError("weak kernel needs a nondegeneracy witness range")
        t_lo, t_hi = kernel.witness_range
        pos = radii > 0
        probe = np.exp(np.linspace(math.log(t_lo), math.log(t_hi), 64))
        witnessed = np.zeros(np.count_nonzero(pos), dtype=bool)
        for t in probe:
            witnessed |= np.abs(kernel.profile(t * radii[pos])) >= NONDEGENERACY_FLOOR
        if not np.all(witnessed):
            raise ValueError("nondegeneracy witness missing for some dual direction")


def build_annular_kernel(grid: GridSpec) -> Kernel:
    """Annular band kernel; needs the dual range to reach |xi| = 8."""
    if grid.nyquist < 8.0:
        raise DualRangeTooSmall(
            f"axis Nyquist frequency {grid.nyquist:g} < 8; enlarge N or shrink L"
        )
    vals = annular_profile(grid.frequency_radii())
    kernel = Kernel(grid, vals, KernelKind.ANNULAR, radial=True, profile=annular_profile)
    validate_kernel(kernel)
    return kernel


def build_weak_kernel(grid: GridSpec) -> Kernel:
    """Weakly admissible kernel, nonzero on every ray at some scale."""
    radii = grid.frequency_radii()
    vals = weak_profile(radii)
    pos = radii[radii > 0]
    # the profile peaks at t*|xi| = 1/(2*pi): witnesses live on this band
    t_lo = 1.0 / (2.0 * np.pi * pos.max())
    t_hi = 1.0 / (2.0 * np.pi * pos.min())
    kernel = Kernel(
        grid, vals, KernelKind.WEAK, radial=True, profile=weak_profile, witness_range=(t_lo, t_hi)
    )
    validate_kernel(kernel)
    return kernel


@dataclass(frozen=True)
class ReproducingPair:
    """Kernel pair (phi, psi) with int_0^inf phi_hat(t xi) psi_hat(t xi) dt/t = 1."""

    phi: Kernel
    psi: Kernel
    scales: ScaleGrid
    normalization_check: float
    support: tuple[float, float]  # radial annulus carrying psi_hat


def _fine_log_nodes(lo: float, hi: float, steps_per_octave: int = 256) -> tuple[np.ndarray, float]:
    octaves = math.log2(hi / lo)
    count = int(round(steps_per_octave * octaves))
    nodes = lo * 2.0 ** ((np.arange(count) + 0.5) / steps_per_octave)
    return nodes, math.log(2.0) / steps_per_octave


def _band_center(profile: Callable[[np.ndarray], np.ndarray]) -> float:
    """Log-midpoint of the radial band where |profile| is within 10% of its peak."""
    probe, _ = _fine_log_nodes(1e-3, 64.0, steps_per_octave=128)
    vals = np.abs(profile(probe))
    peak = vals.max()
    if peak <= 0.0:
        raise DegenerateKernel("radial profile is identically zero")
    active = probe[vals >= 0.9 * peak]
    return float(np.exp(np.mean(np.log(active))))


def calderon_companion(phi: Kernel, scales: ScaleGrid) -> ReproducingPair:
    """Build the companion psi_hat = phi_hat * b / c with b an annular bump.

    The bump is the annular cutoff dilated so its plateau straddles the band
    where phi_hat is large.  c is the scale-grid quadrature of
    phi_hat(r)^2 b(r) dr/r, so the product phi_hat * psi_hat integrates to one
    along every ray; radial phi only.
    """
    if not phi.radial:
        raise DegenerateKernel("companion construction requires a radial kernel")
    s0 = _band_center(phi.profile) / math.sqrt(8.0)  # annular log-center is sqrt(8)

    def bump(r: np.ndarray, _s0: float = s0) -> np.ndarray:
        return annular_profile(np.asarray(r, dtype=float) / _s0)

    ts = scales.scales
    c = float(np.sum(phi.profile(ts) ** 2 * bump(ts)) * scales.log_weight)
    if c <= 1e-6:
        raise DegenerateKernel(f"normalization constant {c:g} <= 1e-6; scale grid misses the band")

    def psi_profile(r: np.ndarray, _c: float = c) -> np.ndarray:
        return phi.profile(r) * bump(r) / _c

    psi_vals = psi_profile(phi.grid.frequency_radii())
    psi = Kernel(phi.grid, psi_vals, phi.kind, radial=True, profile=psi_profile,
                 witness_range=phi.witness_range)

    # independent fine quadrature of the ray integral at the reference direction
    nodes, w = _fine_log_nodes(s0 / 2.0, 16.0 * s0)
    check = float(np.sum(phi.profile(nodes) * psi_profile(nodes)) * w)
    if abs(check - 1.0) > NORMALIZATION_TOL:
        raise DegenerateKernel(
            f"ray normalization {check:.6f} deviates from 1 beyond {NORMALIZATION_TOL}; "
            f"the scale grid must cover the radial band [{s0:.3g}, {8 * s0:.3g}] "
            f"and resolve it (>= 8 steps per octave)"
        )
    return ReproducingPair(phi=phi, psi=psi, scales=scales, normalization_check=check,
                           support=(s0, 8.0 * s0))


def band_coverage(pair: ReproducingPair) -> np.ndarray:
    """Truncated ray integral sum_k phi_hat(t_k xi) psi_hat(t_k xi) ln2/J per dual node."""
    radii = pair.phi.grid.frequency_radii()
    ts = pair.scales.scales
    cov = np.zeros_like(radii)
    for t in ts:
        cov += pair.phi.profile(t * radii) * pair.psi.profile(t * radii)
    return cov * pair.scales.log_weight


def reproduce(f: SampledFunction, pair: ReproducingPair, scales: ScaleGrid | None = None) -> SampledFunction:
    """Rebuild f from the truncated two-kernel resolution of the identity.

    Requires the spectrum of f to sit where the truncated ray integral is at
    least 0.99; the relative L2 error of the output is then at most 1e-2.
    """
    if scales is not None and scales != pair.scales:
        pair = ReproducingPair(pair.phi, pair.psi, scales, pair.normalization_check, pair.support)
    cov = band_coverage(pair)
    spectrum = np.fft.fftn(f.values)
    power = np.abs(spectrum) ** 2
    total = float(power.sum())
    if total > 0.0:
        uncovered = float(power[cov < COVERAGE_MIN].sum())
        if uncovered > UNCOVERED_MASS_TOL * total:
            raise BandCoverageError(
                f"{uncovered / total:.3e} of the spectral mass lies outside the covered band"
            )
    return SampledFunction(f.grid, np.fft.ifftn(spectrum * cov))


def write_kernel_csv(kernel: Kernel, path: str | Path) -> None:
    """CSV of (frequency coordinates, transform value) plus JSON metadata sidecar."""
    path = Path(path)
    xi = kernel.grid.axis_frequencies()
    if kernel.grid.dim == 1:
        coords = [xi]
    else:
        fx, fy = np.meshgrid(xi, xi, indexing="ij")
        coords = [fx.ravel(), fy.ravel()]
    vals = kernel.fourier_values.ravel()
    with path.open("w") as fh:
        for row in zip(*[c.ravel() for c in coords], vals):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    meta = {
        "kind": kernel.kind.value,
        "radial": kernel.radial,
        "grid": {"dim": kernel.grid.dim, "N": kernel.grid.points_per_axis, "L": kernel.grid.half_width},
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
