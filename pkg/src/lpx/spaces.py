"""Norm evaluators for the concrete function spaces.

Five families are implemented: plain and weighted Lebesgue, Morrey,
mixed-norm, variable-exponent, and Orlicz-slice.  All of them are lattice
quasi-norms evaluated by the grid rectangle rule; suprema over balls run over
a finite dyadic family; Luxemburg-type norms are solved by bisection on the
modular, which is strictly monotone in the scaling parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NoBracket, NotInAInfty
from .grid import GridSpec, SampledFunction
from .maximal import BallFamily, ball_volume

__all__ = [
    "Lebesgue",
    "WeightedLebesgue",
    "Morrey",
    "MixedNorm",
    "VariableLebesgue",
    "OrliczSlice",
    "Weight",
    "ExponentFunction",
    "OrliczFunction",
    "space_norm",
    "orlicz_norm",
    "convexify_norm",
    "floor_exponent",
    "ap_characteristic",
    "critical_index",
    "power_weight",
    "descriptor_from_json",
    "descriptor_to_json",
]

LUXEMBURG_BRACKET = (1e-30, 1e30)
LUXEMBURG_MAX_ITER = 200
LUXEMBURG_RTOL = 1e-9
AP_CAP = 1e6
AP_GROWTH_FLOOR = 0.02  # log2 growth per refinement always counted as stable
AP_GROWTH_SLOPE = 0.15  # threshold grows with the measured singularity strength
AP_Q_MAX = 64.0


# ---------------------------------------------------------------------------
# auxiliary objects


@dataclass(frozen=True)
class Weight:
    """Positive weight on the grid, with the ball family its averages use.

    ``evaluator`` re-samples the weight on refined grids; the critical-index
    search needs it because instability only shows up under refinement.
    """

    values: SampledFunction
    family: BallFamily
    evaluator: Callable[..., np.ndarray] | None = None

    def __post_init__(self):
        vals = self.values.values
        if np.any(vals.imag != 0):
            raise ValueError("weight must be real")
        if not np.all(vals.real > 0):
            raise ValueError("weight must be strictly positive")

    @property
    def array(self) -> np.ndarray:
        return self.values.values.real


def power_weight(grid: GridSpec, a: float, family: BallFamily | None = None) -> Weight:
    """|x|^a sampled at cell centers (finite there since centers avoid 0)."""
    if family is None:
        family = BallFamily.build(grid, 4)

    def evaluator(*mesh):
        r = np.sqrt(sum(c**2 for c in mesh))
        return r**a

    vals = SampledFunction(grid, evaluator(*grid.coordinate_mesh()).astype(complex))
    return Weight(values=vals, family=family, evaluator=evaluator)


@dataclass(frozen=True)
class ExponentFunction:
    """Variable exponent p(x) with its recorded log-Holder constant."""

    values: np.ndarray
    log_holder_constant: float = field(default=float("nan"))

    @classmethod
    def build(cls, grid: GridSpec, values: np.ndarray) -> "ExponentFunction":
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ValueError("exponent shape must match the grid")
        if values.min() <= 0 or not np.all(np.isfinite(values)):
            raise ValueError("exponent must be positive and finite")
        flat = values.ravel()
        mesh = grid.coordinate_mesh()
        pts = np.stack([c.ravel() for c in mesh], axis=1)
        # smallest C with |p(x)-p(y)| <= C / log(e + 1/|x-y|) over all grid pairs
        c_min = 0.0
        for i in range(len(flat)):
            d = np.linalg.norm(pts - pts[i], axis=1)
            d[i] = np.inf
            c_here = np.max(np.abs(flat - flat[i]) * np.log(np.e + 1.0 / d))
            c_min = max(c_min, c_here)
        return cls(values=values, log_holder_constant=float(c_min))

    @property
    def p_minus(self) -> float:
        return float(self.values.min())

    @property
    def p_plus(self) -> float:
        return float(self.values.max())


@dataclass(frozen=True)
class OrliczFunction:
    """Monotone Young-type function with declared lower and upper types."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    lower_type: float
    upper_type: float

    def __post_init__(self):
        probe = np.logspace(-6, 6, 64)
        vals = self.evaluator(probe)
        if self.evaluator(np.array([0.0]))[0] != 0.0:
            raise ValueError("Phi(0) must be 0")
        if np.any(vals <= 0) or np.any(np.diff(vals) < 0):
            raise ValueError("Phi must be positive and nondecreasing on (0, inf)")
        # sampled type bounds: Phi(s t) <= C s^p Phi(t); record the worst constant
        s = np.logspace(-3, 0, 16)
        big_s = np.logspace(0, 3, 16)
        t = np.logspace(-3, 3, 16)
        low = np.max(self.evaluator(np.outer(s, t)) / (s[:, None] ** self.lower_type * vals_of(self.evaluator, t)))
        up = np.max(self.evaluator(np.outer(big_s, t)) / (big_s[:, None] ** self.upper_type * vals_of(self.evaluator, t)))
        if not (np.isfinite(low) and np.isfinite(up)):
            raise ValueError("type bounds do not hold on the sample grid")
        object.__setattr__(self, "_type_constants", (float(low), float(up)))

    def inverse(self, y: float) -> float:
        """Numeric inverse on (0, inf) by bisection in log-argument."""
        lo, hi = 1e-30, 1e30
        if not (self.evaluator(np.array([lo]))[0] <= y <= self.evaluator(np.array([hi]))[0]):
            raise NoBracket(f"Phi never reaches {y:g} on the bracket")
        for _ in range(LUXEMBURG_MAX_ITER):
            mid = math.sqrt(lo * hi)
            if self.evaluator(np.array([mid]))[0] <= y:
                lo = mid
            else:
                hi = mid
            if hi / lo < 1 + LUXEMBURG_RTOL:
                break
        return math.sqrt(lo * hi)


def vals_of(fn, t):
    return fn(np.asarray(t, dtype=float))


def power_orlicz(p: float) -> OrliczFunction:
    return OrliczFunction(evaluator=lambda t: np.asarray(t, dtype=float) ** p,
                          lower_type=p, upper_type=p)


# ---------------------------------------------------------------------------
# space descriptors


@dataclass(frozen=True)
class Lebesgue:
    p: float

    def __post_init__(self):
        if self.p <= 0:
            raise ValueError("p must be positive")

    tag = "lebesgue"


@dataclass(frozen=True)
class WeightedLebesgue:
    p: float
    weight: Weight
    q_omega: float | None = None  # critical Muckenhoupt exponent, if known

    tag = "weighted"


@dataclass(frozen=True)
class Morrey:
    p: float
    r: float
    family: BallFamily | None = None

    def __post_init__(self):
        if not (0 < self.r <= self.p):
            raise ValueError("need 0 < r <= p")

    tag = "morrey"


@dataclass(frozen=True)
class MixedNorm:
    exponents: tuple[float, ...]

    def __post_init__(self):
        if not all(0 < p for p in self.exponents):
            raise ValueError("every exponent must be positive (math.inf allowed)")

    tag = "mixed"


@dataclass(frozen=True)
class VariableLebesgue:
    exponent: ExponentFunction

    tag = "variable"


@dataclass(frozen=True)
class OrliczSlice:
    phi: OrliczFunction
    r: float
    slice_t: float

    def __post_init__(self):
        if self.r <= 0 or self.slice_t <= 0:
            raise ValueError("r and slice_t must be positive")

    tag = "orlicz_slice"


SpaceDescriptor = Lebesgue | WeightedLebesgue | Morrey | MixedNorm | VariableLebesgue | OrliczSlice


def floor_exponent(space: SpaceDescriptor) -> float:
    """Admissible lower exponent of the space, used for lambda and b defaults."""
    if isinstance(space, Lebesgue):
        return space.p
    if isinstance(space, WeightedLebesgue):
        q = space.q_omega if space.q_omega is not None else critical_index(space.weight)
        return space.p / q
    if isinstance(space, Morrey):
        return space.r
    if isinstance(space, MixedNorm):
        return float(min(space.exponents))
    if isinstance(space, VariableLebesgue):
        return space.exponent.p_minus
    if isinstance(space, OrliczSlice):
        return min(space.r, space.phi.lower_type)
    raise TypeError(f"unknown space descriptor {space!r}")


# ---------------------------------------------------------------------------
# norms


def _lebesgue_norm(mag: np.ndarray, p: float, cellvol: float, weight: np.ndarray | None = None) -> float:
    w = weight if weight is not None else 1.0
    return float((np.sum(mag**p * w) * cellvol) ** (1.0 / p))


def _morrey_norm(f: SampledFunction, space: Morrey) -> float:
    family = space.family or BallFamily.build(f.grid, 4)
    mag = np.abs(f.values)
    dim = f.grid.dim
    cellvol = f.grid.cell_volume
    best = 0.0
    for rad in family.radii:
        local = family.ball_sums(mag**space.r, rad) * cellvol
        np.maximum(local, 0.0, out=local)
        factor = ball_volume(float(rad), dim) ** (1.0 / space.p - 1.0 / space.r)
        best = max(best, factor * float(local.max()) ** (1.0 / space.r))
    return float(best)


def _mixed_norm(f: SampledFunction, space: MixedNorm) -> float:
    ps = space.exponents
    if len(ps) != f.grid.dim:
        raise ValueError("need one exponent per axis")
    spacing = f.grid.spacing
    work = np.abs(f.values)
    # integrate axis by axis: first exponent binds the first axis
    for p in ps:
        if math.isinf(p):
            work = work.max(axis=0)
        else:
            work = (np.sum(work**p, axis=0) * spacing) ** (1.0 / p)
    return float(work)


def _luxemburg(modular: Callable[[float], float], sup: float) -> float:
    """inf{lam : modular(lam) <= 1} for a modular strictly decreasing in lam."""
    lo = sup * LUXEMBURG_BRACKET[0]
    hi = sup * LUXEMBURG_BRACKET[1]
    if modular(hi) > 1.0 or modular(lo) < 1.0:
        raise NoBracket("modular does not cross 1 inside the bracket")
    for _ in range(LUXEMBURG_MAX_ITER):
        mid = math.sqrt(lo * hi)
        if modular(mid) > 1.0:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1 + LUXEMBURG_RTOL:
            break
    return hi


def _variable_norm(f: SampledFunction, space: VariableLebesgue) -> float:
    mag = np.abs(f.values)
    sup = float(mag.max())
    if sup == 0.0:
        return 0.0
    pvals = space.exponent.values
    cellvol = f.grid.cell_volume

    def modular(lam: float) -> float:
        with np.errstate(divide="ignore"):
            ratio = mag / lam
        return float(np.sum(np.where(mag > 0, ratio**pvals, 0.0)) * cellvol)

    return _luxemburg(modular, sup)


def orlicz_norm(f: SampledFunction, phi: OrliczFunction) -> float:
    """Luxemburg norm inf{lam : integral of Phi(|f|/lam) <= 1}."""
    mag = np.abs(f.values)
    sup = float(mag.max())
    if sup == 0.0:
        return 0.0
    cellvol = f.grid.cell_volume

    def modular(lam: float) -> float:
        return float(np.sum(phi.evaluator(mag / lam)) * cellvol)

    return _luxemburg(modular, sup)


def _orlicz_slice_norm(f: SampledFunction, space: OrliczSlice) -> float:
    grid = f.grid
    mask = grid.offset_distances() < space.slice_t
    count = int(np.count_nonzero(mask))
    if count == 0:
        raise ValueError("slice radius smaller than one cell")
    cellvol = grid.cell_volume
    # denominator: the slice ball indicator has the same norm at every center
    phi = space.phi
    denom = 1.0 / phi.inverse(1.0 / (count * cellvol))

    mag = np.abs(f.values)
    # gather each ball's samples: windows[x] = values within the slice around x
    offsets = np.argwhere(np.asarray(mask).reshape(grid.shape))
    flat = mag.reshape(-1)
    n = grid.points_per_axis
    if grid.dim == 1:
        offs = offsets[:, 0]
        idx = (np.arange(n)[:, None] + offs[None, :]) % n
        windows = flat[idx]
    else:
        ox, oy = offsets[:, 0], offsets[:, 1]
        base = np.arange(grid.size)
        bx, by = np.unravel_index(base, grid.shape)
        ix = (bx[:, None] + ox[None, :]) % n
        iy = (by[:, None] + oy[None, :]) % n
        windows = mag[ix, iy]

    sups = windows.max(axis=1)
    lams = np.where(sups > 0, sups, 1.0)
    lo = lams * LUXEMBURG_BRACKET[0]
    hi = lams * LUXEMBURG_BRACKET[1]
    # vectorized bisection of the window modulars
    for _ in range(80):
        mid = np.sqrt(lo * hi)
        mods = phi.evaluator(windows / mid[:, None]).sum(axis=1) * cellvol
        high = mods > 1.0
        lo = np.where(high, mid, lo)
        hi = np.where(high, hi, mid)
    inner = np.where(sups > 0, hi, 0.0)
    ratios = inner / denom
    return float((np.sum(ratios**space.r) * cellvol) ** (1.0 / space.r))


def space_norm(f: SampledFunction, space: SpaceDescriptor) -> float:
    """Dispatch the norm of f in the given space; 0 iff f vanishes on the grid."""
    if isinstance(space, Lebesgue):
        return _lebesgue_norm(np.abs(f.values), space.p, f.grid.cell_volume)
    if isinstance(space, WeightedLebesgue):
        return _lebesgue_norm(np.abs(f.values), space.p, f.grid.cell_volume, space.weight.array)
    if isinstance(space, Morrey):
        return _morrey_norm(f, space)
    if isinstance(space, MixedNorm):
        return _mixed_norm(f, space)
    if isinstance(space, VariableLebesgue):
        return _variable_norm(f, space)
    if isinstance(space, OrliczSlice):
        return _orlicz_slice_norm(f, space)
    raise TypeError(f"unknown space descriptor {space!r}")


def convexify_norm(f: SampledFunction, space: SpaceDescriptor, p: float) -> float:
    """Norm of |f|^p in the space, to the 1/p power."""
    if p <= 0:
        raise ValueError("p must be positive")
    powered = SampledFunction(f.grid, np.abs(f.values) ** p)
    return space_norm(powered, space) ** (1.0 / p)


# ---------------------------------------------------------------------------
# Muckenhoupt layer


def ap_characteristic(w: Weight, p: float) -> float:
    """Largest ball-average product over the family (grid means, ess-sup = max)."""
    if p < 1:
        raise ValueError("p must be at least 1")
    family = w.family
    omega = w.array
    best = 0.0
    for rad in family.radii:
        count = family.cell_count(rad)
        mean_w = family.ball_sums(omega, rad) / count
        if p == 1.0:
            inv_ess = family.ball_filter(1.0 / omega, rad, "max")
            vals = mean_w * inv_ess
        else:
            mean_dual = family.ball_sums(omega ** (1.0 / (1.0 - p)), rad) / count
            vals = mean_w * np.maximum(mean_dual, 0.0) ** (p - 1.0)
        best = max(best, float(vals.max()))
    return best


def _resampled_weight(w: Weight, factor: int) -> Weight:
    if w.evaluator is None:
        raise ValueError("critical_index needs a weight with an evaluator")
    g = w.values.grid
    fine = GridSpec(dim=g.dim, half_width=g.half_width, points_per_axis=g.points_per_axis * factor)
    family = BallFamily.build(fine, w.family.radii_per_octave)
    vals = SampledFunction(fine, w.evaluator(*fine.coordinate_mesh()).astype(complex))
    return Weight(values=vals, family=family, evaluator=w.evaluator)


def critical_index(w: Weight, tol: float = 0.05) -> float:
    """Smallest q whose characteristic stays stable under grid refinement.

    On a fixed finite grid every positive weight has a finite characteristic;
    divergence of the continuum supremum shows up as growth when the grid is
    refined.  The stability threshold is scaled by the refinement growth of
    the q=1 characteristic, which measures the strength of the worst
    singularity: for power weights |x|^a this centers the detected transition
    at 1 + a/n across the whole family.
    """
    weights = [w, _resampled_weight(w, 2), _resampled_weight(w, 4)]

    def growth(q: float) -> float:
        chars = [ap_characteristic(wk, q) for wk in weights]
        if chars[-1] > AP_CAP or not all(np.isfinite(chars)):
            return math.inf
        return math.log2(chars[2] / chars[1])

    strength = growth(1.0)
    if strength <= AP_GROWTH_FLOOR:
        return 1.0
    tau = max(AP_GROWTH_SLOPE * strength, AP_GROWTH_FLOOR) if math.isfinite(strength) else 0.05

    def stable(q: float) -> bool:
        return growth(q) <= tau

    lo, hi = 1.0, 2.0
    while not stable(hi):
        lo, hi = hi, hi * 2.0
        if hi > AP_Q_MAX:
            raise NotInAInfty(f"no stable exponent up to {AP_Q_MAX}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if stable(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# JSON configuration


def descriptor_to_json(space: SpaceDescriptor) -> dict:
    if isinstance(space, Lebesgue):
        return {"tag": "lebesgue", "p": space.p}
    if isinstance(space, WeightedLebesgue):
        out = {"tag": "weighted", "p": space.p}
        if space.q_omega is not None:
            out["q_omega"] = space.q_omega
        return out
    if isinstance(space, Morrey):
        return {"tag": "morrey", "p": space.p, "r": space.r}
    if isinstance(space, MixedNorm):
        return {"tag": "mixed", "p": list(space.exponents)}
    if isinstance(space, VariableLebesgue):
        return {"tag": "variable", "p_minus": space.exponent.p_minus, "p_plus": space.exponent.p_plus}
    if isinstance(space, OrliczSlice):
        return {
            "tag": "orlicz_slice",
            "r": space.r,
            "t": space.slice_t,
            "lower_type": space.phi.lower_type,
            "upper_type": space.phi.upper_type,
        }
    raise TypeError(f"unknown space descriptor {space!r}")


def descriptor_from_json(cfg: dict, grid: GridSpec) -> SpaceDescriptor:
    """Build a descriptor from the JSON schema; weights/exponents by recipe."""
    cfg = dict(cfg)
    tag = cfg.pop("tag")
    if tag == "lebesgue":
        return Lebesgue(p=float(cfg.pop("p")), **_reject_extra(cfg))
    if tag == "weighted":
        p = float(cfg.pop("p"))
        wcfg = cfg.pop("weight", {"kind": "power", "a": 0.5})
        q_omega = cfg.pop("q_omega", None)
        _reject_extra(cfg)
        if wcfg.get("kind") == "power":
            weight = power_weight(grid, float(wcfg["a"]))
        elif wcfg.get("kind") == "csv":
            from .grid import read_function_csv

            vals = read_function_csv(wcfg["path"])
            weight = Weight(values=vals, family=BallFamily.build(grid, 4))
        else:
            raise ValueError(f"unknown weight recipe {wcfg!r}")
        return WeightedLebesgue(p=p, weight=weight, q_omega=q_omega)
    if tag == "morrey":
        return Morrey(p=float(cfg.pop("p")), r=float(cfg.pop("r")), **_reject_extra(cfg))
    if tag == "mixed":
        ps = tuple(float(x) for x in cfg.pop("p"))
        _reject_extra(cfg)
        return MixedNorm(exponents=ps)
    if tag == "variable":
        if "csv" in cfg:
            from .grid import read_function_csv

            vals = read_function_csv(cfg.pop("csv")).values.real
        else:
            base = float(cfg.pop("base", 1.8))
            dip = float(cfg.pop("dip", 0.3))
            mesh = grid.coordinate_mesh()
            r2 = sum(c**2 for c in mesh)
            vals = base - dip * np.exp(-r2)
        _reject_extra(cfg)
        return VariableLebesgue(exponent=ExponentFunction.build(grid, vals))
    if tag == "orlicz_slice":
        r = float(cfg.pop("r"))
        t = float(cfg.pop("t"))
        lower = float(cfg.pop("lower_type", 1.2))
        upper = float(cfg.pop("upper_type", 1.6))
        _reject_extra(cfg)
        if lower == upper:
            phi = power_orlicz(lower)
        else:
            phi = OrliczFunction(
                evaluator=lambda u, lo=lower, hi=upper: np.asarray(u, float) ** lo + np.asarray(u, float) ** hi,
                lower_type=lower,
                upper_type=upper,
            )
        return OrliczSlice(phi=phi, r=r, slice_t=t)
    raise ValueError(f"unknown space tag {tag!r}")


def _reject_extra(cfg: dict) -> dict:
    if cfg:
        raise ValueError(f"unknown keys in space config: {sorted(cfg)}")
    return {}
