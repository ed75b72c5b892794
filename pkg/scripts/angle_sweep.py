#!/usr/bin/env python3
"""Aperture sweep: how the cone-functional norm scales with the opening angle.

Fits the log-log slope over alpha in {1, 2, 4, 8} for several spaces and
writes gnuplot-ready columns (alpha, mean norm) per space.  Usage:

    python scripts/angle_sweep.py [--trials 20] [--seed 0] [--out reports]
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from lpx.grid import GridSpec, ScaleGrid
from lpx.harness import change_of_angle_experiment
from lpx.spaces import Lebesgue, Morrey, WeightedLebesgue, power_weight


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="reports")
    args = ap.parse_args()

    grid = GridSpec(dim=1, half_width=8.0, points_per_axis=512)
    scales = ScaleGrid(1 / 16, 1.0, 8)  # 8x aperture at t_max stays inside the box
    alphas = (1.0, 2.0, 4.0, 8.0)
    spaces = {
        "L2": Lebesgue(2.0),
        "L1": Lebesgue(1.0),
        "morrey": Morrey(2.0, 1.0),
        "weighted": WeightedLebesgue(1.0, power_weight(grid, 0.5), q_omega=1.5),
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ok = True
    for name, space in spaces.items():
        rep = change_of_angle_experiment(space, alphas, args.trials, grid, scales, seed=args.seed)
        ok &= rep.passed
        lines = ["# alpha  mean_norm"]
        for a in alphas:
            lines.append(f"{a:g} {float(np.mean(rep.series[f'norm_alpha_{a:g}'])):.17g}")
        (out / f"angle_{name}.dat").write_text("\n".join(lines) + "\n")
        (out / f"angle_{name}.json").write_text(rep.to_json())
        print(
            f"{name:9s} slope {rep.summary['fitted_exponent']:6.3f} "
            f"bound {rep.thresholds['slope_max']:.3f}  {'PASS' if rep.passed else 'FAIL'}"
        )
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
