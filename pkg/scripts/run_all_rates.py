"""Run every rate config and print fitted slopes next to the theoretical ones."""

from __future__ import annotations

import argparse
from pathlib import Path

from flsgd.harness.config import load_config
from flsgd.harness.experiments import paired_difference, run_rate_experiment

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", type=Path, default=ROOT / "out")
    args = ap.parse_args()
    reports = {}
    for name in ("t3_prediction", "t5_estimation", "t1_regularized", "t1_baseline"):
        rep = run_rate_experiment(load_config(ROOT / "configs" / f"{name}.toml"), jobs=args.jobs,
                                  out_dir=args.out / name)
        reports[name] = rep
        print(f"{name:<16s} slope {rep.fit.slope:+.4f} +/- {rep.fit.stderr:.4f}  theory {rep.theoretical_slope:+.4f}"
              f"  {'PASS' if rep.passed else 'FAIL'}")
    n = max(reports["t1_regularized"].trials)
    mean, lo, hi = paired_difference(reports["t1_regularized"].terminal(n), reports["t1_baseline"].terminal(n))
    print(f"regularized - baseline at n={n}: {mean:.3e}  95% CI ({lo:.3e}, {hi:.3e})")


if __name__ == "__main__":
    main()
