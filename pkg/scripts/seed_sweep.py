"""Refit a rate config under several master seeds to gauge slope variability."""

from __future__ import annotations

import argparse
from dataclasses import replace

import numpy as np

from flsgd.harness.config import load_config
from flsgd.harness.experiments import build_model, run_rate_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config")
    ap.add_argument("--seeds", type=int, default=8)
    args = ap.parse_args()
    cfg = load_config(args.config)
    inst = build_model(cfg)
    slopes = []
    for seed in range(1, args.seeds + 1):
        c = replace(cfg, experiment=replace(cfg.experiment, seed=seed))
        rep = run_rate_experiment(c, instance=inst)
        slopes.append(rep.fit.slope)
        print(f"seed {seed:>3d}  slope {rep.fit.slope:+.4f}")
    s = np.array(slopes)
    print(f"theory {rep.theoretical_slope:+.4f}  mean {s.mean():+.4f}  max deviation "
          f"{np.abs(s - rep.theoretical_slope).max():.4f}")


if __name__ == "__main__":
    main()
