"""Cumulative regret and mean violation at several horizons, with log-log slopes."""

import argparse

from trustfl.config import parse_config
from trustfl.engine import run_experiment
from trustfl.metrics import loglog_slope


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/section_v.yaml")
    ap.add_argument("--horizons", type=int, nargs="+", default=[250, 500, 1000, 2000])
    ap.add_argument("--realizations", type=int, default=10)
    ap.add_argument("--variant", default="trusted")
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()
    base = parse_config(a.config, {"realizations": a.realizations, "variant": a.variant})
    reg, vio = [], []
    for T in a.horizons:
        e = run_experiment(base.replace(**{"algorithm.horizon": T}), workers=a.workers)
        reg.append(float(e.mean["cumulative_regret"][-1]))
        vio.append(float(e.mean["cumulative_violation_mean"][-1]))
        print(f"T={T:5d}  cumulative regret {reg[-1]:10.3f}  cumulative mean violation {vio[-1]:10.3f}")
    for name, vals in (("regret", reg), ("violation", vio)):
        slope = loglog_slope(a.horizons, vals) if min(vals) > 0 else float("nan")
        print(f"{name} log-log slope: {slope:.3f}")


if __name__ == "__main__":
    main()
