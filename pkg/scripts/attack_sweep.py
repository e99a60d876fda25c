"""Time-averaged regret at T for every attack kind, relative to the Byzantine-free baseline."""

import argparse

from trustfl.adversary import ATTACK_KINDS
from trustfl.config import parse_config
from trustfl.engine import run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/section_v.yaml")
    ap.add_argument("--realizations", type=int, default=5)
    ap.add_argument("--magnitudes", type=float, nargs="*", default=[None])
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()
    cfg = parse_config(a.config, {"realizations": a.realizations})
    base = run_experiment(cfg.replace(variant="old-baseline"), workers=a.workers).mean["timeavg_regret"][-1]
    print(f"old-baseline: {base:.4f}")
    for kind in ATTACK_KINDS:
        for mag in a.magnitudes:
            e = run_experiment(cfg.replace(**{"attack.kind": kind, "attack.magnitude": mag}), workers=a.workers)
            v = e.mean["timeavg_regret"][-1]
            label = "default" if mag is None else f"{mag:g}"
            print(f"{kind:15s} magnitude {label:>8s}: {v:.4f}  ratio {v / base:.2f}")


if __name__ == "__main__":
    main()
