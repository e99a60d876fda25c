"""Trust process alone: misclassification rates against the exponential bound, and T_f."""

import argparse
import json
from pathlib import Path

import numpy as np

from trustfl.config import parse_config
from trustfl.topology import build_topology
from trustfl.trust import lemma1_bound, simulate_trust_process


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/section_v.yaml")
    ap.add_argument("--realizations", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", type=Path, default=Path("out/trust"))
    a = ap.parse_args()
    cfg = parse_config(a.config)
    T = cfg.algorithm.horizon
    stats = simulate_trust_process(cfg.trust, build_topology(cfg.topology), T, a.realizations,
                                   np.random.default_rng(a.seed))
    t = np.arange(T + 1)
    bound = np.array([lemma1_bound(int(k), cfg.trust.drift_honest) for k in t])
    tf = stats.t_f[stats.t_f > 0]
    a.out_dir.mkdir(parents=True, exist_ok=True)
    summary = {
        "realizations": a.realizations,
        "finite_tf_fraction": len(tf) / a.realizations,
        "tf_percentiles": dict(zip(["min", "q25", "median", "q75", "p95", "max"],
                                   np.percentile(tf, [0, 25, 50, 75, 95, 100]).tolist())) if len(tf) else {},
        "max_rate_minus_bound": {
            "honest": float(np.max(stats.rate(False) - bound)),
            "byzantine": float(np.max(stats.rate(True) - bound)),
        },
    }
    (a.out_dir / "trust_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(t, np.maximum(stats.rate(False), 1e-7), label="honest neighbors")
    ax.semilogy(t, np.maximum(stats.rate(True), 1e-7), label="Byzantine neighbors")
    ax.semilogy(t, bound, "k--", label="exp(-2tE^2)")
    ax.set_xlabel("round t")
    ax.set_ylabel("misclassification rate")
    ax.legend()
    fig.tight_layout()
    fig.savefig(a.out_dir / "misclassification.png")


if __name__ == "__main__":
    main()
