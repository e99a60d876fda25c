"""Proposed (with attack) vs Byzantine-free baseline: CSV, JSON summary and both figures.

    python scripts/reproduce_figures.py --out-dir out/figures [--realizations 50] [--workers 1]
"""

import argparse
import sys

from trustfl.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", default="configs/section_v.yaml")
    ap.add_argument("--out-dir", default="out/figures")
    ap.add_argument("--realizations", type=int)
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()
    argv = ["compare", "--config", a.config, "--out-dir", a.out_dir, "--format", "csv,json,plot",
            "--workers", str(a.workers)]
    if a.realizations:
        argv += ["--realizations", str(a.realizations)]
    sys.exit(main(argv))
