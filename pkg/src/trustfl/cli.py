"""Command-line entry point: ``run``, ``compare`` and ``check``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import CONFIG_DIALECT, VARIANTS, ConfigError, SimConfig, parse_config, parse_override, to_dict
from .adversary import ATTACK_KINDS
from .engine import ExperimentResult, run_experiment

FORMATS = ("csv", "json", "plot")
CSV_COLUMNS = ("round", "timeavg_regret", "timeavg_violation_mean", "timeavg_violation_max",
               "misclass_honest", "misclass_byz")

log = logging.getLogger("trustfl")


class OutputError(OSError):
    pass


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass
class OutputBundle:
    out_dir: Path
    manifest: Path
    csv: list = field(default_factory=list)
    json: Optional[Path] = None
    plots: list = field(default_factory=list)

    def files(self) -> list:
        out = [self.manifest, *self.csv]
        if self.json is not None:
            out.append(self.json)
        return out + list(self.plots)


# -- serialization ----------------------------------------------------------------

def series_csv(result: ExperimentResult) -> str:
    """Mean per-round series as CSV text, one row per round."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    m = result.mean
    for k in range(result.horizon):
        w.writerow([k + 1] + [fmt(m[c][k]) for c in CSV_COLUMNS[1:]])
    return buf.getvalue()


def read_series_csv(text: str) -> dict:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    cols = {name: [] for name in header}
    for row in body:
        for name, v in zip(header, row):
            cols[name].append(float(v))
    out = {k: np.asarray(v) for k, v in cols.items()}
    out["round"] = out["round"].astype(np.int64)
    return out


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def tf_stats(values: Sequence[Optional[int]]) -> dict:
    finite = np.array([v for v in values if v is not None], dtype=np.float64)
    out = {"realizations": len(values), "finite": int(len(finite)),
           "finite_fraction": len(finite) / len(values) if values else float("nan"), "values": list(values)}
    if len(finite):
        out.update(min=float(finite.min()), median=float(np.median(finite)), mean=float(finite.mean()),
                   p95=float(np.percentile(finite, 95)), max=float(finite.max()))
    return out


def summary(result: ExperimentResult) -> dict:
    T = result.horizon
    final = {k: (float(v[-1]) if T else None) for k, v in result.mean.items()}
    certs = [{"realization": r.realization, "objective": r.comparator.achieved_objective,
              "max_constraint_residual": r.comparator.max_constraint_residual,
              "iterations": r.comparator.iterations} for r in result.realizations]
    out = {"variant": result.config.variant, "horizon": T, "realizations": len(result.realizations),
           "final": final, "comparator": certs, "t_f": tf_stats(result.t_f_values())}
    if T:
        try:
            k = result.bound_constants()
            curves = result.bound_curves()
            out["bounds"] = {"constants": asdict(k), "regret_bound_at_T": float(curves["regret"][-1]),
                             "violation_bound_at_T": float(curves["violation"][-1]),
                             "measured_cumulative_regret_at_T": final["cumulative_regret"]}
        except ValueError as e:
            out["bounds"] = {"error": str(e)}
    return _jsonable(out)


def manifest(configs: dict, formats: Sequence[str], files: Sequence[str], command: str) -> dict:
    first = next(iter(configs.values()))
    return {
        "software": "trustfl",
        "version": version(),
        "config_dialect": CONFIG_DIALECT,
        "command": command,
        "seed": first.seed,
        "formats": list(formats),
        "configs": {name: to_dict(c) for name, c in configs.items()},
        "files": list(files),
    }


def plot_figures(series: dict, out_dir: Path) -> list:
    """Time-averaged regret and mean violation, one curve per labelled series."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = []
    for col, ylabel, fname in (("timeavg_regret", "time-average regret", "timeavg_regret.png"),
                               ("timeavg_violation_mean", "time-average constraint violation",
                                "timeavg_violation.png")):
        fig, ax = plt.subplots(figsize=(6, 4))
        for label, cols in series.items():
            ax.plot(cols["round"], cols[col], label=label)
        ax.set_xlabel("round t")
        ax.set_ylabel(ylabel)
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        path = out_dir / fname
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
        paths.append(path)
    return paths


def ensure_writable(out_dir: Path) -> None:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with tempfile.TemporaryFile(dir=out_dir):
            pass
    except OSError as e:
        raise OutputError(f"output directory {out_dir} is not writable: {e}") from None


def emit_outputs(results: dict, out_dir, formats: Sequence[str], command: str = "run") -> OutputBundle:
    """Write manifest plus the requested artifacts for ``{label: ExperimentResult}``."""
    out_dir = Path(out_dir)
    bad = set(formats) - set(FORMATS)
    if bad:
        raise ValueError(f"unknown formats {sorted(bad)}; expected a subset of {FORMATS}")
    ensure_writable(out_dir)
    texts = {label: series_csv(r) for label, r in results.items()}
    bundle = OutputBundle(out_dir, out_dir / "manifest.json")
    if "csv" in formats:
        for label, text in texts.items():
            p = out_dir / f"{label}.csv"
            p.write_text(text)
            bundle.csv.append(p)
    if "json" in formats:
        bundle.json = out_dir / "summary.json"
        doc = {label: summary(r) for label, r in results.items()}
        bundle.json.write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n")
    if "plot" in formats:
        # plots are drawn from the serialized CSV so they can be regenerated from it alone
        bundle.plots = plot_figures({label: read_series_csv(t) for label, t in texts.items()}, out_dir)
    names = [p.name for p in bundle.files() if p != bundle.manifest]
    doc = manifest({label: r.config for label, r in results.items()}, formats, names, command)
    bundle.manifest.write_text(json.dumps(_jsonable(doc), indent=2, allow_nan=False) + "\n")
    return bundle


# -- argument handling -------------------------------------------------------------

def _formats(text: str) -> list:
    out = [f.strip() for f in text.split(",") if f.strip()]
    bad = [f for f in out if f not in FORMATS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown format(s) {bad}; choose from {', '.join(FORMATS)}")
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trustfl", description="Trust-filtered decentralized online learning.")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--realizations", type=int)
    common.add_argument("--attack", choices=ATTACK_KINDS)
    common.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                        help="dotted-key override, e.g. algorithm.horizon=100 (repeatable)")
    common.add_argument("overrides", nargs="*", metavar="KEY=VALUE", help="more dotted-key overrides")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")
    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--out-dir", type=Path, default=Path("out"))
    out.add_argument("--format", dest="formats", type=_formats, default=["csv", "json"],
                     help="comma-separated subset of csv,json,plot")

    run = sub.add_parser("run", parents=[common, out], help="run one variant")
    run.add_argument("--variant", choices=VARIANTS)
    sub.add_parser("compare", parents=[common, out], help="proposed (with attack) vs old-baseline")
    sub.add_parser("check", parents=[common], help="invariant suite at tiny scale")
    return p


def config_from_args(args) -> SimConfig:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.realizations is not None:
        overrides["realizations"] = args.realizations
    if args.attack is not None:
        overrides["attack.kind"] = args.attack
    if getattr(args, "variant", None) is not None:
        overrides["variant"] = args.variant
    for text in [*args.sets, *args.overrides]:
        k, v = parse_override(text)
        overrides[k] = v
    return parse_config(args.config, overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "check":
            from .checks import run_all, tiny_config

            base = tiny_config(seed=cfg.seed, **{"attack.kind": cfg.attack.kind})
            results = run_all(base, workers=max(args.workers, 2))
            for r in results:
                print(r.line())
            return 0 if all(r.passed for r in results) else 1
        if args.command == "run":
            ensure_writable(args.out_dir)
            res = {cfg.variant: run_experiment(cfg, workers=args.workers)}
        else:
            ensure_writable(args.out_dir)
            proposed = cfg.replace(variant="trusted")
            baseline = cfg.replace(variant="old-baseline")
            res = {"proposed": run_experiment(proposed, workers=args.workers),
                   "old-baseline": run_experiment(baseline, workers=args.workers)}
        bundle = emit_outputs(res, args.out_dir, args.formats, command=args.command)
    except (ConfigError, OutputError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    for label, r in res.items():
        T = r.horizon
        if T:
            print(f"{label}: time-avg regret at T={T}: {r.mean['timeavg_regret'][-1]:.6g}, "
                  f"time-avg violation: {r.mean['timeavg_violation_mean'][-1]:.6g}")
    for p in bundle.files():
        print(os.fspath(p))
    return 0


if __name__ == "__main__":
    sys.exit(main())
