"""Small-scale invariant checks shared by the ``check`` subcommand and the test suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SimConfig
from .engine import RoundLog, init_world, run_experiment, run_realization, run_round
from .metrics import cumulative_regret


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}  {self.detail}".rstrip()


def tiny_config(**changes) -> SimConfig:
    """Desk-scale setup: 6 clients (2 Byzantine), d=2, T=30, two realizations."""
    base = {
        "topology.num_clients": 6,
        "topology.num_byzantine": 2,
        "task.dim": 2,
        "algorithm.horizon": 30,
        "realizations": 2,
    }
    base.update(changes)
    return SimConfig().replace(**base)


def _same(a: np.ndarray, b: np.ndarray) -> bool:
    a, b = np.asarray(a), np.asarray(b)
    return a.shape == b.shape and a.dtype == b.dtype and a.tobytes() == b.tobytes()


def logs_identical(a: list[RoundLog], b: list[RoundLog]) -> bool:
    """Bitwise equality of everything the honest clients computed, honest edges only."""
    if len(a) != len(b):
        return False
    for x, y in zip(a, b):
        if not (_same(x.models, y.models) and _same(x.losses, y.losses) and _same(x.edge_values, y.edge_values)):
            return False
        if not _same(x.honest_dual_matrix(), y.honest_dual_matrix()):
            return False
    return True


def run_logs(config: SimConfig, realization: int = 0) -> list[RoundLog]:
    w = init_world(config, realization)
    return [run_round(w) for _ in range(config.algorithm.horizon)]


def honest_only(config: SimConfig) -> SimConfig:
    """The same honest population with every Byzantine client removed (complete graphs)."""
    h = config.topology.num_clients - config.topology.num_byzantine
    return config.replace(**{"topology.num_clients": h, "topology.num_byzantine": 0,
                             "topology.byzantine_ids": None})


def check_forced_trust_reduction(config: SimConfig) -> CheckResult:
    cfg = honest_only(config)
    a = run_logs(cfg.replace(variant="trusted", force_trust=True))
    b = run_logs(cfg.replace(variant="old-baseline"))
    return CheckResult("forced-trust b=0 equals old-baseline", logs_identical(a, b))


def check_oracle_filter_reduction(config: SimConfig) -> CheckResult:
    a = run_logs(config.replace(variant="oracle-filter"))
    b = run_logs(honest_only(config).replace(variant="trusted", force_trust=True))
    return CheckResult("oracle-filter equals honest-only run", logs_identical(a, b),
                       f"attack={config.attack.kind}")


def check_determinism(config: SimConfig, workers: int = 2) -> CheckResult:
    a = run_experiment(config, workers=1)
    b = run_experiment(config, workers=workers)
    rev = run_experiment(config, workers=1, realizations=list(range(config.realizations))[::-1])
    ok = all(_same(a.mean[k], b.mean[k]) and _same(a.mean[k], rev.mean[k]) for k in a.mean)
    return CheckResult("determinism across workers and order", ok, f"workers=1 vs {workers}")


def check_run_invariants(config: SimConfig) -> CheckResult:
    r = run_realization(config, 0, keep_logs=True)
    radius = config.algorithm.radius
    worst_norm = max(float(np.max(np.linalg.norm(lg.models, axis=1))) for lg in r.logs) if r.logs else 0.0
    min_dual = min((float(np.min(d)) for lg in r.logs for d in lg.duals if len(d)), default=0.0)
    resum = cumulative_regret(r.logs, r.comparator, len(r.logs))
    pipeline = float(r.cumulative_regret[-1]) if len(r.cumulative_regret) else 0.0
    ok = worst_norm <= radius + 1e-12 and min_dual >= 0.0 and resum == pipeline
    return CheckResult("norms, duals, regret re-summation", ok,
                       f"max|x|={worst_norm:.6g} min(lambda)={min_dual:.3g} regret={pipeline:.6g}")


def run_all(config: SimConfig | None = None, workers: int = 2) -> list[CheckResult]:
    config = config or tiny_config()
    out = [
        check_forced_trust_reduction(config),
        check_oracle_filter_reduction(config),
        check_run_invariants(config),
        check_determinism(config, workers),
    ]
    for kind in ("sign-flip", "two-faced", "dual-inflation"):
        out.append(check_oracle_filter_reduction(config.replace(**{"attack.kind": kind})))
    return out
