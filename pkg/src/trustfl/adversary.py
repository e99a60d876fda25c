"""Byzantine message generation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .learner import RoundMessage

ATTACK_KINDS = ("fixed-vector", "gaussian-noise", "sign-flip", "dual-inflation", "two-faced")


class AttackConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AttackStrategy:
    """What every Byzantine client sends.

    ``magnitude`` of None means ``10 * r``; ``dual`` of None means the dual scalar equals
    the magnitude.  ``direction`` is only read by ``fixed-vector`` (default: first axis).
    """

    kind: str = "gaussian-noise"
    magnitude: Optional[float] = None
    dual: Optional[float] = None
    direction: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise AttackConfigError(f"unknown attack kind {self.kind!r}; expected one of {ATTACK_KINDS}")
        if self.magnitude is not None and self.magnitude < 0:
            raise AttackConfigError(f"attack magnitude must be >= 0, got {self.magnitude}")

    def resolved_magnitude(self, radius: float) -> float:
        return 10.0 * radius if self.magnitude is None else float(self.magnitude)

    def resolved_dual(self, radius: float) -> float:
        return self.resolved_magnitude(radius) if self.dual is None else float(self.dual)


def byzantine_payloads(strategy: AttackStrategy, observed: np.ndarray, n_targets: int,
                       rng: np.random.Generator, radius: float = 1.0):
    """Vectorized payloads for one Byzantine client and round.

    ``observed`` stacks the honest models the client has seen this round.
    Returns ``(models (n_targets, d), duals (n_targets,))``.
    """
    d = observed.shape[1]
    mag = strategy.resolved_magnitude(radius)
    dual = np.full(n_targets, strategy.resolved_dual(radius))
    kind = strategy.kind
    if kind == "fixed-vector":
        if strategy.direction is None:
            u = np.zeros(d)
            u[0] = 1.0
        else:
            u = np.asarray(strategy.direction, dtype=np.float64)
            if u.shape != (d,):
                raise AttackConfigError(f"direction must have length {d}")
            u = u / np.linalg.norm(u)
        models = np.broadcast_to(mag * u, (n_targets, d))
    elif kind == "gaussian-noise":
        models = np.broadcast_to(mag * rng.standard_normal(d), (n_targets, d))
    elif kind == "sign-flip":
        mean = observed.mean(axis=0) if len(observed) else np.zeros(d)
        models = np.broadcast_to(-mag * mean, (n_targets, d))
    elif kind == "dual-inflation":
        mean = observed.mean(axis=0) if len(observed) else np.zeros(d)
        models = np.broadcast_to(mean, (n_targets, d))
    else:  # two-faced
        models = mag * rng.standard_normal((n_targets, d))
    return models, dual


def byzantine_messages(strategy: AttackStrategy, k: int, observed: np.ndarray,
                       targets: Sequence[int], rng: np.random.Generator,
                       radius: float = 1.0) -> list[RoundMessage]:
    targets = sorted(int(t) for t in targets)
    models, duals = byzantine_payloads(strategy, np.atleast_2d(observed), len(targets), rng, radius)
    return [RoundMessage(k, t, models[i], float(duals[i])) for i, t in enumerate(targets)]
