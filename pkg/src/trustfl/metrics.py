"""Regret, constraint violation, trust misclassification and T_f from round logs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .taskmodel import DataSample, loss
from .trust import measure_tf

SERIES_KINDS = (
    "cumulative-regret",
    "time-avg-regret",
    "cumulative-violation-max",
    "time-avg-violation",
    "misclassification-rate",
)


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class MetricSeries:
    kind: str
    values: np.ndarray  # values[k] belongs to round k+1

    def __len__(self):
        return len(self.values)


def instantaneous_regret(losses: np.ndarray, comp_losses: np.ndarray) -> np.ndarray:
    """Per-round regret summed over clients left to right; inputs are ``(T, H)``."""
    if losses.shape != comp_losses.shape:
        raise MetricsError(f"shape mismatch {losses.shape} vs {comp_losses.shape}")
    if losses.shape[0] == 0:
        return np.zeros(0)
    return np.cumsum(losses - comp_losses, axis=1)[:, -1] if losses.shape[1] else np.zeros(len(losses))


def regret_series(losses: np.ndarray, comp_losses: np.ndarray) -> MetricSeries:
    return MetricSeries("cumulative-regret", np.cumsum(instantaneous_regret(losses, comp_losses)))


def comparator_round_losses(comp_models: np.ndarray, features: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """``(T, H)`` losses of the comparator on each round's sample (``features`` is ``(T, H, d)``)."""
    T, H = labels.shape
    out = np.empty((T, H))
    for t in range(T):
        for h in range(H):
            out[t, h] = loss(comp_models[h], DataSample(int(labels[t, h]), features[t, h]))
    return out


def cumulative_regret(logs: Sequence, comp, upto: int) -> float:
    """Regret over rounds ``1..upto`` against comparator models ``comp.models``."""
    if upto < 0 or upto > len(logs):
        raise MetricsError(f"upto={upto} outside the logged horizon {len(logs)}")
    if upto == 0:
        return 0.0
    logs = logs[:upto]
    losses = np.stack([lg.losses for lg in logs])
    features = np.stack([lg.features for lg in logs])
    labels = np.stack([lg.labels for lg in logs])
    comp_losses = comparator_round_losses(comp.models, features, labels)
    return float(regret_series(losses, comp_losses).values[-1])


def cumulative_violation(logs: Sequence, edge: tuple[int, int], upto: int) -> float:
    """Prefix sum of the logged constraint value on one honest-honest edge (honest ranks)."""
    if upto < 0 or upto > len(logs):
        raise MetricsError(f"upto={upto} outside the logged horizon {len(logs)}")
    if upto == 0:
        return 0.0
    key = (min(edge), max(edge))
    pairs = logs[0].edge_pairs
    try:
        e = pairs.index(key)
    except ValueError:
        raise MetricsError(f"edge {edge} is not an honest-honest edge") from None
    return float(np.cumsum([lg.edge_values[e] for lg in logs[:upto]])[-1])


def violation_series(edge_values: np.ndarray) -> tuple[np.ndarray, MetricSeries, MetricSeries]:
    """Per-edge cumulative sums ``(T, E)`` and their time-averaged mean / max over edges."""
    T = edge_values.shape[0]
    cum = np.cumsum(edge_values, axis=0)
    t = np.arange(1, T + 1, dtype=np.float64)
    if edge_values.shape[1] == 0:
        zero = np.zeros(T)
        return cum, MetricSeries("time-avg-violation", zero), MetricSeries("cumulative-violation-max", zero)
    mean = cum.mean(axis=1) / t
    mx = cum.max(axis=1)
    return cum, MetricSeries("time-avg-violation", mean), MetricSeries("cumulative-violation-max", mx)


def time_average(series: MetricSeries) -> MetricSeries:
    t = np.arange(1, len(series) + 1, dtype=np.float64)
    kind = {"cumulative-regret": "time-avg-regret", "cumulative-violation-max": "time-avg-violation"}.get(
        series.kind, series.kind)
    return MetricSeries(kind, np.asarray(series.values, dtype=np.float64) / t)


def measure_Tf(perfect: Sequence[bool]) -> Optional[int]:
    """Smallest round from which classification stays perfect; ``perfect[k]`` is round ``k+1``."""
    return measure_tf(perfect)


@dataclass(frozen=True)
class ClassificationHistory:
    """Misclassified pair counts after ``t`` observations, ``t = 0..T``."""

    honest_pairs: int
    byzantine_pairs: int
    wrong_honest: np.ndarray
    wrong_byzantine: np.ndarray

    @property
    def rounds(self) -> int:
        return len(self.wrong_honest) - 1

    def perfect(self) -> np.ndarray:
        return (self.wrong_honest[1:] == 0) & (self.wrong_byzantine[1:] == 0)


def misclassification_rate(history: ClassificationHistory, t: int) -> dict:
    """Fraction of misclassified (observer, neighbor) pairs at ``t``, split by neighbor class.

    A class without any pairs reports NaN.
    """
    if not 0 <= t <= history.rounds:
        raise MetricsError(f"t={t} outside 0..{history.rounds}")
    hon = history.wrong_honest[t] / history.honest_pairs if history.honest_pairs else float("nan")
    byz = history.wrong_byzantine[t] / history.byzantine_pairs if history.byzantine_pairs else float("nan")
    return {"honest": float(hon), "byzantine": float(byz)}


def loglog_slope(horizons: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log(value) against log(horizon)."""
    x = np.log(np.asarray(horizons, dtype=np.float64))
    y = np.log(np.asarray(values, dtype=np.float64))
    return float(np.polyfit(x, y, 1)[0])
