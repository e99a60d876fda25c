"""Time-varying logistic-regression tasks and the pairwise proximity constraint."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DataSample:
    label: int
    features: np.ndarray


@dataclass(frozen=True)
class DataDistribution:
    """Generator settings for every client's drifting ground truth.

    Each client starts from ``normalize(shared + heterogeneity * own)`` with Gaussian
    ``shared`` and ``own`` directions, then takes a small random step and is
    renormalized every round.
    """

    dim: int = 5
    drift_rate: float = 0.01
    heterogeneity: float = 0.3
    label_noise: float = 0.05

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.drift_rate < 0 or self.heterogeneity < 0:
            raise ValueError("drift_rate and heterogeneity must be >= 0")
        if not 0.0 <= self.label_noise <= 1.0:
            raise ValueError(f"label_noise must be in [0, 1], got {self.label_noise}")


@dataclass(frozen=True)
class ConstraintParams:
    kappa: float = 0.5

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")


def _normalize(w: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(w)
    return w / n if n > 0 else w


def initial_truth(dist: DataDistribution, shared: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return _normalize(shared + dist.heterogeneity * rng.standard_normal(dist.dim))


def drift_truth(dist: DataDistribution, w: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return _normalize(w + dist.drift_rate * rng.standard_normal(dist.dim))


def label_for(features: np.ndarray, truth: np.ndarray, flip: bool) -> int:
    label = 1 if float(features @ truth) >= 0 else -1
    return -label if flip else label


def generate_sample(dist: DataDistribution, truth: np.ndarray, rng: np.random.Generator) -> DataSample:
    """One sample for a client whose current ground truth is ``truth``."""
    features = rng.standard_normal(dist.dim)
    flip = rng.random() < dist.label_noise
    return DataSample(label_for(features, truth, flip), features)


def client_stream(dist: DataDistribution, shared: np.ndarray, rounds: int, rng: np.random.Generator):
    """Samples for rounds ``1..rounds`` of one client.

    Returns ``(features (T, d), labels (T,), truths (T, d))`` where row ``t-1`` holds
    round ``t``.
    """
    d = dist.dim
    features = np.empty((rounds, d))
    labels = np.empty(rounds, dtype=np.int64)
    truths = np.empty((rounds, d))
    w = initial_truth(dist, shared, rng)
    for k in range(rounds):
        s = generate_sample(dist, w, rng)
        features[k] = s.features
        labels[k] = s.label
        truths[k] = w
        w = drift_truth(dist, w, rng)
    return features, labels, truths


def softplus(z):
    z = np.asarray(z, dtype=np.float64)
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    return np.exp(z - softplus(z))


def _softplus1(z: float) -> float:
    return max(z, 0.0) + math.log1p(math.exp(-abs(z)))


def loss(x: np.ndarray, s: DataSample) -> float:
    return _softplus1(-s.label * float(s.features @ x))


def loss_grad(x: np.ndarray, s: DataSample) -> np.ndarray:
    z = -s.label * float(s.features @ x)
    return (-s.label * math.exp(z - _softplus1(z))) * s.features


def batch_loss(x: np.ndarray, features: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-sample losses of one model over a stack of samples."""
    return softplus(-labels * (features @ x))


def constraint_value(x_v: np.ndarray, x_u: np.ndarray, p: ConstraintParams) -> float:
    diff = x_v - x_u
    return float(diff @ diff) - p.kappa * p.kappa


def constraint_grad(x_v: np.ndarray, x_u: np.ndarray) -> np.ndarray:
    return 2.0 * (x_v - x_u)
