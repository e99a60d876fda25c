"""Stochastic trust observations and the accumulated trust score of each directed edge.

Scores are kept as exact integer multiples of 2**-54.  Every increment
``fl(alpha - 0.5)`` with ``alpha`` in [0, 1] is such a multiple, so the running sum is
exact and therefore independent of the order in which observations arrive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .topology import GraphTopology

_SCALE = 2.0**54


class TrustError(ValueError):
    pass


@dataclass(frozen=True)
class TrustModel:
    mean_honest: float = 0.55
    mean_byzantine: float = 0.45
    spread: float = 0.8

    def __post_init__(self):
        if self.drift_honest < 0:
            raise TrustError(f"mean_honest must be >= 0.5, got {self.mean_honest}")
        if self.drift_byzantine >= 0:
            raise TrustError(f"mean_byzantine must be < 0.5, got {self.mean_byzantine}")
        if self.spread < 0:
            raise TrustError(f"spread must be >= 0, got {self.spread}")
        for name, m in (("mean_honest", self.mean_honest), ("mean_byzantine", self.mean_byzantine)):
            if m - self.spread / 2 < 0 or m + self.spread / 2 > 1:
                raise TrustError(f"{name} +/- spread/2 leaves [0, 1]")

    @property
    def drift_honest(self) -> float:
        return self.mean_honest - 0.5

    @property
    def drift_byzantine(self) -> float:
        return self.mean_byzantine - 0.5

    def interval(self, sender_is_byzantine: bool) -> tuple[float, float]:
        mean = self.mean_byzantine if sender_is_byzantine else self.mean_honest
        return mean - self.spread / 2, mean + self.spread / 2


def sample_trust(model: TrustModel, sender_is_byzantine, rng: np.random.Generator, size=None):
    """Draw trust probabilities uniformly on the sender class's interval.

    ``sender_is_byzantine`` may be a boolean array, in which case one draw per entry
    is returned (``size`` is then ignored).
    """
    if np.ndim(sender_is_byzantine) > 0:
        byz = np.asarray(sender_is_byzantine, dtype=bool)
        mean = np.where(byz, model.mean_byzantine, model.mean_honest)
        half = model.spread / 2
        return rng.uniform(mean - half, mean + half)
    lo, hi = model.interval(bool(sender_is_byzantine))
    return rng.uniform(lo, hi, size=size)


def to_ticks(alpha) -> np.ndarray:
    """Map trust probabilities to exact integer increments of ``alpha - 0.5``."""
    inc = (np.asarray(alpha, dtype=np.float64) - 0.5) * _SCALE
    out = inc.astype(np.int64)
    if not np.array_equal(out, inc):
        raise TrustError("trust observation is not a float in [0, 1]")
    return out


class TrustLedger:
    """Per-observer trust scores for every in-neighbor.

    Only honest observers hold a row; Byzantine clients do not run the protocol.  Rows
    are padded to the largest degree so a whole round can be applied at once.
    """

    def __init__(self, g: GraphTopology):
        self.observers = g.honest_ids()
        self._row = {int(v): i for i, v in enumerate(self.observers)}
        self.neighbors = [g.neighbor_array(int(v)) for v in self.observers]
        self.degrees = np.array([len(nb) for nb in self.neighbors], dtype=np.int64)
        self._pos = [{int(u): j for j, u in enumerate(nb)} for nb in self.neighbors]
        width = int(self.degrees.max()) if len(self.degrees) else 0
        # Python ints: exact and unbounded, so long horizons cannot overflow
        self._ticks = np.zeros((len(self.observers), width), dtype=object)
        self._ticks[...] = 0
        self.observation_count = 0

    def row(self, v: int) -> int:
        try:
            return self._row[int(v)]
        except KeyError:
            raise TrustError(f"client {v} is not an honest observer") from None

    def accumulate(self, v: int, u: int, alpha: float) -> float:
        if not 0.0 <= alpha <= 1.0:
            raise TrustError(f"trust probability {alpha} outside [0, 1]")
        i = self.row(v)
        j = self._pos[i][int(u)]
        self._ticks[i, j] += int(to_ticks(alpha))
        return self.beta(v, u)

    def accumulate_all(self, alphas: np.ndarray) -> None:
        """One observation for every (observer, neighbor slot); padding slots must hold 0.5."""
        self._ticks += to_ticks(alphas).astype(object)
        self.observation_count += 1

    def beta(self, v: int, u: int) -> float:
        i = self.row(v)
        return math.ldexp(float(self._ticks[i, self._pos[i][int(u)]]), -54)

    def beta_row(self, v: int) -> np.ndarray:
        i = self.row(v)
        return np.array([math.ldexp(float(x), -54) for x in self._ticks[i, : self.degrees[i]]])

    def nonnegative_row(self, v: int) -> np.ndarray:
        i = self.row(v)
        return (self._ticks[i, : self.degrees[i]] >= 0).astype(bool)

    def nonnegative_all(self) -> np.ndarray:
        return (self._ticks >= 0).astype(bool)

    def set_beta(self, v: int, u: int, value: float) -> None:
        i = self.row(v)
        self._ticks[i, self._pos[i][int(u)]] = round(float(value) * _SCALE)


def trusted_set(ledger: TrustLedger, g: GraphTopology, v: int) -> set[int]:
    if g.is_byzantine(v):
        raise TrustError(f"client {v} is Byzantine and keeps no trusted set")
    mask = ledger.nonnegative_row(v)
    return {int(u) for u in ledger.neighbors[ledger.row(v)][mask]}


@dataclass(frozen=True)
class EdgeClassification:
    observer: int
    sender: int
    sender_is_byzantine: bool
    correct: bool


def classification_state(ledger: TrustLedger, g: GraphTopology) -> list[EdgeClassification]:
    """Whether the sign of each score matches the sender's true class."""
    out = []
    for i, v in enumerate(ledger.observers):
        ok = ledger.nonnegative_row(int(v))
        for j, u in enumerate(ledger.neighbors[i]):
            byz = g.is_byzantine(int(u))
            out.append(EdgeClassification(int(v), int(u), byz, bool(ok[j]) != byz))
    return out


def lemma1_bound(t: int, drift: float, sender_is_byzantine: bool = False) -> float:
    """Misclassification probability bound after ``t`` observations.

    For an honest sender the bound degenerates to 1 when the drift is negative, for a
    Byzantine sender when it is nonnegative.
    """
    if t < 0:
        raise TrustError("t must be >= 0")
    wrong_side = drift >= 0 if sender_is_byzantine else drift < 0
    return max(math.exp(-2.0 * t * drift * drift), 1.0 if wrong_side else 0.0)


@dataclass
class TrustProcessStats:
    """Monte-Carlo summary of the trust process alone."""

    rounds: int
    realizations: int
    honest_pairs: int
    byzantine_pairs: int
    misclass_honest: np.ndarray  # (T+1,) count over realizations and pairs
    misclass_byzantine: np.ndarray
    t_f: np.ndarray  # (R,) round index, -1 when misclassification persists to T

    def rate(self, sender_is_byzantine: bool) -> np.ndarray:
        if sender_is_byzantine:
            return self.misclass_byzantine / (self.realizations * self.byzantine_pairs)
        return self.misclass_honest / (self.realizations * self.honest_pairs)


def simulate_trust_process(
    model: TrustModel,
    g: GraphTopology,
    rounds: int,
    realizations: int,
    rng: np.random.Generator,
    batch: int = 10,
) -> TrustProcessStats:
    """Run the trust accumulation for every honest observer, without any learning.

    Vectorized over realizations; uses plain float cumulative sums, which is adequate
    for sign statistics (ties at exactly zero have probability zero).
    """
    obs_byz = []
    for v in g.honest_ids():
        for u in g.neighbor_array(int(v)):
            obs_byz.append(g.is_byzantine(int(u)))
    byz = np.array(obs_byz, dtype=bool)
    n_byz = int(byz.sum())
    n_hon = len(byz) - n_byz
    half = model.spread / 2
    lo = np.where(byz, model.mean_byzantine, model.mean_honest) - half

    mis_h = np.zeros(rounds + 1, dtype=np.int64)
    mis_b = np.zeros(rounds + 1, dtype=np.int64)
    mis_b[0] = n_byz * realizations
    t_f = np.empty(realizations, dtype=np.int64)
    done = 0
    while done < realizations:
        n = min(batch, realizations - done)
        alpha = lo + model.spread * rng.random((n, rounds, len(byz)))
        beta = np.cumsum(alpha - 0.5, axis=1)
        wrong = np.where(byz, beta >= 0, beta < 0)  # (n, T, E)
        mis_h[1:] += wrong[:, :, ~byz].sum(axis=(0, 2))
        mis_b[1:] += wrong[:, :, byz].sum(axis=(0, 2))
        any_wrong = wrong.any(axis=2)  # (n, T), column k is round k+1
        for i in range(n):
            tf = measure_tf(~any_wrong[i])
            t_f[done + i] = -1 if tf is None else tf
        done += n
    return TrustProcessStats(rounds, realizations, n_hon, n_byz, mis_h, mis_b, t_f)


def measure_tf(perfect) -> Optional[int]:
    """First round after the last misclassification; ``perfect[k]`` describes round ``k+1``.

    Returns None when nothing was observed or the final round is still misclassified.
    """
    perfect = np.asarray(perfect, dtype=bool)
    if perfect.size == 0:
        return None
    bad = np.flatnonzero(~perfect)
    if bad.size == 0:
        return 1
    last = int(bad[-1]) + 1
    return None if last == len(perfect) else last + 1
