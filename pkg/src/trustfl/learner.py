"""Per-client primal-dual state and the trust-filtered update.

The update is written over stacked rows (one row per honest client, one slot per
neighbor) so the engine can advance every client at once.  Neighbor sums are taken
with a running (left-to-right) accumulation over slots, and untrusted slots contribute
exact zeros; the result is therefore the same bits whether untrusted traffic is
masked out or never delivered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .taskmodel import ConstraintParams, DataSample, sigmoid
from .topology import GraphTopology


@dataclass(frozen=True)
class AlgorithmParams:
    eta: float
    delta: float
    radius: float = 1.0
    horizon: int = 1000

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if not self.delta > 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if not self.radius > 0:
            raise ValueError(f"radius must be > 0, got {self.radius}")

    @classmethod
    def from_horizon(cls, horizon: int, a: float = 1.0, radius: float = 1.0,
                     eta: Optional[float] = None, delta: Optional[float] = None) -> "AlgorithmParams":
        """Stepsize ``a / sqrt(T)`` and regularization ``1 / (4 eta^2)`` unless pinned."""
        if eta is None:
            eta = a / math.sqrt(max(horizon, 1))
        if delta is None:
            delta = 1.0 / (4.0 * eta * eta)
        return cls(eta=eta, delta=delta, radius=radius, horizon=horizon)


@dataclass
class ClientState:
    """Model and per-neighbor multipliers of one honest client; ``duals[j]`` is for ``neighbors[j]``."""

    model: np.ndarray
    neighbors: np.ndarray
    duals: np.ndarray = field(default=None)

    def __post_init__(self):
        self.neighbors = np.asarray(self.neighbors, dtype=np.int64)
        if self.duals is None:
            self.duals = np.zeros(len(self.neighbors))

    @classmethod
    def initial(cls, dim: int, neighbors) -> "ClientState":
        return cls(np.zeros(dim), neighbors)

    def slot(self, u: int) -> int:
        j = int(np.searchsorted(self.neighbors, u))
        if j >= len(self.neighbors) or self.neighbors[j] != u:
            raise KeyError(f"{u} is not a neighbor")
        return j

    def dual_for(self, u: int) -> float:
        return float(self.duals[self.slot(u)])


@dataclass(frozen=True)
class RoundMessage:
    sender: int
    receiver: int
    model: np.ndarray
    dual: float


@dataclass(frozen=True)
class Inbox:
    """Messages one receiver acts on this round."""

    senders: np.ndarray
    models: np.ndarray
    duals: np.ndarray

    @classmethod
    def from_messages(cls, msgs: Sequence[RoundMessage], dim: int) -> "Inbox":
        msgs = sorted(msgs, key=lambda m: m.sender)
        if not msgs:
            return cls(np.zeros(0, dtype=np.int64), np.zeros((0, dim)), np.zeros(0))
        return cls(
            np.array([m.sender for m in msgs], dtype=np.int64),
            np.stack([np.asarray(m.model, dtype=np.float64) for m in msgs]),
            np.array([m.dual for m in msgs], dtype=np.float64),
        )

    def __len__(self):
        return len(self.senders)


def outgoing_messages(state: ClientState, g: GraphTopology, v: int) -> list[RoundMessage]:
    if g.is_byzantine(v):
        raise ValueError(f"client {v} is Byzantine")
    return [RoundMessage(v, int(u), state.model.copy(), state.dual_for(int(u))) for u in g.neighbor_array(v)]


# -- stacked-row core -------------------------------------------------------------

def rowdot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=-1)


def loss_grad_rows(X: np.ndarray, F: np.ndarray, labels: np.ndarray) -> np.ndarray:
    z = -labels * rowdot(F, X)
    return (-labels * sigmoid(z))[:, None] * F


def neighbor_terms(X, Lam, RM, RD, trusted) -> tuple[np.ndarray, np.ndarray]:
    """Primal neighbor sum ``(H, d)`` and constraint values ``(H, K)`` over slots."""
    diff = X[:, None, :] - RM
    coeff = Lam + RD
    terms = np.where(trusted[:, :, None], coeff[:, :, None] * (2.0 * diff), 0.0)
    if terms.shape[1] == 0:
        return np.zeros_like(X), np.zeros(trusted.shape)
    total = np.cumsum(terms, axis=1)[:, -1, :]
    return total, rowdot(diff, diff)


_SHRINK = np.nextafter(1.0, 0.0)


def project_rows(X: np.ndarray, r: float) -> np.ndarray:
    """Row-wise projection onto the radius-``r`` ball.

    Rescaled rows whose computed norm still rounds above ``r`` are nudged inward by an
    ulp at a time, so the result is feasible as computed and projecting twice is a no-op.
    """
    n = np.sqrt(rowdot(X, X))
    out = X.copy()
    big = n > r
    if not big.any():
        return out
    out[big] = X[big] * (r / n[big])[:, None]
    idx = np.flatnonzero(big)
    for _ in range(64):
        sub = out[idx]
        over = np.sqrt(rowdot(sub, sub)) > r
        if not over.any():
            break
        idx = idx[over]
        out[idx] *= _SHRINK
    return out


def update_rows(X, Lam, RM, RD, trusted, F, labels, p: AlgorithmParams, c: ConstraintParams):
    """Steps 11-14 for stacked clients.

    ``X`` (H, d) models, ``Lam`` (H, K) own multipliers per slot, ``RM`` (H, K, d) and
    ``RD`` (H, K) received models and multipliers, ``trusted`` (H, K) boolean.  Returns
    new ``(X, Lam)``; untrusted slots get multiplier zero.
    """
    nsum, sq = neighbor_terms(X, Lam, RM, RD, trusted)
    q = loss_grad_rows(X, F, labels) + nsum
    with np.errstate(invalid="ignore", over="ignore"):
        r = sq - c.kappa * c.kappa - p.delta * p.eta * Lam
        lam_new = np.where(trusted, np.maximum(Lam + p.eta * r, 0.0), 0.0)
    return project_rows(X - p.eta * q, p.radius), lam_new


# -- single-client view -----------------------------------------------------------

def _slots(state: ClientState, inbox: Inbox):
    K, d = len(state.neighbors), state.model.shape[0]
    if len(inbox) and inbox.models.shape[1] != d:
        raise ValueError(f"model dimension {inbox.models.shape[1]} != {d}")
    RM = np.zeros((1, K, d))
    RD = np.zeros((1, K))
    mask = np.zeros((1, K), dtype=bool)
    for i, u in enumerate(inbox.senders):
        j = state.slot(int(u))
        RM[0, j], RD[0, j], mask[0, j] = inbox.models[i], inbox.duals[i], True
    return RM, RD, mask


def _sample_rows(sample: DataSample):
    return np.asarray(sample.features, dtype=np.float64)[None, :], np.array([float(sample.label)])


def primal_gradient(state: ClientState, inbox: Inbox, sample: DataSample) -> np.ndarray:
    """Loss gradient plus ``(lam_vu + lam_uv) * 2 (x_v - x_u)`` over the inbox."""
    RM, RD, mask = _slots(state, inbox)
    X = state.model[None, :]
    nsum, _ = neighbor_terms(X, state.duals[None, :], RM, RD, mask)
    F, lab = _sample_rows(sample)
    return (loss_grad_rows(X, F, lab) + nsum)[0]


def dual_residual(state: ClientState, u: int, x_u: np.ndarray, p: AlgorithmParams,
                  c: ConstraintParams) -> float:
    diff = state.model - x_u
    return float(rowdot(diff, diff)) - c.kappa * c.kappa - p.delta * p.eta * state.dual_for(u)


def project_ball(x: np.ndarray, r: float) -> np.ndarray:
    return project_rows(np.asarray(x, dtype=np.float64)[None, :], r)[0]


def primal_step(state: ClientState, q: np.ndarray, p: AlgorithmParams) -> np.ndarray:
    return project_ball(state.model - p.eta * q, p.radius)


def dual_step(state: ClientState, u: int, r_vu: float, p: AlgorithmParams) -> float:
    return max(state.dual_for(u) + p.eta * r_vu, 0.0)


def client_update(state: ClientState, inbox: Inbox, sample: DataSample, p: AlgorithmParams,
                  c: ConstraintParams) -> ClientState:
    """One round for one honest client given its already-filtered inbox."""
    RM, RD, mask = _slots(state, inbox)
    F, lab = _sample_rows(sample)
    X, Lam = update_rows(state.model[None, :], state.duals[None, :], RM, RD, mask, F, lab, p, c)
    return ClientState(X[0], state.neighbors, Lam[0])
