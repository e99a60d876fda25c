"""Offline comparator models and the closed-form regret / violation bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .taskmodel import sigmoid, softplus


class ComparatorNotConverged(RuntimeError):
    def __init__(self, msg: str, objective_change: float, residual: float):
        super().__init__(f"{msg} (objective change {objective_change:.3e}, residual {residual:.3e})")
        self.objective_change = objective_change
        self.residual = residual


@dataclass
class Comparator:
    models: np.ndarray  # (H, d), row h for honest rank h
    achieved_objective: float  # sum of all losses over rounds and clients
    max_constraint_residual: float  # max(0, max_e g_e)
    iterations: int = 0
    multipliers: np.ndarray = field(default=None, repr=False)


class _Problem:
    """Full-horizon objective, scaled by 1/T, over stacked client models."""

    def __init__(self, features, labels, edges, kappa, radius):
        self.A = -labels[:, :, None] * features  # (H, T, d): loss is softplus(A x)
        self.T = features.shape[1]
        self.edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        self.kappa2 = float(kappa) ** 2
        self.radius = radius

    def objective(self, X):
        z = np.einsum("htd,hd->ht", self.A, X)
        return float(softplus(z).sum()) / self.T

    def objective_grad(self, X):
        z = np.einsum("htd,hd->ht", self.A, X)
        return np.einsum("ht,htd->hd", sigmoid(z), self.A) / self.T

    def constraints(self, X):
        if len(self.edges) == 0:
            return np.zeros(0)
        D = X[self.edges[:, 0]] - X[self.edges[:, 1]]
        return np.einsum("ed,ed->e", D, D) - self.kappa2

    def project(self, X):
        n = np.linalg.norm(X, axis=1, keepdims=True)
        scale = np.where(n > self.radius, self.radius / np.maximum(n, 1e-300), 1.0)
        return X * scale

    def augmented(self, X, mu, rho):
        """Value and gradient of the augmented Lagrangian."""
        val = self.objective(X)
        grad = self.objective_grad(X)
        if len(self.edges):
            g = self.constraints(X)
            w = np.maximum(mu + rho * g, 0.0)
            val += float(np.sum(w * w - mu * mu)) / (2 * rho)
            D = X[self.edges[:, 0]] - X[self.edges[:, 1]]
            contrib = 2.0 * w[:, None] * D
            np.add.at(grad, self.edges[:, 0], contrib)
            np.add.at(grad, self.edges[:, 1], -contrib)
        return val, grad


def _fista(prob: _Problem, X, mu, rho, tol, budget, L0=1.0):
    """Accelerated projected gradient with backtracking and adaptive restart."""
    L = L0
    Y = X.copy()
    t = 1.0
    it = 0
    while it < budget:
        fy, gy = prob.augmented(Y, mu, rho)
        while True:
            it += 1
            Xn = prob.project(Y - gy / L)
            D = Xn - Y
            fx, _ = prob.augmented(Xn, mu, rho)
            if fx <= fy + float(np.sum(gy * D)) + 0.5 * L * float(np.sum(D * D)) + 1e-15:
                break
            L *= 2.0
        step = L * float(np.sqrt(np.sum(D * D)))
        if step <= tol:
            return Xn, it, L
        tn = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        if float(np.sum((Y - Xn) * (Xn - X))) > 0:  # momentum points uphill
            tn = 1.0
            Y = Xn.copy()
        else:
            Y = Xn + ((t - 1.0) / tn) * (Xn - X)
        X, t = Xn, tn
        L = max(L / 1.5, 1e-6)
    return X, it, L


def solve_comparator(
    features: np.ndarray,
    labels: np.ndarray,
    edges: Sequence[tuple[int, int]],
    kappa: float,
    radius: float,
    tol: float = 1e-6,
    max_iter: int = 100_000,
) -> Comparator:
    """Best fixed per-client models in hindsight under every pairwise constraint.

    ``features`` is ``(H, T, d)`` and ``labels`` ``(H, T)``; ``edges`` index honest
    ranks.  Solved by an augmented-Lagrangian method: accelerated projected-gradient
    inner solves, multiplier ascent, penalty doubling while infeasibility stalls.
    """
    H, T, d = features.shape
    if T == 0:
        return Comparator(np.zeros((H, d)), 0.0, 0.0, 0, np.zeros(len(edges)))
    prob = _Problem(features, labels.astype(np.float64), edges, kappa, radius)
    X = np.zeros((H, d))
    mu = np.zeros(len(prob.edges))
    rho = 10.0
    used = 0
    prev_obj = np.inf
    prev_res = np.inf
    L = 1.0
    inner_tol = 1e-3
    while used < max_iter:
        X, it, L = _fista(prob, X, mu, rho, inner_tol, max_iter - used, L)
        used += it
        g = prob.constraints(X)
        res = float(max(0.0, g.max())) if len(g) else 0.0
        obj = prob.objective(X)
        change = abs(obj - prev_obj)
        comp = float(np.max(np.abs(np.minimum(mu, -g)))) if len(g) else 0.0
        if res <= tol and change <= tol and comp <= tol and inner_tol <= tol:
            return Comparator(X, obj * T, res, used, mu)
        if len(g):
            mu = np.maximum(mu + rho * g, 0.0)
            if res > 0.25 * prev_res and res > tol:
                rho *= 2.0
        prev_obj, prev_res = obj, res
        inner_tol = max(inner_tol * 0.1, tol * 1e-2)
    raise ComparatorNotConverged("comparator solve exhausted its iteration budget", change, res)


def comparator_losses(comp: Comparator, features: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """``(T, H)`` per-round losses of the comparator models."""
    z = -labels * np.einsum("htd,hd->ht", features, comp.models)
    return softplus(z).T


@dataclass(frozen=True)
class BoundConstants:
    a: float
    zeta: float
    m: int
    C: float
    G: float
    B: float
    r: float
    V: int
    beta: Optional[float] = None  # the undefined ratio in the regret bound; needed only there

    def __post_init__(self):
        for name in ("a", "zeta", "C", "G", "r"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.B < 0 or self.m < 0 or self.V < 1:
            raise ValueError("B and m must be >= 0 and V >= 1")


def regret_bound(k: BoundConstants, T: float) -> float:
    if k.beta is None or not 0 < k.beta < 1:
        raise ValueError("regret bound needs beta in (0, 1)")
    if not 0 < k.zeta < 1.0 / k.beta - 1.0:
        raise ValueError(f"zeta must lie in (0, {1.0 / k.beta - 1.0}), got {k.zeta}")
    s = math.sqrt(T)
    first = (2 * k.r**2 / k.a**2 + k.m * k.C**2 + k.V * k.G**2) * k.a * s
    ratio = (1 + k.beta / k.zeta) / (1 - (1 + k.zeta) * k.beta)
    return first + 2.5 * k.a * k.G**2 * k.V * ratio * s


def violation_bound(k: BoundConstants, T: float) -> float:
    if k.beta is not None and not 0 < k.zeta < 1.0 / k.beta - 1.0:
        raise ValueError(f"zeta must lie in (0, {1.0 / k.beta - 1.0}), got {k.zeta}")
    lead = 2 * math.sqrt(k.V * k.G * k.r) * math.sqrt(1 / k.a + k.a * k.zeta + 2 * k.a * k.B**2)
    tail = (1 + k.a**2 * k.zeta + 2 * k.a**2 * k.B**2) * math.sqrt(
        4 * k.r**2 / k.a**2 + 2 * k.m * k.C**2 + 2 * k.V * k.G**2)
    return lead * T**0.75 + tail
