"""Round orchestration, realizations and experiment averaging."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import seeding
from .adversary import byzantine_payloads
from .config import SimConfig
from .learner import AlgorithmParams, ClientState, project_rows, rowdot, update_rows
from .metrics import (
    ClassificationHistory,
    comparator_round_losses,
    instantaneous_regret,
    measure_Tf,
    violation_series,
)
from .oracle import BoundConstants, Comparator, regret_bound, solve_comparator, violation_bound
from .taskmodel import client_stream, sigmoid, softplus
from .topology import GraphTopology, build_topology
from .trust import TrustLedger, sample_trust

log = logging.getLogger(__name__)


@dataclass
class RoundLog:
    """Everything observable about one synchronous round, indexed by honest rank."""

    t: int
    honest_ids: np.ndarray
    models: np.ndarray  # (H, d) models used this round
    losses: np.ndarray  # (H,)
    features: np.ndarray  # (H, d)
    labels: np.ndarray  # (H,)
    trusted: tuple  # per client, sender ids whose messages were consumed
    neighbors: tuple  # per client, sorted neighbor ids
    duals: tuple  # per client, multipliers at the start of the round (aligned with neighbors)
    edge_pairs: list  # honest-honest pairs (ranks)
    edge_values: np.ndarray  # (E,) constraint value on each pair
    byzantine_consumed: np.ndarray  # (H,) number of Byzantine messages that reached the update
    wrong_honest: int
    wrong_byzantine: int

    def honest_dual_matrix(self) -> np.ndarray:
        """``(H, H)`` multipliers on honest edges by rank; NaN where there is no edge."""
        H = len(self.honest_ids)
        rank = {int(v): h for h, v in enumerate(self.honest_ids)}
        out = np.full((H, H), np.nan)
        for h in range(H):
            for u, lam in zip(self.neighbors[h], self.duals[h]):
                if int(u) in rank:
                    out[h, rank[int(u)]] = lam
        return out


@dataclass
class World:
    """Mutable simulation state of one realization.

    Honest clients are rows (by honest rank); each row has one slot per in-neighbor,
    padded to the largest degree.
    """

    config: SimConfig
    graph: GraphTopology
    params: AlgorithmParams
    realization: int
    honest_ids: np.ndarray
    rank: dict
    nbrs: np.ndarray  # (H, K) neighbor ids, -1 in padding
    valid: np.ndarray  # (H, K)
    nb_is_byz: np.ndarray  # (H, K)
    X: np.ndarray  # (H, d)
    Lam: np.ndarray  # (H, K)
    ledger: TrustLedger
    features: np.ndarray  # (H, T, d)
    labels: np.ndarray  # (H, T)
    alpha: np.ndarray  # (T, H, K) trust observations, 0.5 in padding
    attack_rngs: dict
    edge_pairs: list
    byz_ids: np.ndarray
    hon_route: tuple  # (receiver rank, slot, sender rank, sender's slot for receiver)
    byz_route: dict  # Byzantine id -> (target ranks, its slot at each target, ranks it hears)
    t: int = 0

    @property
    def states(self) -> list:
        return [ClientState(self.X[h].copy(), self.nbrs[h, self.valid[h]], self.Lam[h, self.valid[h]].copy())
                for h in range(len(self.honest_ids))]


def effective_topology(config: SimConfig) -> GraphTopology:
    g = build_topology(config.topology)
    if config.variant == "old-baseline":
        return g.honest_subgraph()
    return g


def init_world(config: SimConfig, realization: int = 0) -> World:
    """Initial state: zero models, zero multipliers, zero trust scores; data pre-drawn."""
    g = effective_topology(config)
    params = config.algorithm_params()
    T = config.algorithm.horizon
    dist = config.task
    seed = config.seed
    hon = g.honest_ids()
    H = len(hon)
    rank = {int(v): h for h, v in enumerate(hon)}

    shared = seeding.stream(seed, realization, seeding.DATA_SHARED).standard_normal(dist.dim)
    feats = np.empty((H, T, dist.dim))
    labels = np.empty((H, T), dtype=np.int64)
    for h in range(H):
        f, lab, _ = client_stream(dist, shared, T, seeding.stream(seed, realization, seeding.DATA, h))
        feats[h], labels[h] = f, lab

    K = max((len(g.neighbor_array(int(v))) for v in hon), default=0)
    nbrs = np.full((H, K), -1, dtype=np.int64)
    for h, v in enumerate(hon):
        nb = g.neighbor_array(int(v))
        nbrs[h, : len(nb)] = nb
    valid = nbrs >= 0
    nb_is_byz = np.zeros((H, K), dtype=bool)
    slot_of = [{int(u): j for j, u in enumerate(g.neighbor_array(int(v)))} for v in hon]

    alpha = np.full((T, H, K), 0.5)
    for h in range(H):
        for j, u in enumerate(g.neighbor_array(int(hon[h]))):
            u = int(u)
            nb_is_byz[h, j] = g.is_byzantine(u)
            rng = seeding.stream(seed, realization, seeding.TRUST, h, u)
            alpha[:, h, j] = sample_trust(config.trust, nb_is_byz[h, j], rng, size=T)

    route = ([], [], [], [])
    for h in range(H):
        for j, u in enumerate(g.neighbor_array(int(hon[h]))):
            u = int(u)
            if u in rank:
                route[0].append(h)
                route[1].append(j)
                route[2].append(rank[u])
                route[3].append(slot_of[rank[u]][int(hon[h])])
    hon_route = tuple(np.array(a, dtype=np.int64) for a in route)

    byz = np.array(sorted(g.byzantine), dtype=np.int64)
    byz_route = {}
    for k in byz:
        k = int(k)
        tgt = [h for h in range(H) if k in slot_of[h]]
        byz_route[k] = (np.array(tgt, dtype=np.int64),
                        np.array([slot_of[h][k] for h in tgt], dtype=np.int64),
                        np.array([rank[int(u)] for u in g.neighbor_array(k) if int(u) in rank], dtype=np.int64))
    attack_rngs = {int(k): seeding.stream(seed, realization, seeding.ATTACK, int(k)) for k in byz}
    edge_pairs = [(rank[u], rank[v]) for u, v in g.honest_edges()]
    return World(config, g, params, realization, hon, rank, nbrs, valid, nb_is_byz,
                 np.zeros((H, dist.dim)), np.zeros((H, K)), TrustLedger(g), feats, labels, alpha,
                 attack_rngs, edge_pairs, byz, hon_route, byz_route)


def exchange(w: World):
    """Steps 5-6: what every honest client receives this round, by neighbor slot.

    Returns ``(models (H, K, d), duals (H, K))``; padding slots hold zeros.
    """
    H, K = w.nbrs.shape
    d = w.X.shape[1]
    models = np.zeros((H, K, d))
    duals = np.zeros((H, K))
    rh, rj, su, sj = w.hon_route
    models[rh, rj] = w.X[su]
    # the multiplier an honest sender keeps for edge (sender, receiver) travels with its model
    duals[rh, rj] = w.Lam[su, sj]
    for k in w.byz_ids:
        k = int(k)
        tgt, slot, seen = w.byz_route[k]
        pm, pd = byzantine_payloads(w.config.attack, w.X[seen], len(tgt), w.attack_rngs[k], w.params.radius)
        models[tgt, slot] = pm
        duals[tgt, slot] = pd
    return models, duals


def trusted_mask(w: World) -> np.ndarray:
    """Which slots each honest client acts on this round (after the trust update)."""
    if w.config.variant == "old-baseline" or w.config.force_trust:
        return w.valid.copy()
    if w.config.variant == "oracle-filter":
        return w.valid & ~w.nb_is_byz
    return w.valid & w.ledger.nonnegative_all()


def run_round(w: World) -> RoundLog:
    """Advance the world by one synchronous round and return its log."""
    w.t += 1
    t = w.t
    cfg = w.config
    models, duals = exchange(w)

    w.ledger.accumulate_all(w.alpha[t - 1])
    ok = w.ledger.nonnegative_all()
    wrong_h = int(np.count_nonzero(w.valid & ~w.nb_is_byz & ~ok))
    wrong_b = int(np.count_nonzero(w.nb_is_byz & ok))

    mask = trusted_mask(w)
    if cfg.algorithm.clip_received and models.size:
        H, K, d = models.shape
        models = project_rows(models.reshape(H * K, d), w.params.radius).reshape(H, K, d)
    F = w.features[:, t - 1]
    lab = w.labels[:, t - 1].astype(np.float64)
    X = w.X
    losses = softplus(-lab * rowdot(F, X))
    X_new, Lam_new = update_rows(X, w.Lam, models, duals, mask, F, lab, w.params, cfg.constraint)

    if w.edge_pairs:
        idx = np.asarray(w.edge_pairs)
        D = X[idx[:, 0]] - X[idx[:, 1]]
        edge_values = rowdot(D, D) - cfg.constraint.kappa ** 2
    else:
        edge_values = np.zeros(0)

    rl = RoundLog(
        t=t,
        honest_ids=w.honest_ids,
        models=X,
        losses=losses,
        features=F.copy(),
        labels=w.labels[:, t - 1].copy(),
        trusted=tuple(w.nbrs[h, mask[h]] for h in range(len(X))),
        neighbors=tuple(w.nbrs[h, w.valid[h]] for h in range(len(X))),
        duals=tuple(w.Lam[h, w.valid[h]] for h in range(len(X))),
        edge_pairs=w.edge_pairs,
        edge_values=edge_values,
        byzantine_consumed=np.count_nonzero(mask & w.nb_is_byz, axis=1),
        wrong_honest=wrong_h,
        wrong_byzantine=wrong_b,
    )
    w.X, w.Lam = X_new, Lam_new
    return rl


@dataclass
class RealizationResult:
    realization: int
    horizon: int
    losses: np.ndarray  # (T, H)
    comparator_losses: np.ndarray  # (T, H)
    edge_values: np.ndarray  # (T, E)
    comparator: Comparator
    classification: ClassificationHistory
    t_f: Optional[int]
    cumulative_regret: np.ndarray  # (T,)
    timeavg_regret: np.ndarray
    timeavg_violation_mean: np.ndarray
    timeavg_violation_max: np.ndarray
    misclass_honest: np.ndarray  # (T,) rate at rounds 1..T
    misclass_byz: np.ndarray
    cumulative_violation_mean: np.ndarray  # (T,) mean over edges of per-edge prefix sums
    estimates: dict = field(default_factory=dict)
    logs: Optional[list] = None


def _rate(wrong: np.ndarray, pairs: int) -> np.ndarray:
    if pairs == 0:
        return np.full(len(wrong), np.nan)
    return wrong / pairs


def run_realization(config: SimConfig, realization: int = 0, keep_logs: bool = False) -> RealizationResult:
    w = init_world(config, realization)
    T = config.algorithm.horizon
    H = len(w.honest_ids)
    logs = []
    losses = np.empty((T, H))
    edge_values = np.empty((T, len(w.edge_pairs)))
    wrong_h = np.zeros(T + 1, dtype=np.int64)
    wrong_b = np.zeros(T + 1, dtype=np.int64)
    traj = np.empty((T, H, config.task.dim))
    pairs_h = int(np.count_nonzero(w.valid & ~w.nb_is_byz))
    pairs_b = int(np.count_nonzero(w.nb_is_byz))
    wrong_b[0] = pairs_b
    for k in range(T):
        rl = run_round(w)
        losses[k] = rl.losses
        edge_values[k] = rl.edge_values
        traj[k] = rl.models
        wrong_h[k + 1], wrong_b[k + 1] = rl.wrong_honest, rl.wrong_byzantine
        if keep_logs:
            logs.append(rl)

    feats = np.transpose(w.features, (1, 0, 2))  # (T, H, d)
    labs = w.labels.T
    comp = solve_comparator(w.features, w.labels, w.edge_pairs, config.constraint.kappa,
                            w.params.radius, config.comparator.tol, config.comparator.max_iter)
    comp_losses = comparator_round_losses(comp.models, feats, labs)
    inst = instantaneous_regret(losses, comp_losses)
    cum = np.cumsum(inst)
    t = np.arange(1, T + 1, dtype=np.float64)
    cum_edges, vmean, vmax = violation_series(edge_values)
    hist = ClassificationHistory(pairs_h, pairs_b, wrong_h, wrong_b)
    estimates = _estimate_constants(traj, feats, labs, edge_values, w.edge_pairs)
    return RealizationResult(
        realization=realization,
        horizon=T,
        losses=losses,
        comparator_losses=comp_losses,
        edge_values=edge_values,
        comparator=comp,
        classification=hist,
        t_f=measure_Tf(hist.perfect()),
        cumulative_regret=cum,
        timeavg_regret=cum / t,
        timeavg_violation_mean=vmean.values,
        timeavg_violation_max=vmax.values / t,
        misclass_honest=_rate(wrong_h, pairs_h)[1:],
        misclass_byz=_rate(wrong_b, pairs_b)[1:],
        cumulative_violation_mean=cum_edges.mean(axis=1) if cum_edges.shape[1] else np.zeros(T),
        estimates=estimates,
        logs=logs if keep_logs else None,
    )


def _estimate_constants(traj, feats, labs, edge_values, edge_pairs) -> dict:
    """Largest loss-gradient norm, constraint slope and |constraint| seen along a trajectory."""
    G = B = C = 0.0
    if traj.size:
        z = -labs * np.einsum("thd,thd->th", feats, traj)
        G = float(np.max(np.linalg.norm(feats, axis=2) * sigmoid(z)))
    if edge_values.size:
        idx = np.asarray(edge_pairs)
        D = traj[:, idx[:, 0]] - traj[:, idx[:, 1]]
        B = float(np.max(2.0 * np.linalg.norm(D, axis=2)))
        C = float(np.max(np.abs(edge_values)))
    return {"G": G, "B": B, "C": C, "m": 2 * len(edge_pairs), "V": traj.shape[1]}


SERIES_FIELDS = ("cumulative_regret", "timeavg_regret", "timeavg_violation_mean", "timeavg_violation_max",
                 "misclass_honest", "misclass_byz", "cumulative_violation_mean")


@dataclass
class ExperimentResult:
    config: SimConfig
    realizations: list  # RealizationResult, ordered by index, logs dropped
    mean: dict  # series name -> (T,) mean over realizations

    @property
    def horizon(self) -> int:
        return self.config.algorithm.horizon

    def t_f_values(self) -> list:
        return [r.t_f for r in self.realizations]

    def bound_constants(self) -> BoundConstants:
        """Bound constants with G, B, C estimated as maxima over every realization's trajectory."""
        est = [r.estimates for r in self.realizations]
        a = self.config.algorithm
        return BoundConstants(
            a=a.step_scale if a.eta is None else a.eta * np.sqrt(max(a.horizon, 1)),
            zeta=self.config.bounds.zeta,
            m=int(est[0]["m"]),
            C=max(max(e["C"] for e in est), 1e-12),
            G=max(max(e["G"] for e in est), 1e-12),
            B=max(e["B"] for e in est),
            r=a.radius,
            V=int(est[0]["V"]),
            beta=self.config.bounds.beta,
        )

    def bound_curves(self) -> dict:
        k = self.bound_constants()
        t = np.arange(1, self.horizon + 1, dtype=np.float64)
        return {
            "regret": np.array([regret_bound(k, x) for x in t]),
            "violation": np.array([violation_bound(k, x) for x in t]),
        }


def _strip(r: RealizationResult) -> RealizationResult:
    r.logs = None
    return r


def _run_one(args):
    config, idx = args
    try:
        return _strip(run_realization(config, idx))
    except Exception as e:
        raise RuntimeError(f"realization {idx} failed: {e}") from e


def run_experiment(config: SimConfig, workers: int = 1, realizations: Optional[list] = None) -> ExperimentResult:
    """Run every realization (optionally in worker processes) and average the series.

    Sub-seeds depend only on the realization index, so the result does not depend on
    ``workers`` or on the order realizations are listed in.
    """
    idxs = sorted(range(config.realizations) if realizations is None else realizations)
    jobs = [(config, i) for i in idxs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = []
        for job in jobs:
            results.append(_run_one(job))
            log.debug("realization %d done", job[1])
    mean = {}
    for name in SERIES_FIELDS:
        stack = np.stack([getattr(r, name) for r in results])
        with np.errstate(invalid="ignore"):
            mean[name] = stack.mean(axis=0)
    return ExperimentResult(config, results, mean)
