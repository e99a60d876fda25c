"""Trust-filtered online primal-dual learning over a peer-to-peer graph with Byzantine clients."""

from .adversary import ATTACK_KINDS, AttackStrategy, byzantine_messages
from .config import SimConfig, default_config, parse_config
from .engine import ExperimentResult, RoundLog, run_experiment, run_realization, run_round
from .learner import AlgorithmParams, ClientState, client_update
from .metrics import loglog_slope, measure_Tf, misclassification_rate
from .oracle import BoundConstants, regret_bound, solve_comparator, violation_bound
from .taskmodel import ConstraintParams, DataDistribution, DataSample, loss, loss_grad
from .topology import GraphTopology, TopologySpec, build_topology
from .trust import TrustLedger, TrustModel, lemma1_bound, sample_trust, trusted_set

__all__ = [
    "ATTACK_KINDS", "AttackStrategy", "byzantine_messages",
    "SimConfig", "default_config", "parse_config",
    "ExperimentResult", "RoundLog", "run_experiment", "run_realization", "run_round",
    "AlgorithmParams", "ClientState", "client_update",
    "loglog_slope", "measure_Tf", "misclassification_rate",
    "BoundConstants", "regret_bound", "solve_comparator", "violation_bound",
    "ConstraintParams", "DataDistribution", "DataSample", "loss", "loss_grad",
    "GraphTopology", "TopologySpec", "build_topology",
    "TrustLedger", "TrustModel", "lemma1_bound", "sample_trust", "trusted_set",
]
