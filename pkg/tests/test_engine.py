import numpy as np
import pytest

from oracles import resum_regret
from trustfl.checks import (
    check_determinism,
    check_forced_trust_reduction,
    check_oracle_filter_reduction,
    logs_identical,
    run_logs,
    tiny_config,
)
from trustfl.engine import init_world, run_experiment, run_realization, run_round


def test_forced_trust_b0_matches_baseline():
    assert check_forced_trust_reduction(tiny_config()).passed


@pytest.mark.parametrize("kind", ["gaussian-noise", "fixed-vector", "sign-flip", "dual-inflation", "two-faced"])
def test_oracle_filter_matches_honest_only(kind):
    assert check_oracle_filter_reduction(tiny_config(**{"attack.kind": kind})).passed


def test_oracle_filter_trusts_exactly_honest():
    cfg = tiny_config(variant="oracle-filter")
    w = init_world(cfg)
    for _ in range(10):
        rl = run_round(w)
        for h, v in enumerate(w.honest_ids):
            honest_nb = {int(u) for u in w.graph.neighbor_array(int(v)) if not w.graph.is_byzantine(int(u))}
            assert set(map(int, rl.trusted[h])) == honest_nb
        assert np.all(rl.byzantine_consumed == 0)


def test_same_seed_bit_identical():
    cfg = tiny_config()
    assert logs_identical(run_logs(cfg), run_logs(cfg))
    assert not logs_identical(run_logs(cfg), run_logs(cfg.replace(seed=1)))


def test_round_log_complete():
    cfg = tiny_config()
    w = init_world(cfg)
    rl = run_round(w)
    H = len(w.honest_ids)
    assert rl.t == 1
    assert rl.models.shape == (H, 2) and rl.losses.shape == (H,)
    assert len(rl.trusted) == len(rl.duals) == H
    assert len(rl.edge_values) == H * (H - 1) // 2
    # round 1: every beta is one observation old, all duals start at zero
    assert all(np.all(d == 0) for d in rl.duals)
    assert np.all(rl.models == 0)


def test_attack_toggle_leaves_data_and_trust_untouched():
    a = init_world(tiny_config())
    b = init_world(tiny_config(**{"attack.kind": "two-faced", "attack.magnitude": 3.0}))
    assert a.features.tobytes() == b.features.tobytes()
    assert a.alpha.tobytes() == b.alpha.tobytes()


def test_zero_horizon():
    r = run_realization(tiny_config(**{"algorithm.horizon": 0}))
    assert len(r.cumulative_regret) == 0 and len(r.timeavg_regret) == 0
    assert r.t_f is None


def test_tiny_regret_matches_resummation():
    cfg = tiny_config(**{"topology.num_clients": 3, "topology.num_byzantine": 0, "algorithm.horizon": 20})
    r = run_realization(cfg, 0, keep_logs=True)
    ref = resum_regret([lg.losses for lg in r.logs], r.comparator.models,
                       [lg.features for lg in r.logs], [lg.labels for lg in r.logs])
    assert np.isfinite(r.cumulative_regret[-1])
    assert r.cumulative_regret[-1] == ref


def test_single_realization_mean_is_that_realization():
    cfg = tiny_config(realizations=1)
    e = run_experiment(cfg)
    r = run_realization(cfg, 0)
    assert e.mean["timeavg_regret"].tobytes() == r.timeavg_regret.tobytes()


def test_realization_order_irrelevant():
    cfg = tiny_config(realizations=3)
    a = run_experiment(cfg)
    b = run_experiment(cfg, realizations=[2, 0, 1])
    assert all(a.mean[k].tobytes() == b.mean[k].tobytes() for k in a.mean)


def test_workers_irrelevant():
    assert check_determinism(tiny_config(realizations=3), workers=2).passed


def test_failures_carry_context():
    cfg = tiny_config(**{"comparator.max_iter": 1, "comparator.tol": 1e-15})
    with pytest.raises(RuntimeError, match="realization 0"):
        run_experiment(cfg)


def test_invariants_over_run():
    cfg = tiny_config(**{"algorithm.horizon": 60, "attack.kind": "dual-inflation", "attack.magnitude": 50.0})
    r = run_realization(cfg, 0, keep_logs=True)
    for lg in r.logs:
        assert np.all(np.linalg.norm(lg.models, axis=1) <= 1.0 + 1e-12)
        assert all(np.all(d >= 0) for d in lg.duals)


def test_clip_received_bounds_influence():
    cfg = tiny_config(**{"algorithm.clip_received": True, "attack.magnitude": 1e6})
    r = run_realization(cfg, 0)
    assert np.all(np.isfinite(r.cumulative_regret))
