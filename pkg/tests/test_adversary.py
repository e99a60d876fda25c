import numpy as np
import pytest

from trustfl.adversary import AttackConfigError, AttackStrategy, byzantine_messages
from trustfl.config import ConfigError, SimConfig


def observed(rng, n=5, d=3):
    return rng.standard_normal((n, d)) * 0.3


def test_fixed_vector_zero_magnitude():
    rng = np.random.default_rng(0)
    msgs = byzantine_messages(AttackStrategy("fixed-vector", magnitude=0.0), 0, observed(rng), [3, 4, 5], rng)
    assert len(msgs) == 3
    assert all(np.array_equal(m.model, np.zeros(3)) for m in msgs)


def test_fixed_vector_norm():
    rng = np.random.default_rng(0)
    msgs = byzantine_messages(AttackStrategy("fixed-vector", magnitude=2.5, direction=(1.0, 1.0, 0.0)), 0,
                              observed(rng), [3], rng)
    assert np.linalg.norm(msgs[0].model) == pytest.approx(2.5)


def test_two_faced_distinct_payloads():
    rng = np.random.default_rng(0)
    msgs = byzantine_messages(AttackStrategy("two-faced"), 0, observed(rng), [3, 4, 5], rng)
    payloads = [m.model.tobytes() for m in msgs]
    assert len(set(payloads)) == 3


def test_sign_flip():
    rng = np.random.default_rng(0)
    obs = observed(rng)
    msgs = byzantine_messages(AttackStrategy("sign-flip", magnitude=1.0), 0, obs, [3, 4], rng)
    for m in msgs:
        assert np.allclose(m.model, -obs.mean(axis=0), rtol=0, atol=1e-15)


def test_dual_inflation():
    rng = np.random.default_rng(0)
    obs = observed(rng)
    msgs = byzantine_messages(AttackStrategy("dual-inflation", magnitude=7.0), 0, obs, [3, 4], rng)
    assert all(m.dual == 7.0 for m in msgs)
    assert np.linalg.norm(msgs[0].model) <= 1.0


def test_gaussian_default_magnitude_and_dual():
    s = AttackStrategy()
    assert s.kind == "gaussian-noise"
    assert s.resolved_magnitude(1.0) == 10.0 and s.resolved_dual(1.0) == 10.0
    rng = np.random.default_rng(0)
    msgs = byzantine_messages(s, 0, observed(rng, d=2000), [3, 4], rng)
    assert np.std(msgs[0].model) == pytest.approx(10.0, rel=0.05)
    assert np.array_equal(msgs[0].model, msgs[1].model)


def test_unknown_kind_rejected_at_parse_time():
    with pytest.raises(AttackConfigError):
        AttackStrategy("teleport")
    with pytest.raises(ConfigError) as err:
        SimConfig().replace(**{"attack.kind": "teleport"})
    assert "attack" in str(err.value)


def test_negative_magnitude_rejected():
    with pytest.raises(AttackConfigError):
        AttackStrategy(magnitude=-1.0)
