import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import central_difference, naive_logistic, relative_error
from trustfl.taskmodel import (
    ConstraintParams,
    DataDistribution,
    DataSample,
    client_stream,
    constraint_grad,
    constraint_value,
    generate_sample,
    label_for,
    loss,
    loss_grad,
)

LN2 = math.log(2.0)
vec2 = arrays(np.float64, 2, elements=st.floats(-1, 1))


def test_labels():
    w = np.array([1.0, 0.0])
    psi = np.array([0.3, -2.0])
    assert label_for(psi, w, flip=False) == 1
    assert label_for(psi, w, flip=True) == -1


def test_label_noise_extremes():
    w = np.array([1.0, 0.0])
    for noise, sign in ((0.0, 1), (1.0, -1)):
        rng = np.random.default_rng(3)
        for _ in range(200):
            s = generate_sample(DataDistribution(dim=2, label_noise=noise), w, rng)
            truth = 1 if s.features @ w >= 0 else -1
            assert s.label == sign * truth


def test_feature_moments():
    rng = np.random.default_rng(11)
    dist = DataDistribution(dim=5)
    f, labels, truths = client_stream(dist, rng.standard_normal(5), 100_000, rng)
    assert np.all(np.abs(f.mean(axis=0)) <= 0.02)
    assert np.all(np.abs(f.var(axis=0) - 1.0) <= 0.03)
    assert set(np.unique(labels)) == {-1, 1}
    assert np.allclose(np.linalg.norm(truths, axis=1), 1.0)


def test_loss_examples():
    assert loss(np.zeros(2), DataSample(1, np.array([1.0, 2.0]))) == pytest.approx(LN2, rel=1e-15)
    assert loss(np.array([10.0]), DataSample(1, np.array([1.0]))) == pytest.approx(4.5398899216870535e-05, rel=1e-12)
    assert loss(np.array([-1000.0]), DataSample(1, np.array([1.0]))) == pytest.approx(1000.0, rel=1e-15)
    assert math.isfinite(loss(np.array([1e6]), DataSample(-1, np.array([1.0]))))


def test_loss_grad_examples():
    g = loss_grad(np.zeros(2), DataSample(1, np.array([1.0, 0.0])))
    assert np.array_equal(g, [-0.5, 0.0])
    g = loss_grad(np.array([1e4]), DataSample(1, np.array([1.0])))
    assert abs(g[0]) < 1e-300


def test_constraint_examples():
    p = ConstraintParams(0.5)
    z = np.zeros(2)
    assert constraint_value(z, z, p) == -0.25
    assert constraint_value(np.array([1.0, 0.0]), z, p) == 0.75
    assert np.array_equal(constraint_grad(np.array([1.0, 0.0]), z), [2.0, 0.0])
    assert np.array_equal(constraint_grad(z, z), [0.0, 0.0])


@given(arrays(np.float64, 5, elements=st.floats(-1, 1)), arrays(np.float64, 5, elements=st.floats(-3, 3)),
       st.sampled_from([-1, 1]))
def test_loss_matches_naive_formula(x, psi, label):
    s = DataSample(label, psi)
    assert loss(x, s) == pytest.approx(naive_logistic(label * float(psi @ x)), rel=1e-12, abs=1e-15)


def test_loss_grad_finite_differences():
    rng = np.random.default_rng(5)
    for _ in range(100):
        x = rng.standard_normal(5)
        x *= rng.random() / np.linalg.norm(x)
        s = DataSample(int(rng.choice([-1, 1])), rng.standard_normal(5))
        fd = central_difference(lambda y: loss(y, s), x)
        assert relative_error(loss_grad(x, s), fd) <= 1e-6


def test_constraint_grad_finite_differences():
    rng = np.random.default_rng(6)
    p = ConstraintParams(0.5)
    for _ in range(100):
        xv, xu = rng.standard_normal(5), rng.standard_normal(5)
        fd = central_difference(lambda y: constraint_value(y, xu, p), xv)
        assert relative_error(constraint_grad(xv, xu), fd) <= 1e-6


@given(vec2, vec2, st.floats(0, 1))
def test_constraint_symmetric(a, b, _):
    p = ConstraintParams(0.5)
    assert constraint_value(a, b, p) == constraint_value(b, a, p)


@given(vec2, vec2, vec2, vec2, st.floats(0, 1), st.sampled_from([-1, 1]))
def test_convexity(x, y, u, w, lam, label):
    s = DataSample(label, np.array([1.3, -0.7]))
    mix = lam * x + (1 - lam) * y
    assert loss(mix, s) <= lam * loss(x, s) + (1 - lam) * loss(y, s) + 1e-12
    p = ConstraintParams(0.5)
    lhs = constraint_value(mix, lam * u + (1 - lam) * w, p)
    assert lhs <= lam * constraint_value(x, u, p) + (1 - lam) * constraint_value(y, w, p) + 1e-12


def _in_ball(v, r=1.0):
    n = np.linalg.norm(v)
    return v if n <= r else v * (r / n)


@given(vec2, vec2, vec2, arrays(np.float64, 2, elements=st.floats(-3, 3)))
def test_lipschitz_and_bounded(a, b, c, psi):
    a, b, c = _in_ball(a), _in_ball(b), _in_ball(c)
    s = DataSample(1, psi)
    assert abs(loss(a, s) - loss(b, s)) <= np.linalg.norm(psi) * np.linalg.norm(a - b) + 1e-12
    p = ConstraintParams(0.5)
    assert abs(constraint_value(a, c, p) - constraint_value(b, c, p)) <= 4 * np.linalg.norm(a - b) + 1e-12
    assert abs(constraint_value(a, c, p)) <= max(4.0, 0.25) + 1e-12
    ga, gb = constraint_grad(a, c), constraint_grad(b, c)
    assert np.linalg.norm(ga - gb) <= 2 * np.linalg.norm(a - b) + 1e-12


def test_invalid_distribution():
    with pytest.raises(ValueError):
        DataDistribution(dim=0)
    with pytest.raises(ValueError):
        ConstraintParams(-1)
