import math
from types import SimpleNamespace

import numpy as np
import pytest

from oracles import resum_regret, resum_violation
from trustfl.checks import tiny_config
from trustfl.engine import run_realization
from trustfl.metrics import (
    ClassificationHistory,
    MetricsError,
    MetricSeries,
    cumulative_regret,
    cumulative_violation,
    loglog_slope,
    measure_Tf,
    misclassification_rate,
    time_average,
    violation_series,
)


@pytest.fixture(scope="module")
def small_run():
    cfg = tiny_config(**{"topology.num_clients": 2, "topology.num_byzantine": 0, "algorithm.horizon": 20})
    return run_realization(cfg, 0, keep_logs=True)


def test_regret_upto_zero(small_run):
    assert cumulative_regret(small_run.logs, small_run.comparator, 0) == 0.0
    with pytest.raises(MetricsError):
        cumulative_regret(small_run.logs, small_run.comparator, 21)


def test_regret_against_itself_is_zero(small_run):
    logs = small_run.logs
    fake = []
    for lg in logs:
        fake.append(SimpleNamespace(losses=np.array([math.log1p(math.exp(-l * (f @ np.zeros(2))))
                                                     for f, l in zip(lg.features, lg.labels)]),
                                    features=lg.features, labels=lg.labels))
    comp = SimpleNamespace(models=np.zeros((2, 2)))
    assert cumulative_regret(fake, comp, len(fake)) == 0.0


def test_regret_resummation_exact(small_run):
    logs = small_run.logs
    ref = resum_regret([lg.losses for lg in logs], small_run.comparator.models,
                       [lg.features for lg in logs], [lg.labels for lg in logs])
    assert cumulative_regret(logs, small_run.comparator, 20) == ref
    assert small_run.cumulative_regret[-1] == ref


def test_regret_prefix_consistency(small_run):
    cum = small_run.cumulative_regret
    inst = [float(np.cumsum(small_run.losses[k] - small_run.comparator_losses[k])[-1]) for k in range(20)]
    assert cum[0] == inst[0]
    for k in range(1, 20):
        assert cum[k] - cum[k - 1] == pytest.approx(inst[k], abs=1e-12)
        assert cum[k] == cum[k - 1] + inst[k]


def test_violation_resummation_exact(small_run):
    logs = small_run.logs
    assert cumulative_violation(logs, (0, 1), 0) == 0.0
    ref = resum_violation([lg.edge_values for lg in logs], 0)
    assert cumulative_violation(logs, (1, 0), 20) == ref


def test_violation_at_consensus():
    vals = np.full((7, 3), -0.25)
    cum, mean, mx = violation_series(vals)
    assert np.array_equal(cum[:, 0], -0.25 * np.arange(1, 8))
    assert np.allclose(mean.values, -0.25)


def test_violation_byzantine_edge_rejected():
    logs = [SimpleNamespace(edge_pairs=[(0, 1)], edge_values=np.array([0.1]))]
    with pytest.raises(MetricsError):
        cumulative_violation(logs, (0, 2), 1)


def test_time_average_examples():
    assert np.array_equal(time_average(MetricSeries("cumulative-regret", np.array([1.0, 2, 3]))).values, [1, 1, 1])
    ta = time_average(MetricSeries("cumulative-regret", np.array([4.0, 4, 4]))).values
    assert ta == pytest.approx([4, 2, 4 / 3])
    assert np.array_equal(time_average(MetricSeries("cumulative-regret", np.zeros(5))).values, np.zeros(5))


def test_measure_Tf_examples():
    assert measure_Tf([True] * 5) == 1
    p = [True] * 60
    p[36] = False
    assert measure_Tf(p) == 38
    assert measure_Tf([True, False]) is None


def test_misclassification_rate():
    h = ClassificationHistory(4, 6, np.array([0, 1, 0]), np.array([6, 2, 0]))
    assert misclassification_rate(h, 0) == {"honest": 0.0, "byzantine": 1.0}
    assert misclassification_rate(h, 2) == {"honest": 0.0, "byzantine": 0.0}
    with pytest.raises(MetricsError):
        misclassification_rate(h, 3)
    assert math.isnan(misclassification_rate(ClassificationHistory(2, 0, np.zeros(2), np.zeros(2)), 1)["byzantine"])


def test_loglog_slope():
    T = np.array([250, 500, 1000, 2000])
    assert loglog_slope(T, 3 * T**0.5) == pytest.approx(0.5)
    assert loglog_slope(T, T**0.75) == pytest.approx(0.75)
