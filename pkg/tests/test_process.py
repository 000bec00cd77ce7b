import math
from collections import Counter

import numpy as np
import pytest
from scipy.stats import chi2

from trackability.bounds import e0_from_joint
from trackability.dist import IntegerPmf, marginals, renyi_entropy
from trackability.numerics import SeedSpec
from trackability.process import (
    BudgetExceeded,
    ChannelSpec,
    ConfigError,
    EncoderSpec,
    SourceSpec,
    TrackingInstance,
    exact_joint,
    instance_from_config,
    product_channel,
    rate_r_state_dist,
    sample_batch,
    sample_trajectory,
)


def rate1_bsc(p=0.1, horizon=4):
    return TrackingInstance(SourceSpec.rate_r(1), ChannelSpec.bsc(p), EncoderSpec("systematic"), horizon)


def test_rate_r_state_law():
    p = rate_r_state_dist(1, 3)
    assert p.support.tolist() == list(range(8))
    np.testing.assert_allclose(p.mass, 1 / 8)
    assert renyi_entropy(p, math.inf) == pytest.approx(3 * math.log(2), abs=1e-14)
    assert rate_r_state_dist(2, 1).support.tolist() == [0, 1, 2, 3]
    assert rate_r_state_dist(1, 2).support.max() <= 2 ** 2


def test_rate_r_budget():
    with pytest.raises(BudgetExceeded, match="budget"):
        rate_r_state_dist(3, 10, budget=1000)


@pytest.mark.parametrize("rate,t", [(1, 1), (1, 4), (2, 2), (3, 2)])
def test_exact_joint_state_marginal_is_uniform(rate, t):
    inst = TrackingInstance(SourceSpec.rate_r(rate), ChannelSpec.bsc(0.2) if rate == 1 else
                            ChannelSpec.identity(2**rate), EncoderSpec("systematic"), t)
    px, _ = marginals(exact_joint(inst, t))
    assert px.support.tolist() == list(range(2 ** (rate * t)))
    np.testing.assert_allclose(px.mass, 2.0 ** (-rate * t), rtol=1e-12)


def test_identity_channel_joint_is_diagonal():
    inst = TrackingInstance(SourceSpec.iid(IntegerPmf.uniform([0, 1])), ChannelSpec.identity(2), EncoderSpec(), 1)
    j = exact_joint(inst, 1)
    np.testing.assert_allclose(np.exp(j.logmass), [[0.5, 0.0], [0.0, 0.5]])


def test_useless_channel_joint_is_product():
    src = SourceSpec.iid(IntegerPmf.from_mass([0, 1, 2], [0.2, 0.3, 0.5]))
    inst = TrackingInstance(src, ChannelSpec.useless(3, 2, [0.7, 0.3]), EncoderSpec(), 2)
    j = exact_joint(inst, 2)
    p = np.exp(j.logmass)
    np.testing.assert_allclose(p, np.outer(p.sum(1), p.sum(0)), atol=1e-15)


def test_observation_labels_sorted():
    j = exact_joint(rate1_bsc(), 3)
    assert list(j.y_support) == sorted(j.y_support)
    assert len(j.y_support) == 8


def test_budget_error_names_atoms():
    with pytest.raises(BudgetExceeded, match="needs 64 atoms"):
        exact_joint(rate1_bsc(), 3, budget=10)


def test_full_input_sequence_joint():
    j = exact_joint(rate1_bsc(0.1, 2), 2, "full_input_sequence")
    assert set(j.x_support) == {(0, 0), (0, 1), (1, 0), (1, 1)}
    np.testing.assert_allclose(np.exp(j.log_px), 0.25)
    # P(y | x) is the product channel
    w = product_channel(ChannelSpec.bsc(0.1), 2).matrix
    for xi, x in enumerate(j.x_support):
        for yi, y in enumerate(j.y_support):
            code_x, code_y = 2 * x[0] + x[1], 2 * y[0] + y[1]
            assert math.exp(j.log_cond[xi, yi] + j.log_py[yi] - j.log_px[xi]) == pytest.approx(
                w[code_x, code_y], abs=1e-14)


def test_exact_joint_matches_monte_carlo_3_sigma():
    inst = rate1_bsc(0.1, 2)
    j = exact_joint(inst, 2)
    n = 10**6
    s, _, y = sample_batch(inst, 2, n, SeedSpec(2024, 0).generator())
    codes = s[:, 1] * 4 + y[:, 0] * 2 + y[:, 1]
    counts = np.bincount(codes, minlength=16)
    for xi, x in enumerate(j.x_support):
        for yi, yy in enumerate(j.y_support):
            p = math.exp(j.logmass[xi, yi])
            freq = counts[x * 4 + yy[0] * 2 + yy[1]] / n
            assert abs(freq - p) <= 3 * math.sqrt(p * (1 - p) / n) + 1e-12


def test_exact_joint_chi_square():
    src = SourceSpec("markov_integer", transition={
        0: IntegerPmf.from_mass([0, 1], [0.3, 0.7]),
        1: IntegerPmf.from_mass([-1, 0, 2], [0.2, 0.5, 0.3]),
        -1: IntegerPmf.from_mass([0], [1.0]),
        2: IntegerPmf.from_mass([1, 2], [0.6, 0.4]),
    })
    ch = ChannelSpec.from_matrix([[0.8, 0.2], [0.3, 0.7], [0.5, 0.5], [0.1, 0.9]], input_alphabet=[-1, 0, 1, 2])
    inst = TrackingInstance(src, ch, EncoderSpec(), 3)
    j = exact_joint(inst, 3)
    n = 10**6
    s, _, y = sample_batch(inst, 3, n, SeedSpec(99, 0).generator())
    obs = Counter(zip(s[:, 2].tolist(), map(tuple, y.tolist())))
    expected, observed = [], []
    for xi, x in enumerate(j.x_support):
        for yi, yy in enumerate(j.y_support):
            p = math.exp(j.logmass[xi, yi])
            if p > 0:
                expected.append(p * n)
                observed.append(obs.get((x, yy), 0))
    assert sum(observed) == n  # nothing sampled outside the exact support
    stat = sum((o - e) ** 2 / e for o, e in zip(observed, expected))
    assert stat < chi2.ppf(0.99, len(expected) - 1)


def test_identity_channel_trajectory_copies_input():
    inst = TrackingInstance(SourceSpec.iid(IntegerPmf.uniform([0, 1, 2])), ChannelSpec.identity(3), EncoderSpec(), 5)
    s, x, y = sample_trajectory(inst, 5, SeedSpec(1, 0))
    assert x == y == s


def test_trajectory_deterministic():
    inst = rate1_bsc()
    assert sample_trajectory(inst, 4, SeedSpec(5, 3)) == sample_trajectory(inst, 4, SeedSpec(5, 3))


def test_rate1_recurrence_on_sampled_paths():
    s, x, _ = sample_batch(rate1_bsc(0.1, 6), 6, 10**4, SeedSpec(8, 0).generator())
    steps = s[:, 1:] - 2 * s[:, :-1]
    assert set(np.unique(steps).tolist()) <= {0, 1}
    assert set(np.unique(s[:, 0]).tolist()) <= {0, 1}
    np.testing.assert_array_equal(x, s % 2)


@pytest.mark.parametrize("t", [1, 2, 3])
def test_data_processing_state_vs_inputs(t):
    tables = [{(a,): a for a in (0, 1)}]
    hist = [(0,), (1,)]
    rng = np.random.default_rng(t)
    for k in range(1, t):
        hist = [h + (2 * h[-1] + w,) for h in hist for w in (0, 1)]
        tables.append({h: int(rng.integers(2)) for h in hist})
    inst = TrackingInstance(SourceSpec.rate_r(1), ChannelSpec.from_matrix([[0.9, 0.1], [0.25, 0.75]]),
                            EncoderSpec("table", tables), t)
    for rho in (0.5, 1.0, 2.0):
        state = e0_from_joint(exact_joint(inst, t, "current_state"), rho)
        seq = e0_from_joint(exact_joint(inst, t, "full_input_sequence"), rho)
        assert state <= seq + 1e-9


def test_instance_from_config_paths():
    inst = instance_from_config({"source": {"kind": "rate_r", "rate": 1}, "channel": {"preset": "bsc", "p": 0.1},
                                 "horizon": 3})
    assert inst.encoder.kind == "systematic"
    with pytest.raises(ConfigError, match=r"instance\.channel\.matrix"):
        instance_from_config({"source": {"kind": "rate_r"}, "channel": {}})
    with pytest.raises(ConfigError, match=r"instance\.source\.kind"):
        instance_from_config({"source": {"kind": "poisson"}, "channel": {"preset": "identity"}})
    with pytest.raises(ConfigError, match=r"instance\.horizon"):
        instance_from_config({"source": {"kind": "rate_r"}, "channel": {"preset": "identity"}, "horizon": 0})


def test_channel_validation():
    with pytest.raises(ValueError):
        ChannelSpec.from_matrix([[0.5, 0.4], [0.5, 0.5]])
    with pytest.raises(ValueError):
        TrackingInstance(SourceSpec.iid(IntegerPmf.uniform([0, 1])), ChannelSpec.bsc(0.1), EncoderSpec("systematic"))
