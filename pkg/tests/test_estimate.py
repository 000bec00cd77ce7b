import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trackability.bounds import random_joint
from trackability.dist import IntegerPmf, JointDist
from trackability.estimate import (
    EstimatorPolicy,
    ceiling_quantize,
    error_moment_exact,
    error_moment_mc,
    error_profile,
    j_value,
    map_estimate,
    rho_estimate,
)
from trackability.numerics import SeedSpec
from trackability.process import ChannelSpec, EncoderSpec, SourceSpec, TrackingInstance, exact_joint

BINARY = IntegerPmf.uniform([0, 1])


def bsc_instance(p=0.1, horizon=4):
    return TrackingInstance(SourceSpec.rate_r(1), ChannelSpec.bsc(p), EncoderSpec("systematic"), horizon)


def _frequency_within_3_sigma(draws, value, p=0.5):
    n = len(draws)
    freq = sum(d == value for d in draws) / n
    return abs(freq - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_map_examples():
    assert map_estimate(IntegerPmf.point_mass(5)) == 5
    assert map_estimate(IntegerPmf.from_mass([0, 1], [0.9, 0.1])) == 0
    assert map_estimate(BINARY) == 0
    rng = SeedSpec(1, 0).generator()
    draws = [map_estimate(BINARY, "uniform", rng) for _ in range(10**4)]
    assert _frequency_within_3_sigma(draws, 0)


def test_uniform_ties_need_randomness():
    with pytest.raises(ValueError):
        map_estimate(BINARY, "uniform")
    with pytest.raises(ValueError):
        map_estimate(BINARY, "coin")


@pytest.mark.parametrize("x,want", [(2.3, 3), (-1.0, -1), (-0.5, 0), (4.0, 4)])
def test_ceiling(x, want):
    assert ceiling_quantize(x) == want


def test_j_value_examples():
    assert j_value(IntegerPmf.point_mass(4), 1.0) == (math.inf, (4,))
    J, A = j_value(IntegerPmf.from_mass([0, 1], [2 / 3, 1 / 3]), 1.0)
    assert J == pytest.approx(2.0, rel=1e-14) and A == (0,)
    J, A = j_value(BINARY, 1.0)
    assert J == pytest.approx(1.0, rel=1e-14) and A == (0, 1)


def test_rho_estimate_examples():
    assert rho_estimate(IntegerPmf.point_mass(4), 1.0) == 4
    assert rho_estimate(IntegerPmf.from_mass([0, 1], [2 / 3, 1 / 3]), 1.0, rng=0) == 0
    rng = SeedSpec(2, 0).generator()
    draws = [rho_estimate(BINARY, 1.0, "uniform", rng) for _ in range(10**4)]
    assert _frequency_within_3_sigma(draws, 1)


def _brute_scores(cond, rho):
    xs, ps = cond.support.tolist(), cond.mass.tolist()
    return {
        x: min((px / pz / abs(x - z) ** rho for z, pz in zip(xs, ps) if z != x), default=math.inf)
        for x, px in zip(xs, ps)
    }


pmfs = st.lists(st.floats(min_value=1e-3, max_value=1.0), min_size=1, max_size=7).flatmap(
    lambda ws: st.tuples(st.just(ws), st.lists(st.integers(-10, 10), min_size=len(ws), max_size=len(ws), unique=True))
)


@settings(max_examples=200)
@given(pmfs, st.sampled_from([0.5, 1.0, 2.0, 6.0]))
def test_j_value_consistency(pair, rho):
    ws, xs = pair
    w = np.array(ws) / sum(ws)
    cond = IntegerPmf.from_mass(xs, w)
    J, A = j_value(cond, rho)
    brute = _brute_scores(cond, rho)
    assert J == pytest.approx(max(brute.values()), rel=1e-12)
    # every member of A dominates every competitor at level J
    for x in A:
        for z in cond.support.tolist():
            if z != x:
                assert cond.prob(x) / cond.prob(z) >= J * abs(x - z) ** rho * (1 - 1e-12)
    # nobody dominates at a strictly larger level
    if math.isfinite(J):
        c = J * (1 + 1e-9)
        assert not any(s >= c for s in brute.values())


def test_error_moment_examples():
    ident = JointDist.from_mass([0, 1], [(0,), (1,)], [[0.5, 0], [0, 0.5]])
    for m in (0.5, 1, 2, 3):
        assert error_moment_exact(ident, EstimatorPolicy("map"), m) == 0.0
    bsc = exact_joint(bsc_instance(), 1)
    for m in (0.5, 1, 2):
        assert error_moment_exact(bsc, EstimatorPolicy("map"), m) == pytest.approx(0.1, abs=1e-14)
    useless = JointDist.from_mass([0, 1], [(0,), (1,)], [[0.25, 0.25], [0.25, 0.25]])
    assert error_moment_exact(useless, EstimatorPolicy("map"), 2) == pytest.approx(0.5, abs=1e-15)


def test_uniform_ties_averaged_exactly():
    useless = JointDist.from_mass([0, 3], [(0,)], [[0.5], [0.5]])
    # uniform over A = {0, 3}: half the time error 0, else 3 with prob 1/2
    assert error_moment_exact(useless, EstimatorPolicy("map", tie_rule="uniform"), 1) == pytest.approx(1.5)


@pytest.mark.parametrize("seed", range(5))
def test_map_optimal_among_all_tables_on_binary_support(seed):
    rng = np.random.default_rng(seed)
    j = JointDist.from_mass([0, 1], [(k,) for k in range(3)], rng.dirichlet(np.ones(6)).reshape(2, 3))
    for m in (0.5, 1.0, 2.0):
        best = error_moment_exact(j, EstimatorPolicy("map"), m)
        for choice in itertools.product([0, 1], repeat=3):
            table = {(k,): v for k, v in enumerate(choice)}
            assert error_moment_exact(j, EstimatorPolicy("table", table=table), m) >= best - 1e-12


def test_ceiling_policy():
    j = JointDist.from_mass([0, 2], [(0,)], [[0.5], [0.5]])
    table = {(0,): 0.4}
    err = error_moment_exact(j, EstimatorPolicy("ceiling", inner=EstimatorPolicy("table", table=table)), 1)
    assert err == pytest.approx(0.5 * 1 + 0.5 * 1)


def test_mc_identity_is_exact_zero():
    inst = TrackingInstance(SourceSpec.rate_r(1), ChannelSpec.identity(2), EncoderSpec("systematic"), 3)
    assert error_moment_mc(inst, EstimatorPolicy("map"), 1, 3, 500, 4) == (0.0, 0.0)


def test_mc_deterministic_and_close():
    inst = bsc_instance()
    a = error_moment_mc(inst, EstimatorPolicy("map"), 1, 1, 10**5, 17)
    assert a == error_moment_mc(inst, EstimatorPolicy("map"), 1, 1, 10**5, 17)
    assert abs(a[0] - 0.1) <= a[1]


def test_mc_rejects_few_replications():
    with pytest.raises(ValueError):
        error_moment_mc(bsc_instance(), EstimatorPolicy("map"), 1, 1, 50, 0)


def test_mc_coverage():
    inst = bsc_instance()
    exact = error_moment_exact(exact_joint(inst, 2), EstimatorPolicy("map"), 1)
    hits = 0
    for k in range(100):
        est, hw = error_moment_mc(inst, EstimatorPolicy("map"), 1, 2, 1000, SeedSpec(123, k))
        hits += abs(est - exact) <= hw
    assert hits >= 93


def test_error_profile_exact_and_mc():
    inst = bsc_instance()
    stats = error_profile(inst, EstimatorPolicy("map"), 1, [1, 2])
    assert stats.method == "exact" and stats.half_width == {1: 0.0, 2: 0.0}
    mc = error_profile(inst, EstimatorPolicy("map"), 1, [1, 2], mc=2000, seed=3)
    assert mc.method == "monte_carlo" and mc.replications == 2000
    assert all(v >= 0 for v in mc.per_t_moment.values())


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_error_moments_nonnegative(seed):
    j = random_joint(np.random.default_rng(seed), 3, 3)
    for policy in (EstimatorPolicy("map"), EstimatorPolicy("rho", rho=2.0)):
        assert error_moment_exact(j, policy, 1.5) >= 0
