"""Randomized inequality sweeps over every invariant the library asserts.

Each property draws instances from its own stream (derived from the master
seed and the property's position), evaluates a slack that is nonnegative when
the inequality holds, and passes when no slack falls below ``-tolerance``.
Failing instances are written as JSON repro files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ..bounds import (
    e0_from_joint,
    e0_maximize,
    gallager_e0,
    jensen_chain_check,
    lemma1_check,
    lemma2_check,
    map_error_bound,
    multi_use_e0,
    necessary_terms,
    product_input,
    quantization_chain_check,
    random_channel,
    random_joint,
    reverse_holder_check,
    sufficient_map_value,
    sufficient_rho_value,
)
from ..dist import IntegerPmf, JointDist, _column_pmf, renyi_entropy
from ..estimate import EstimatorPolicy, error_moment_exact
from ..numerics import SeedSpec, as_seed, riemann_zeta
from ..process import ChannelSpec, EncoderSpec, SourceSpec, TrackingInstance, exact_joint
from .io import csv_text, dumps

INTENSITY = {"quick": 100, "full": 1000}
TABLE_COLUMNS = ["property", "instances", "failures", "worst_slack", "tolerance", "status"]


@dataclass(frozen=True)
class Property:
    name: str
    tolerance: float
    check: Callable[[np.random.Generator, int], tuple[float, dict]]


@dataclass
class PropertyResult:
    name: str
    instances: int
    failures: int
    worst_slack: float
    tolerance: float
    repros: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def row(self) -> list:
        return [self.name, self.instances, self.failures, self.worst_slack, self.tolerance,
                "PASS" if self.passed else "FAIL"]


@dataclass
class VerifyResult:
    results: list[PropertyResult]
    seed: SeedSpec
    intensity: str

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def table_csv(self) -> str:
        return csv_text(TABLE_COLUMNS, [r.row() for r in self.results])


# -- instance helpers -------------------------------------------------------------


def _dirichlet_pmf(rng, lo, hi) -> IntegerPmf:
    values = np.arange(lo, hi + 1)
    return IntegerPmf.from_mass(values, rng.dirichlet(np.ones(values.size)))


def _small_joint(rng, max_x=4, max_y=4, spread=6) -> JointDist:
    nx = int(rng.integers(2, max_x + 1))
    ny = int(rng.integers(1, max_y + 1))
    sparsity = float(rng.choice([0.0, 0.3]))
    return random_joint(rng, nx, ny, sparsity=sparsity, spread=spread)


def _real_estimates(rng, j: JointDist) -> np.ndarray:
    c = float(np.max(np.abs(j.x_values))) + 1.0
    return rng.uniform(-c, c, size=len(j.y_support))


def _joint_json(j: JointDist) -> dict:
    return j.to_json()


# -- property checks ------------------------------------------------------------
# Each returns (slack, repro) for the k-th instance drawn from rng.


def _bounded_support(rng, k, invert=False):
    p = _dirichlet_pmf(rng, -8, 8)
    rho = (0.5, 1.0, 2.0)[k % 3]
    rep = lemma1_check(p, rho)
    slack = -rep.slack if invert else rep.slack
    return slack, {"pmf": p.to_json(), "rho": rho, "lhs": rep.lhs, "rhs": rep.rhs}


def _zeta_moment(rng, k):
    p = _dirichlet_pmf(rng, -20, 20)
    m, rho = ((2.0, 1.0), (3.0, 1.5), (1.0, 0.5))[k % 3]
    rep = lemma2_check(p, m, rho)
    return rep.slack, {"pmf": p.to_json(), "m": m, "rho": rho, "lhs": rep.lhs, "rhs": rep.rhs}


def _conditional_moment_entropy(rng, k):
    """Per observation: E[|X - ceil f(y)|^m | y] + 1 >= (3 + 2 log 2c)^-rho exp(rho H_{1/(1+rho)}(X | y)).

    E = X - ceil f(y) lives in [-2c, 2c] when |X|, |f| <= c, which is where
    the log(2c) factor comes from; rho <= m makes the m-th moment dominate.
    """
    j = _small_joint(rng)
    f = _real_estimates(rng, j)
    m = float(rng.choice([1.0, 2.0, 3.0]))
    rho = float(rng.uniform(0.05, 1.0)) * m
    c = max(1.0, float(np.max(np.abs(j.x_values))), float(np.max(np.abs(f))))
    worst = math.inf
    for col in range(len(j.y_support)):
        if not np.isfinite(j.log_py[col]):
            continue
        cond = _column_pmf(j, col)
        err = np.abs(cond.support - math.ceil(f[col])).astype(float)
        lhs = float(np.dot(cond.mass, err**m)) + 1.0
        rhs = math.exp(rho * renyi_entropy(cond, 1.0 / (1.0 + rho)) - rho * math.log(3.0 + 2.0 * math.log(2.0 * c)))
        worst = min(worst, lhs - rhs)
    return worst, {"joint": _joint_json(j), "estimates": f.tolist(), "m": m, "rho": rho}


def _quantization(rng, k):
    j = _small_joint(rng)
    f = _real_estimates(rng, j)
    m = (0.5, 1.0, 1.5, 2.0, 3.0)[k % 5]
    rep = quantization_chain_check(j, f, m)
    return rep.slack, {"joint": _joint_json(j), "estimates": f.tolist(), "m": m}


def _reverse_holder(rng, k):
    j = _small_joint(rng)
    rho = (0.5, 1.0, 2.0)[k % 3]
    p = (1.5, 2.0, 3.0)[(k // 3) % 3]
    rep = reverse_holder_check(j, rho, p)
    return rep.slack, {"joint": _joint_json(j), "rho": rho, "p": p}


def _tracked_instance(rng, k):
    """A source over a noiseless channel that recovers it exactly, with a uniform law."""
    kind = k % 3
    if kind == 0:
        return TrackingInstance(SourceSpec.rate_r(1), ChannelSpec.identity(2), EncoderSpec("systematic"), 4), "rate1"
    if kind == 1:
        return TrackingInstance(SourceSpec.rate_r(2), ChannelSpec.identity(4), EncoderSpec("systematic"), 3), "rate2"
    n = int(rng.integers(2, 5))
    src = SourceSpec.iid(IntegerPmf.uniform(range(n)))
    return TrackingInstance(src, ChannelSpec.identity(n), EncoderSpec("identity"), 4), f"iid_uniform{n}"


def _necessary_tracked(rng, k):
    inst, label = _tracked_instance(rng, k)
    t = int(rng.integers(1, 4 if label != "rate2" else 3))
    m = float(rng.choice([1.0, 2.0]))
    rho = float(rng.uniform(0.1, 1.0)) * m
    q = rho + 1.0 + float(rng.uniform(0.05, 3.0))
    lhs, rhs = necessary_terms(exact_joint(inst, t), rho, q, t)
    return lhs - rhs, {"instance": label, "t": t, "rho": rho, "q": q, "lhs": lhs, "rhs": rhs}


def _necessary_monotone(rng, k):
    """Replacing a binary channel by the identity never lowers lhs_t."""
    if k % 2:
        src, enc = SourceSpec.rate_r(1), EncoderSpec("systematic")
    else:
        src, enc = SourceSpec.iid(IntegerPmf.from_mass([0, 1], rng.dirichlet([1.0, 1.0]))), EncoderSpec("identity")
    ch = random_channel(rng, 2, 2)
    t = int(rng.integers(1, 4))
    rho = float(rng.uniform(0.1, 2.0))
    q = rho + 1.0 + float(rng.uniform(0.05, 3.0))
    noisy = necessary_terms(exact_joint(TrackingInstance(src, ch, enc, t), t), rho, q, t)[0]
    clean = necessary_terms(exact_joint(TrackingInstance(src, ChannelSpec.identity(2), enc, t), t), rho, q, t)[0]
    return clean - noisy, {"channel": ch.matrix.tolist(), "source": src.kind, "t": t, "rho": rho, "q": q}


def _e0_forms(rng, k):
    ch = random_channel(rng, int(rng.integers(2, 6)), int(rng.integers(2, 6)))
    p = IntegerPmf.from_mass(ch.input_alphabet, rng.dirichlet(np.ones(len(ch.input_alphabet))))
    rho = (0.5, 1.0, 2.0)[k % 3]
    a = gallager_e0(ch, p, rho, "sum")
    b = gallager_e0(ch, p, rho, "density")
    return -abs(a - b), {"channel": ch.matrix.tolist(), "input": p.to_json(), "rho": rho}


def _e0_optimality(rng, k):
    ch = random_channel(rng, int(rng.integers(2, 5)), int(rng.integers(2, 5)))
    rho = (0.5, 1.0, 2.0, 4.0)[k % 4]
    _, best = e0_maximize(ch, rho, seed=k)
    p = IntegerPmf.from_mass(ch.input_alphabet, rng.dirichlet(np.ones(len(ch.input_alphabet))))
    return best - gallager_e0(ch, p, rho), {"channel": ch.matrix.tolist(), "input": p.to_json(), "rho": rho}


def _single_letter(rng, k):
    """t-use E0: equal to t E0(rho) at product optimizers, at most that for correlated inputs."""
    ch = random_channel(rng, 2, 2)
    t = 2 + k % 2
    rho = (0.5, 1.0, 2.0)[(k // 2) % 3]
    opt, e0 = e0_maximize(ch, rho, seed=k)
    mass = np.array([opt.prob(x) for x in ch.input_alphabet])
    at_product = multi_use_e0(ch, t, product_input(mass, t), rho)
    corr = rng.dirichlet(np.ones(2**t))
    correlated = multi_use_e0(ch, t, corr, rho)
    slack = min(-abs(at_product - t * e0), t * e0 - correlated)
    return slack, {"channel": ch.matrix.tolist(), "t": t, "rho": rho, "correlated_input": corr.tolist()}


def _data_processing(rng, k):
    """E0 seen from the current state never exceeds E0 seen from the whole input sequence."""
    t = int(rng.integers(1, 4))
    if k % 2:
        tables = [{h: int(rng.integers(2)) for h in _histories(s)} for s in range(1, t + 1)]
        src, enc, label = SourceSpec.rate_r(1), EncoderSpec("table", tables), "rate1_table"
    else:
        n = int(rng.integers(2, 4))
        pmf = IntegerPmf.from_mass(range(n), rng.dirichlet(np.ones(n)))
        src, enc, label = SourceSpec.iid(pmf), EncoderSpec("identity"), f"iid{n}"
    n_in = 2 if k % 2 else len(src.pmf.support)
    ch = random_channel(rng, n_in, int(rng.integers(2, 4)))
    inst = TrackingInstance(src, ch, enc, t)
    rho = float(rng.uniform(0.2, 3.0))
    state = e0_from_joint(exact_joint(inst, t, "current_state"), rho)
    inputs = e0_from_joint(exact_joint(inst, t, "full_input_sequence"), rho)
    return inputs - state, {"source": label, "channel": ch.matrix.tolist(), "t": t, "rho": rho}


def _histories(t):
    """All rate-1 state histories (s_1, ..., s_t) with s_{u+1} = 2 s_u + w."""
    hists = [(w,) for w in (0, 1)]
    for _ in range(t - 1):
        hists = [h + (2 * h[-1] + w,) for h in hists for w in (0, 1)]
    return hists


def _map_metric(rng, k):
    j = _small_joint(rng)
    rho, s = ((1.0, 2.0), (2.0, 1.5))[k % 2]
    power = 1 + (k // 2) % 2
    bound = map_error_bound(j, rho, s, power)
    err = error_moment_exact(j, EstimatorPolicy("map"), power)
    return bound - err, {"joint": _joint_json(j), "rho": rho, "s": s, "metric_power": power}


def _map_sufficient(rng, k):
    j = _small_joint(rng)
    m = 1 + k % 2
    s = (1.5, 2.0, 3.0)[(k // 2) % 3]
    bound = riemann_zeta(s) * sufficient_map_value(j, m, s)
    err = error_moment_exact(j, EstimatorPolicy("map"), m)
    return bound - err, {"joint": _joint_json(j), "m": m, "s": s}


def _rho_orderings(rng, k):
    j = _small_joint(rng)
    m = 1 + k % 2
    s = (1.1, 1.5, 2.0)[(k // 2) % 3]
    p = (1.5, 2.0, 3.0)[(k // 6) % 3]
    res = sufficient_rho_value(j, m, p, s)
    z = riemann_zeta(s)
    err = error_moment_exact(j, EstimatorPolicy("rho", rho=res.rho), m)
    slack = min(z * res.pre_holder - err, z * res.value - z * res.pre_holder)
    return slack, {"joint": _joint_json(j), "m": m, "p": p, "s": s}


def _jensen(rng, k):
    ch = random_channel(rng, int(rng.integers(2, 5)), int(rng.integers(2, 5)))
    p = IntegerPmf.from_mass(ch.input_alphabet, rng.dirichlet(np.ones(len(ch.input_alphabet))))
    j = JointDist.from_channel(p, ch)
    rho = float(rng.uniform(0.1, 4.0))
    rep = jensen_chain_check(j, rho)
    return rep.slack, {"joint": _joint_json(j), "rho": rho}


PROPERTIES = (
    Property("bounded_support_moment", 1e-9, _bounded_support),
    Property("zeta_moment", 1e-9, _zeta_moment),
    Property("conditional_moment_entropy", 1e-9, _conditional_moment_entropy),
    Property("quantization_chain", 1e-10, _quantization),
    Property("reverse_holder", 1e-9, _reverse_holder),
    Property("necessary_tracked_instances", 1e-9, _necessary_tracked),
    Property("necessary_channel_monotone", 1e-9, _necessary_monotone),
    Property("e0_form_equivalence", 1e-10, _e0_forms),
    Property("e0_maximizer_optimality", 1e-9, _e0_optimality),
    Property("e0_single_letterization", 1e-9, _single_letter),
    Property("e0_data_processing", 1e-9, _data_processing),
    Property("map_metric_bound", 1e-12, _map_metric),
    Property("map_sufficient_value", 1e-12, _map_sufficient),
    Property("rho_estimator_orderings", 1e-10, _rho_orderings),
    Property("jensen_chain", 1e-10, _jensen),
)


def run_property(prop: Property, seed: SeedSpec, n: int, check=None) -> PropertyResult:
    check = check or prop.check
    worst = math.inf
    failures = 0
    repros = []
    for k in range(n):
        rng = seed.child(k).generator()
        slack, repro = check(rng, k)
        worst = min(worst, slack)
        if not slack >= -prop.tolerance:  # NaN counts as a failure
            failures += 1
            repros.append({"property": prop.name, "instance": k, "slack": slack, "tolerance": prop.tolerance,
                           "seed": [seed.master_seed, seed.stream_index], **repro})
    return PropertyResult(prop.name, n, failures, worst, prop.tolerance, repros)


def verify_suite(seed=0, intensity: str = "quick", out_dir=None, mutate: str | None = None,
                 only=None, progress=None) -> VerifyResult:
    """Run every property; write ``verify-table.csv`` and repro files when ``out_dir`` is set.

    ``mutate="bounded_support"`` flips the orientation of the bounded-support moment
    bound, a self-test that the suite notices a wrong inequality.
    """
    if intensity not in INTENSITY:
        raise ValueError(f"intensity must be one of {sorted(INTENSITY)}")
    if mutate not in (None, "bounded_support"):
        raise ValueError("the only supported mutation is 'bounded_support'")
    base = as_seed(seed)
    n = INTENSITY[intensity]
    results = []
    for idx, prop in enumerate(PROPERTIES):
        if only is not None and prop.name not in only:
            continue
        check = None
        if mutate == "bounded_support" and prop.check is _bounded_support:
            def check(rng, k):
                return _bounded_support(rng, k, invert=True)
        res = run_property(prop, base.child(idx), n, check)
        results.append(res)
        if progress is not None:
            progress(res)
    result = VerifyResult(results, base, intensity)
    if out_dir is not None:
        write_outputs(result, Path(out_dir))
    return result


def write_outputs(result: VerifyResult, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "verify-table.csv"]
    paths[0].write_text(result.table_csv())
    for res in result.results:
        for rep in res.repros:
            path = out / f"repro-{res.name}-{rep['instance']}.json"
            path.write_text(dumps(rep) + "\n")
            paths.append(path)
    return paths
