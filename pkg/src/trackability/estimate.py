"""Estimators of X_t from Y_{1:t} and their error moments.

An estimator here is a function of the conditional law P(X_t | Y_{1:t} = y).
The MAP rule picks the mode; the rho rule picks a point whose mass beats
every competitor by a factor growing like |distance|^rho, maximizing that
factor (the domination constant J).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Mapping

import numpy as np

from .dist import IntegerPmf, JointDist, _column_pmf
from .numerics import as_seed
from .process import DEFAULT_BUDGET, TrackingInstance, exact_joint, sample_batch

# two log-masses closer than this are treated as tied
TIE_TOL = 1e-12
TIE_RULES = ("lowest_value", "uniform")
Z95 = 1.959963984540054


def _check_tie_rule(tie_rule):
    if tie_rule not in TIE_RULES:
        raise ValueError(f"tie_rule must be one of {TIE_RULES}, got {tie_rule!r}")


def _pick(candidates, tie_rule, rng):
    if tie_rule == "lowest_value" or len(candidates) == 1:
        return candidates[0]
    if rng is None:
        raise ValueError("uniform tie breaking needs a random stream")
    if not isinstance(rng, np.random.Generator):
        rng = as_seed(rng).generator()
    return candidates[int(rng.integers(len(candidates)))]


def map_candidates(cond: IntegerPmf) -> list[int]:
    lp = cond.logmass
    return [int(v) for v in cond.support[lp >= lp.max() - TIE_TOL]]


def map_estimate(cond: IntegerPmf, tie_rule: str = "lowest_value", rng=None) -> int:
    """Mode of ``cond``; ties go to the smallest value or a uniform draw."""
    _check_tie_rule(tie_rule)
    return _pick(map_candidates(cond), tie_rule, rng)


def ceiling_quantize(x: float) -> int:
    return math.ceil(x)


def log_j_value(cond: IntegerPmf, rho: float) -> tuple[float, tuple[int, ...]]:
    """log J and the maximizing set A; log J is +inf for a singleton support."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    lp = cond.logmass
    if lp.size == 1:
        return math.inf, (int(cond.support[0]),)
    x = cond.support.astype(float)
    with np.errstate(divide="ignore"):
        logdist = np.log(np.abs(x[:, None] - x[None, :]))
    # score[i, k] = log[cond(x_i) / cond(x_k)] - rho log|x_i - x_k|
    score = lp[:, None] - lp[None, :] - rho * logdist
    np.fill_diagonal(score, np.inf)
    per_x = score.min(axis=1)
    best = float(per_x.max())
    members = tuple(int(v) for v in cond.support[per_x >= best - TIE_TOL * max(1.0, abs(best))])
    return best, members


def j_value(cond: IntegerPmf, rho: float) -> tuple[float, tuple[int, ...]]:
    """Largest domination constant J and the set A of points attaining it.

    A point x belongs to A(c) when cond(x)/cond(x') >= c |x - x'|^rho for
    every x'; J = sup{c : A(c) nonempty}. Zero-mass competitors impose no
    constraint, so a singleton support gives J = +inf.
    """
    logj, members = log_j_value(cond, rho)
    return (math.exp(logj) if logj < 709.0 else math.inf), members


def rho_estimate(cond: IntegerPmf, rho: float, tie_rule: str = "uniform", rng=None) -> int:
    _check_tie_rule(tie_rule)
    return _pick(list(j_value(cond, rho)[1]), tie_rule, rng)


@dataclass(frozen=True)
class EstimatorPolicy:
    """A rule turning P(X_t | y) into an estimate.

    ``kind`` is ``"map"``, ``"rho"``, ``"ceiling"`` (ceiling of ``inner``'s
    estimate) or ``"table"`` (fixed real estimate per observation label).
    ``tie_rule`` defaults to lowest_value for MAP and uniform for rho.
    """

    kind: str = "map"
    rho: float | None = None
    tie_rule: str | None = None
    inner: "EstimatorPolicy | None" = None
    table: Mapping | None = field(default=None, hash=False)

    def __post_init__(self):
        if self.kind not in ("map", "rho", "ceiling", "table"):
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        if self.kind == "rho" and not (self.rho is not None and self.rho > 0):
            raise ValueError("rho estimator needs rho > 0")
        if self.kind == "ceiling" and self.inner is None:
            raise ValueError("ceiling policy needs an inner policy")
        if self.kind == "table" and self.table is None:
            raise ValueError("table policy needs a table")
        if self.tie_rule is not None:
            _check_tie_rule(self.tie_rule)

    @property
    def ties(self) -> str:
        if self.tie_rule is not None:
            return self.tie_rule
        return "uniform" if self.kind == "rho" else "lowest_value"

    @property
    def label(self) -> str:
        if self.kind == "rho":
            return f"rho({self.rho:g})"
        if self.kind == "ceiling":
            return f"ceiling({self.inner.label})"
        return self.kind

    def candidates(self, cond: IntegerPmf, y=None) -> list[tuple[float, float]]:
        """(estimate, weight) pairs; weights average over tie randomness."""
        if self.kind == "table":
            return [(float(self.table[y]), 1.0)]
        if self.kind == "ceiling":
            return [(float(math.ceil(v)), w) for v, w in self.inner.candidates(cond, y)]
        vals = map_candidates(cond) if self.kind == "map" else list(j_value(cond, self.rho)[1])
        if self.ties == "lowest_value":
            return [(float(vals[0]), 1.0)]
        return [(float(v), 1.0 / len(vals)) for v in vals]

    def choose(self, cond: IntegerPmf, y=None, rng=None) -> float:
        cands = self.candidates(cond, y)
        if len(cands) == 1:
            return cands[0][0]
        return _pick([v for v, _ in cands], "uniform", rng)


@dataclass
class ErrorStats:
    """Per-horizon E|X_t - estimate|^m, exact or Monte Carlo."""

    m: float
    method: str
    per_t_moment: dict = field(default_factory=dict)
    half_width: dict = field(default_factory=dict)
    replications: int = 0


def error_moment_exact(j: JointDist, policy: EstimatorPolicy, m: float) -> float:
    """sum_y P(y) sum_x P(x|y) |x - estimate(y)|^m, ties averaged exactly."""
    if m <= 0:
        raise ValueError("moment order m must be positive")
    x = j.x_values
    mass = np.exp(j.logmass)
    total = 0.0
    for col, y in enumerate(j.y_support):
        if not np.isfinite(j.log_py[col]):
            continue
        cond = _column_pmf(j, col)
        for est, w in policy.candidates(cond, y):
            total += w * float(np.dot(mass[:, col], np.abs(x - est) ** m))
    return total


def error_moment_mc(
    instance: TrackingInstance,
    policy: EstimatorPolicy,
    m: float,
    t: int,
    replications: int,
    seed,
    budget: int = DEFAULT_BUDGET,
    confidence: float = 0.95,
) -> tuple[float, float]:
    """Monte Carlo E|S_t - estimate|^m with a normal-approximation half-width.

    Conditionals come from the exact (S_t, Y_{1:t}) joint, so the only
    randomness is in the rollouts and tie draws. Raises ``BudgetExceeded`` when
    the filtering joint is too large.
    """
    if replications < 100:
        raise ValueError("error_moment_mc needs at least 100 replications")
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    j = exact_joint(instance, t, "current_state", budget)
    decisions = []
    for col, y in enumerate(j.y_support):
        cond = _column_pmf(j, col)
        decisions.append(policy.candidates(cond, y))
    rng = as_seed(seed).generator()
    s, _, y = sample_batch(instance, t, replications, rng)
    index = {lab: k for k, lab in enumerate(j.y_support)}
    cols = [index[tuple(row)] for row in y.tolist()]
    est = np.empty(replications)
    for r, col in enumerate(cols):
        cands = decisions[col]
        est[r] = cands[0][0] if len(cands) == 1 else cands[int(rng.integers(len(cands)))][0]
    err = np.abs(s[:, t - 1].astype(float) - est) ** m
    mean = float(err.mean())
    sd = float(err.std(ddof=1))
    z = Z95 if confidence == 0.95 else NormalDist().inv_cdf(0.5 + confidence / 2.0)
    return mean, z * sd / math.sqrt(replications)


def error_profile(
    instance, policy, m, horizons, budget=DEFAULT_BUDGET, mc=None, seed=None, confidence=0.95
) -> ErrorStats:
    """Error moments over ``horizons``; exact unless ``mc`` = replications is given."""
    if mc is None:
        stats = ErrorStats(m, "exact")
        for t in horizons:
            stats.per_t_moment[t] = error_moment_exact(exact_joint(instance, t, "current_state", budget), policy, m)
            stats.half_width[t] = 0.0
        return stats
    stats = ErrorStats(m, "monte_carlo", replications=mc)
    base = as_seed(seed)
    for t in horizons:
        mean, hw = error_moment_mc(instance, policy, m, t, mc, base.child(t), budget, confidence)
        stats.per_t_moment[t] = mean
        stats.half_width[t] = hw
    return stats
