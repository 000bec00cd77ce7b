"""Evaluators for the moment-entropy, necessary and sufficient tracking bounds.

Every quantity is evaluated at a finite horizon from an exact joint law. Log
domain is used for anything that multiplies many probabilities; values are
exponentiated once when a report is built.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .dist import IntegerPmf, JointDist, TruncatedLawError, _column_pmf, renyi_entropy, renyi_from_log, renyi_order_for
from .estimate import log_j_value
from .numerics import NEG_INF, SeedSpec, as_seed, log_sum_exp, riemann_zeta  # noqa: F401
from .process import LOG2, ChannelSpec, product_channel

# inner conditional log-expectations are floored here; reports note when it happens
LOG_CLAMP = -700.0
TAIL_TOL = 1e-12
# a boundary verdict tolerates this much negative slack from rounding
VERDICT_TOL = 1e-12


class ParameterError(ValueError):
    """Bound parameters outside their admissible range; ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"BoundParams.{field_name}: {message}")
        self.field = f"BoundParams.{field_name}"


@dataclass(frozen=True)
class BoundParams:
    m: float | None = None
    rho: float | None = None
    q: float | None = None
    p: float | None = None
    s: float | None = None
    metric_power: int | None = None

    @property
    def alpha(self) -> float | None:
        if self.rho is None or self.q is None or not self.q > self.rho + 1:
            return None
        return renyi_order_for(self.rho, self.q)

    def as_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass
class BoundReport:
    """One evaluated inequality; ``slack >= 0`` means it holds as asserted."""

    name: str
    lhs: float
    rhs: float
    slack: float
    params: dict = field(default_factory=dict)
    t: int | None = None
    provenance: str = ""
    reason: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.slack >= -VERDICT_TOL

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "t": self.t,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "params": dict(sorted(self.params.items())),
            "provenance": self.provenance,
            "reason": self.reason,
            "extras": dict(sorted(self.extras.items())),
        }


def _slack(lhs, rhs):
    if math.isinf(lhs) and math.isinf(rhs) and lhs == rhs:
        return 0.0
    return lhs - rhs


def digest(obj) -> str:
    """Short content hash of a pmf, joint, channel or JSON-able object."""
    if hasattr(obj, "to_json"):
        obj = obj.to_json()
    blob = json.dumps(obj, sort_keys=True, default=repr).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# -- moment-entropy inequalities --------------------------------------------------


def lemma1_check(p: IntegerPmf, rho: float) -> BoundReport:
    """E|X|^rho + 1 >= [3 + log(M_- M_+)]^-rho exp(rho H_{1/(1+rho)}(X)).

    M_- and M_+ are the support extents, each padded up to 1 so the logarithm
    is defined for one-sided or degenerate laws.
    """
    if rho < 0:
        raise ParameterError("rho", "must be >= 0")
    if p.truncated_tail_mass > 0:
        raise TruncatedLawError("bounded-support moment bound needs the full law")
    m_minus = max(1, p.m_minus)
    m_plus = max(1, p.m_plus)
    lhs = p.moment(rho) + 1.0
    h = renyi_entropy(p, 1.0 / (1.0 + rho))
    rhs = math.exp(rho * h - rho * math.log(3.0 + math.log(m_minus * m_plus)))
    return BoundReport(
        "bounded_support_moment",
        lhs,
        rhs,
        _slack(lhs, rhs),
        {"rho": rho},
        provenance=digest(p),
        extras={"m_minus": m_minus, "m_plus": m_plus},
    )


def lemma2_check(p: IntegerPmf, m: float, rho: float) -> BoundReport:
    """E|X|^m + 1 >= [1 + 2 zeta(m/rho)]^-rho exp(rho H_{1/(1+rho)}(X)), rho in (0, m)."""
    if not 0 < rho < m:
        raise ParameterError("rho", f"need 0 < rho < m (zeta argument m/rho > 1), got rho={rho}, m={m}")
    reason = ""
    if p.truncated_tail_mass > TAIL_TOL:
        raise TruncatedLawError(f"truncated tail mass {p.truncated_tail_mass:g} exceeds {TAIL_TOL:g}")
    if p.truncated_tail_mass > 0:
        reason = "tail mass below tolerance ignored"
    lhs = p.moment(m) + 1.0
    h = renyi_entropy(p, 1.0 / (1.0 + rho), allow_truncated=True)
    z = riemann_zeta(m / rho)
    rhs = math.exp(rho * h - rho * math.log(1.0 + 2.0 * z))
    return BoundReport(
        "zeta_moment", lhs, rhs, _slack(lhs, rhs), {"m": m, "rho": rho}, provenance=digest(p), reason=reason,
        extras={"zeta": z},
    )


# -- information-density functionals -----------------------------------------------


def _log_inner(j: JointDist, a: float) -> np.ndarray:
    """log E[exp(-a i(X;Y)) | Y = y] for every column, over positive atoms."""
    terms = np.where(j.positive, j.log_cond - a * np.nan_to_num(j.info_density, nan=0.0), NEG_INF)
    return log_sum_exp(terms, axis=0)


def log_power_moment(j: JointDist, a: float, q: float) -> tuple[float, bool]:
    """log E_Y[ E[exp(-a i) | Y]^q ] and whether the floor clamp fired."""
    inner = _log_inner(j, a)
    clamped = bool(np.any(inner < LOG_CLAMP))
    inner = np.maximum(inner, LOG_CLAMP)
    ok = np.isfinite(j.log_py)
    return log_sum_exp(j.log_py[ok] + q * inner[ok]), clamped


def necessary_terms(j: JointDist, rho: float, q: float, t: int) -> tuple[float, float]:
    """Finite-t sides of the entropy necessary condition.

    Returns ``(lhs_t, rhs_t)`` with
    lhs_t = -(1/(rho t)) log E[ E[exp(-(rho/q) i(X_t; Y_{1:t})) | Y_{1:t}]^q ] and
    rhs_t = (1/t) H_{(q-1)/(q-rho-1)}(X_t).
    """
    return necessary_report(j, rho, q, t)[:2]


class NecessaryTerms(NamedTuple):
    lhs: float
    rhs: float
    clamped: bool


def necessary_report(j: JointDist, rho: float, q: float, t: int) -> NecessaryTerms:
    if not rho > 0:
        raise ParameterError("rho", "must be > 0")
    if not q > rho + 1:
        raise ParameterError("q", f"need q > rho + 1, got q={q}, rho={rho}")
    if t < 1:
        raise ValueError("t must be >= 1")
    val, clamped = log_power_moment(j, rho / q, q)
    lhs = -val / (rho * t)
    rhs = renyi_from_log(j.log_px, renyi_order_for(rho, q)) / t
    return NecessaryTerms(lhs, rhs, clamped)


def e0_from_joint(j: JointDist, rho: float) -> float:
    """Gallager's E0 of the joint's induced channel P(Y|X) at input law P_X.

    Computed through the information density:
    -log E[ E[exp(-(rho/(1+rho)) i(X;Y)) | Y]^(1+rho) ].
    """
    val, _ = log_power_moment(j, rho / (1.0 + rho), 1.0 + rho)
    return -val


def gallager_e0(ch: ChannelSpec, input_pmf: IntegerPmf, rho: float, form: str = "sum") -> float:
    """E0(rho, P_{Y|X}, P_X) by the output-sum formula or the information-density form."""
    if rho < 0:
        raise ParameterError("rho", "must be >= 0")
    bad = [int(x) for x in input_pmf.support if int(x) not in ch.input_alphabet]
    if bad:
        raise ValueError(f"input law puts mass on {bad}, outside the channel alphabet")
    if form == "density":
        return e0_from_joint(JointDist.from_channel(input_pmf, ch), rho)
    if form != "sum":
        raise ValueError(f"unknown E0 form {form!r}")
    rows = [ch.row(x) for x in input_pmf.support]
    inner = log_sum_exp(input_pmf.logmass[:, None] + ch.log_transition[rows, :] / (1.0 + rho), axis=0)
    return -log_sum_exp((1.0 + rho) * inner[np.isfinite(inner)])


class E0ConvergenceError(RuntimeError):
    def __init__(self, best: IntegerPmf, value: float, residual: float):
        super().__init__(f"E0 maximization did not converge (gap bound {residual:.3g}, best value {value!r})")
        self.best = best
        self.value = value
        self.residual = residual


def _e0_ascent(b: np.ndarray, rho: float, p: np.ndarray, tol: float, max_iter: int):
    """Multiplicative fixed-point iteration minimizing F(P) = sum_y (P B)_y^(1+rho).

    The basic step is P <- P (g/F)^(-1/rho), g = B (P B)^rho. Longer steps
    (exponent scaled by 2, 4, ...) are taken only when they lower F further.
    Stops when E0 changes by less than ``tol`` between steps or the gap bound
    falls below ``tol``. Returns (P, E0, gap bound, converged); the bound comes from convexity of F:
    the linearization at P, minimized over the simplex, bounds F* below by
    F - (1+rho)(F - min_x g(x)).
    """

    def objective(q):
        return float(np.sum((q @ b) ** (1.0 + rho)))

    def step(q, g, f, omega):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            logu = np.where(q > 0, np.log(q) - (omega / rho) * np.log(g / f), -np.inf)
        logu -= logu.max()
        u = np.exp(logu)
        return u / u.sum()

    value, gap = -math.inf, math.inf
    for _ in range(max_iter):
        a = p @ b
        f = float(np.sum(a ** (1.0 + rho)))
        g = b @ a**rho
        value = -math.log(f)
        low = f - (1.0 + rho) * (f - float(g.min()))
        gap = math.log(f) - math.log(low) if low > 0 else math.inf
        if gap <= tol:
            return p, value, gap, True
        cand = step(p, g, f, 1.0)
        fc = objective(cand)
        omega = 2.0
        while omega <= 256.0:
            trial = step(p, g, f, omega)
            ft = objective(trial)
            if not ft < fc:
                break
            cand, fc = trial, ft
            omega *= 2.0
        if not fc < f:
            return p, value, gap, True  # no progress left at double precision
        p = cand
        if math.log(f) - math.log(fc) < tol:
            value = -math.log(fc)
            return p, value, gap, True
    return p, value, gap, gap <= tol


def _e0_polish(b: np.ndarray, rho: float, p: np.ndarray, max_iter: int = 60) -> np.ndarray:
    """Active-set Newton steps on F(P) = sum_y (P B)_y^(1+rho) over the simplex.

    The support is the set of positive coordinates plus the input whose
    gradient most undercuts the mean (a coordinate the multiplicative update
    can never revive). Each step solves the equality-constrained Newton system
    on the support, stops at the simplex boundary and backtracks until F falls.
    Returns the best point seen.
    """
    best_p, best_f = p, float(np.sum((p @ b) ** (1.0 + rho)))
    for _ in range(max_iter):
        a = p @ b
        f = float(np.sum(a ** (1.0 + rho)))
        if f < best_f:
            best_p, best_f = p, f
        live = a > 0
        g = b[:, live] @ a[live] ** rho
        # negligible coordinates with a gradient above the mean belong off the support
        p = np.where((p < 1e-8) & (g > f), 0.0, p)
        p /= p.sum()
        active = p > 0
        outside = np.flatnonzero(~active & (g < f * (1.0 - 1e-12)))
        if outside.size:
            active[outside[np.argmin(g[outside])]] = True
        idx = np.flatnonzero(active)
        bs = b[np.ix_(idx, np.flatnonzero(live))]
        h = rho * (bs * a[live] ** (rho - 1.0)) @ bs.T
        k = idx.size
        kkt = np.zeros((k + 1, k + 1))
        kkt[:k, :k] = h
        kkt[:k, k] = kkt[k, :k] = 1.0
        rhs = np.concatenate([-g[idx], [0.0]])
        d = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:k]
        neg = d < 0
        limit = float(np.min(-p[idx][neg] / d[neg])) if neg.any() else math.inf
        step = min(1.0, limit)
        improved = False
        for _ in range(40):
            trial = p.copy()
            trial[idx] = p[idx] + step * d
            if step == limit:
                trial[idx[neg][np.argmin(-p[idx][neg] / d[neg])]] = 0.0
            trial = np.clip(trial, 0.0, None)
            trial /= trial.sum()
            ft = float(np.sum((trial @ b) ** (1.0 + rho)))
            if ft < f or (step == limit and ft <= f):
                p, f, improved = trial, ft, True
                break
            step *= 0.5
        if not improved:
            break
    if float(np.sum((p @ b) ** (1.0 + rho))) < best_f:
        return p
    return best_p


def e0_maximize(
    ch: ChannelSpec,
    rho: float,
    seed=0,
    starts: int = 5,
    tol: float = 1e-10,
    max_iter: int = 10_000,
) -> tuple[IntegerPmf, float]:
    """Maximize E0(rho, P_{Y|X}, P_X) over input laws.

    Multi-start: the uniform law plus ``starts - 1`` seeded Dirichlet draws.
    A run stops when successive values differ by less than ``tol`` or its
    convexity gap bound drops below ``tol``. If no run converges within
    ``max_iter`` steps, ``E0ConvergenceError`` carries the best iterate and
    its gap bound as the residual.
    """
    if not rho > 0:
        raise ParameterError("rho", "must be > 0")
    b = np.exp(ch.log_transition / (1.0 + rho))
    n = b.shape[0]
    base = as_seed(seed)
    inits = [np.full(n, 1.0 / n)]
    for k in range(1, starts):
        inits.append(base.child(k).generator().dirichlet(np.ones(n)))
    best = None
    for p0 in inits:
        p, value, gap, ok = _e0_ascent(b, rho, p0, tol, max_iter)
        if best is None or value > best[1] + 1e-14:
            best = (p, value, gap, ok)
    p, value, gap, ok = best
    p = _e0_polish(b, rho, p)
    value = -math.log(float(np.sum((p @ b) ** (1.0 + rho))))
    pmf = IntegerPmf.from_mass(ch.input_alphabet, p, normalize=True)
    if not ok:
        raise E0ConvergenceError(pmf, value, gap)
    return pmf, value


def multi_use_e0(ch: ChannelSpec, t: int, input_mass: np.ndarray, rho: float) -> float:
    """E0 of the t-fold memoryless extension at a law over input t-tuples.

    ``input_mass`` is indexed by the mixed-radix code of ``product_channel``.
    """
    big = product_channel(ch, t)
    pmf = IntegerPmf.from_mass(np.arange(len(big.input_alphabet)), input_mass, normalize=True)
    return gallager_e0(big, pmf, rho)


def product_input(pmf_mass: np.ndarray, t: int) -> np.ndarray:
    out = np.asarray(pmf_mass, dtype=float)
    for _ in range(t - 1):
        out = np.outer(out, pmf_mass).ravel()
    return out


def anytime_bound_check(rate: int, m: float, ch: ChannelSpec, seed=0) -> BoundReport:
    """Whether R log 2 <= E0(m)/m, the channel-side requirement for order-m tracking of a rate-R source."""
    if not (isinstance(rate, (int, np.integer)) and rate >= 1):
        raise ParameterError("rate", "must be a positive integer")
    if not m > 0:
        raise ParameterError("m", "must be > 0")
    pmf, e0 = e0_maximize(ch, m, seed=seed)
    lhs = e0 / m
    rhs = rate * LOG2
    slack = _slack(lhs, rhs)
    verdict = "holds" if slack >= -VERDICT_TOL else "violated"
    return BoundReport(
        "anytime_bound",
        lhs,
        rhs,
        slack,
        {"m": m, "rate": rate},
        provenance=digest(ch),
        reason=verdict,
        extras={"e0": e0, "input": pmf.mass.tolist()},
    )


def gartner_ellis_value(j: JointDist, rho: float, t: int) -> float:
    """(1/(rho t)) log E[exp(rho i(X_{1:t}; Y_{1:t}))] over positive atoms."""
    if not rho > 0:
        raise ParameterError("rho", "must be > 0")
    terms = np.where(j.positive, j.logmass + rho * np.nan_to_num(j.info_density, nan=0.0), NEG_INF)
    return log_sum_exp(terms) / (rho * t)


def jensen_chain_check(j: JointDist, rho: float) -> BoundReport:
    """E[E[e^{-(rho/(1+rho)) i}|Y]^{1+rho}]^{-1} <= E[E[e^{rho i}|Y]^{-1}]^{-1} <= E[e^{rho i}].

    lhs/rhs are the outer two terms; the middle one is in ``extras``.
    """
    if not rho > 0:
        raise ParameterError("rho", "must be > 0")
    log_lhs, _ = log_power_moment(j, rho / (1.0 + rho), 1.0 + rho)
    log_lhs = -log_lhs
    inner_up = log_sum_exp(
        np.where(j.positive, j.log_cond + rho * np.nan_to_num(j.info_density, nan=0.0), NEG_INF), axis=0
    )
    ok = np.isfinite(j.log_py)
    log_mid = -log_sum_exp(j.log_py[ok] - inner_up[ok])
    log_rhs = log_sum_exp(j.log_py[ok] + inner_up[ok])
    lhs, mid, rhs = math.exp(log_lhs), math.exp(log_mid), math.exp(log_rhs)
    slack = min(mid - lhs, rhs - mid)
    return BoundReport(
        "jensen_chain", lhs, rhs, slack, {"rho": rho}, provenance=digest(j), extras={"middle": mid}
    )


def reverse_holder_check(j: JointDist, rho: float, p: float) -> BoundReport:
    """Per-observation reverse Hölder step splitting the conditional Rényi power.

    For every y,
    E[P(X|y)^{-rho/(rho+1)}|y]^{rho+1}
      >= E[e^{-rho i/(p(rho+1))}|y]^{p(rho+1)} E[P_X(X)^{rho/((p-1)(rho+1))}|y]^{(1-p)(rho+1)}.
    Reported at the worst y, compared in log domain.
    """
    if not rho > 0:
        raise ParameterError("rho", "must be > 0")
    if not p > 1:
        raise ParameterError("p", "must be > 1")
    a = rho / (rho + 1.0)
    pos = j.positive
    ok = np.isfinite(j.log_py)
    pos = pos[:, ok]
    lc = np.where(pos, j.log_cond[:, ok], 0.0)
    left = (rho + 1.0) * log_sum_exp(np.where(pos, (1.0 - a) * lc, NEG_INF), axis=0)
    r1 = p * (rho + 1.0) * _log_inner(j, rho / (p * (rho + 1.0)))[ok]
    b = rho / ((p - 1.0) * (rho + 1.0))
    r2 = (1.0 - p) * (rho + 1.0) * log_sum_exp(np.where(pos, lc + b * j.log_px[:, None], NEG_INF), axis=0)
    diff = left - (r1 + r2)
    k = int(np.argmin(diff))
    return BoundReport(
        "reverse_holder",
        float(left[k]),
        float((r1 + r2)[k]),
        float(diff[k]),
        {"rho": rho, "p": p},
        provenance=digest(j),
        reason="log domain, worst observation",
    )


def quantization_chain_check(j: JointDist, estimate: np.ndarray, m: float) -> BoundReport:
    """Rounding a real estimator up to an integer costs at most one unit of error.

    ``estimate[k]`` is the real estimate for observation column k. For m > 1 the
    comparison is in L^m norm, (E|X - ceil f|^m)^{1/m} <= (E|X - f|^m)^{1/m} + 1;
    for m <= 1 it is E|X - ceil f|^m <= E|X - f|^m + 1.
    """
    if not m > 0:
        raise ParameterError("m", "must be > 0")
    f = np.asarray(estimate, dtype=float)
    mass = np.where(j.positive, np.exp(j.logmass), 0.0)
    x = j.x_values.astype(float)[:, None]
    real_err = float(np.sum(mass * np.abs(x - f[None, :]) ** m))
    int_err = float(np.sum(mass * np.abs(x - np.ceil(f)[None, :]) ** m))
    if m > 1:
        lhs, rhs = real_err ** (1.0 / m) + 1.0, int_err ** (1.0 / m)
    else:
        lhs, rhs = real_err + 1.0, int_err
    return BoundReport(
        "quantization_chain", lhs, rhs, _slack(lhs, rhs), {"m": m}, provenance=digest(j),
        extras={"real_error": real_err, "integer_error": int_err},
    )


# -- sufficient conditions ----------------------------------------------------------


def _cond_matrix(j: JointDist) -> np.ndarray:
    return np.where(j.positive, np.exp(j.log_cond), 0.0)


def map_error_bound(j: JointDist, rho: float, s: float, metric_power: int = 1) -> float:
    """Upper bound on E d(X, MAP estimate) for d(x, x') = |x - x'|^metric_power.

    zeta(s) sum_y P(y) sum_x P(x|y)^{1/(rho+1)} [sum_x' P(x'|y)^{1/(rho+1)} d(x,x')^{s/rho}]^rho
    """
    if not rho > 0:
        raise ParameterError("rho", "must be > 0")
    if not s > 1:
        raise ParameterError("s", "zeta(s) diverges for s <= 1")
    if int(metric_power) != metric_power or metric_power < 1:
        raise ParameterError("metric_power", "must be a positive integer")
    x = j.x_values
    a = _cond_matrix(j) ** (1.0 / (rho + 1.0))
    d = np.abs(x[:, None] - x[None, :]) ** (metric_power * s / rho)
    inner = (d @ a) ** rho
    per_y = np.sum(a * inner, axis=0)
    return riemann_zeta(s) * float(np.dot(np.exp(j.log_py), per_y))


def sufficient_map_value(j: JointDist, m: int, s: float) -> float:
    """E[ tau(X, Y)^m P(X|Y)^{-m/(m+1)} ] with tau(x, y) = E[P(X|Y)^{-m/(m+1)} |X - x|^s | Y = y].

    zeta(s) times this bounds the MAP m-th moment error.
    """
    _check_m(m)
    if not s > 1:
        raise ParameterError("s", "must be > 1")
    x = j.x_values
    a = _cond_matrix(j) ** (1.0 / (m + 1.0))
    tau = (np.abs(x[:, None] - x[None, :]) ** s) @ a
    per_y = np.sum(a * tau**m, axis=0)
    return float(np.dot(np.exp(j.log_py), per_y))


def _check_m(m):
    if int(m) != m or m < 1:
        raise ParameterError("m", "must be a positive integer")


class RhoSufficiency(NamedTuple):
    value: float  # Hölder-split form, finite sup over t means trackable
    pre_holder: float  # E[(1/J) E[P^{-m/(m+1)} | Y]^{m+1}]
    rho: float  # estimator order s m (m+1)


def sufficient_rho_value(j: JointDist, m: int, p: float, s: float) -> RhoSufficiency:
    """Sufficient-condition functional for the rho-estimator with rho = s m (m+1).

    ``value`` = E[K^{p(m+1)}]^{1/p} E[J^{p/(1-p)}]^{(p-1)/p} where
    K = E[P(X|Y)^{-m/(m+1)} | Y]; ``pre_holder`` is E[K^{m+1} / J], which Hölder
    bounds by ``value``. J = +inf contributes 0; J = 0 with positive weight
    yields +inf.
    """
    _check_m(m)
    if not p > 1:
        raise ParameterError("p", "must be > 1")
    if not s > 1:
        raise ParameterError("s", "must be > 1")
    rho = s * m * (m + 1)
    cols = np.flatnonzero(np.isfinite(j.log_py))
    log_py = j.log_py[cols]
    log_k = log_sum_exp(np.where(j.positive, j.log_cond / (m + 1.0), NEG_INF), axis=0)[cols]
    log_j = np.array([log_j_value(_column_pmf(j, c), rho)[0] for c in cols])
    with np.errstate(invalid="ignore"):
        pre = log_sum_exp(np.where(np.isposinf(log_j), NEG_INF, log_py - log_j + (m + 1) * log_k))
        first = log_sum_exp(log_py + p * (m + 1) * log_k) / p
        expo = p / (1.0 - p)
        second_terms = np.where(np.isposinf(log_j), NEG_INF, log_py + expo * log_j)
    second = log_sum_exp(second_terms) * (p - 1.0) / p
    value = math.exp(first + second) if second > NEG_INF else 0.0
    return RhoSufficiency(value, math.exp(pre) if pre > NEG_INF else 0.0, rho)


# -- instance generators shared by tests and the verification suite ------------------


def random_joint(rng: np.random.Generator, nx: int, ny: int, sparsity: float = 0.0, spread: int = 6) -> JointDist:
    """Random joint over distinct integer states in [-spread, spread] and ``ny`` observations."""
    xs = np.sort(rng.choice(np.arange(-spread, spread + 1), size=nx, replace=False))
    mass = rng.dirichlet(np.ones(nx * ny)).reshape(nx, ny)
    if sparsity > 0:
        mask = rng.random((nx, ny)) < sparsity
        mask.flat[int(rng.integers(nx * ny))] = False
        mass = np.where(mask, 0.0, mass)
    return JointDist.from_mass([int(v) for v in xs], [(k,) for k in range(ny)], mass, normalize=True)


def random_channel(rng: np.random.Generator, n_in: int, n_out: int) -> ChannelSpec:
    return ChannelSpec.from_matrix(rng.dirichlet(np.ones(n_out), size=n_in))


__all__ = [
    "BoundParams",
    "BoundReport",
    "E0ConvergenceError",
    "ParameterError",
    "RhoSufficiency",
    "SeedSpec",
    "anytime_bound_check",
    "digest",
    "e0_from_joint",
    "e0_maximize",
    "gallager_e0",
    "gartner_ellis_value",
    "jensen_chain_check",
    "lemma1_check",
    "lemma2_check",
    "map_error_bound",
    "multi_use_e0",
    "necessary_report",
    "necessary_terms",
    "product_input",
    "quantization_chain_check",
    "random_channel",
    "random_joint",
    "reverse_holder_check",
    "sufficient_map_value",
    "sufficient_rho_value",
]
