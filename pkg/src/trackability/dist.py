"""Finite integer-supported laws, joint laws over observation histories, Rényi entropy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Sequence

import numpy as np

from .numerics import NEG_INF, log_sum_exp

MASS_TOL = 1e-12


class TruncatedLawError(ValueError):
    """Raised when an operation needs the full law but only a truncation is held."""


@dataclass(frozen=True, eq=False)
class IntegerPmf:
    """Probability mass over a finite set of integers, held as log-masses.

    Zero-mass atoms are never stored. ``truncated_tail_mass`` records mass that
    was dropped when an unbounded law was cut to a finite window.
    """

    support: np.ndarray
    logmass: np.ndarray
    truncated_tail_mass: float = 0.0

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.int64)
        logmass = np.asarray(self.logmass, dtype=float)
        if support.ndim != 1 or support.shape != logmass.shape:
            raise ValueError("support and logmass must be parallel 1-d arrays")
        if support.size == 0:
            raise ValueError("pmf with empty support")
        if np.any(np.diff(support) <= 0):
            raise ValueError("support must be strictly increasing")
        if np.any(~np.isfinite(logmass)) or np.any(logmass > 1e-15):
            raise ValueError("stored log-masses must be finite and <= 0")
        if self.truncated_tail_mass < 0:
            raise ValueError("truncated_tail_mass must be >= 0")
        total = float(np.exp(log_sum_exp(logmass))) + self.truncated_tail_mass
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"pmf mass sums to {total!r}, not 1")
        support.setflags(write=False)
        logmass.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "logmass", logmass)

    @classmethod
    def from_mass(cls, support, mass, truncated_tail_mass=0.0, normalize=False):
        """Build from linear-domain masses; duplicates are merged, zeros dropped."""
        support = np.asarray(support, dtype=np.int64)
        mass = np.asarray(mass, dtype=float)
        if support.shape != mass.shape:
            raise ValueError("support and mass must have the same length")
        if np.any(mass < 0) or not np.all(np.isfinite(mass)):
            raise ValueError("masses must be finite and non-negative")
        uniq, inv = np.unique(support, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inv, mass)
        if normalize:
            merged = merged / merged.sum() * (1.0 - truncated_tail_mass)
        keep = merged > 0
        with np.errstate(divide="ignore"):
            return cls(uniq[keep], np.log(merged[keep]), truncated_tail_mass)

    @classmethod
    def from_logmass(cls, support, logmass, normalize=False):
        support = np.asarray(support, dtype=np.int64)
        logmass = np.asarray(logmass, dtype=float)
        keep = np.isfinite(logmass)
        support, logmass = support[keep], logmass[keep]
        order = np.argsort(support, kind="stable")
        support, logmass = support[order], logmass[order]
        if normalize:
            logmass = logmass - log_sum_exp(logmass)
        return cls(support, logmass)

    @classmethod
    def point_mass(cls, value: int):
        return cls(np.array([value]), np.array([0.0]))

    @classmethod
    def uniform(cls, values):
        values = np.unique(np.asarray(values, dtype=np.int64))
        return cls(values, np.full(values.size, -math.log(values.size)))

    @property
    def mass(self) -> np.ndarray:
        return np.exp(self.logmass)

    @property
    def m_minus(self) -> int:
        return int(-self.support[0])

    @property
    def m_plus(self) -> int:
        return int(self.support[-1])

    def __len__(self):
        return int(self.support.size)

    def prob(self, x: int) -> float:
        i = np.searchsorted(self.support, x)
        if i < self.support.size and self.support[i] == x:
            return float(np.exp(self.logmass[i]))
        return 0.0

    def moment(self, power: float) -> float:
        """E|X|^power, with 0^0 = 1."""
        return float(np.sum(self.mass * np.abs(self.support.astype(float)) ** power))

    def to_json(self) -> dict:
        out = {"support": [int(v) for v in self.support], "mass": [float(v) for v in self.mass]}
        if self.truncated_tail_mass:
            out["truncated_tail_mass"] = float(self.truncated_tail_mass)
        return out

    @classmethod
    def from_json(cls, obj: dict):
        return cls.from_mass(obj["support"], obj["mass"], obj.get("truncated_tail_mass", 0.0))

    def __repr__(self):
        pairs = ", ".join(f"{s}: {m:.6g}" for s, m in zip(self.support, self.mass))
        return f"IntegerPmf({{{pairs}}})"


def renyi_entropy(p: IntegerPmf, alpha: float, allow_truncated: bool = False) -> float:
    """Rényi entropy of order ``alpha`` in nats.

    Orders 0, 1 and infinity use their closed forms (Hartley, Shannon,
    min-entropy). Truncated laws are rejected unless ``allow_truncated``; in
    that case the retained atoms are renormalized first.
    """
    if alpha < 0 or math.isnan(alpha):
        raise ValueError(f"Rényi order must be >= 0, got {alpha}")
    logp = p.logmass
    if p.truncated_tail_mass > 0:
        if not allow_truncated:
            raise TruncatedLawError("Rényi entropy of a truncated law is not determined by its retained atoms")
        logp = logp - log_sum_exp(logp)
    return renyi_from_log(logp, alpha)


def renyi_from_log(logp, alpha: float) -> float:
    """Rényi entropy from an array of log-masses (zero atoms given as -inf)."""
    logp = np.asarray(logp, dtype=float)
    logp = logp[np.isfinite(logp)]
    if alpha == 0:
        return math.log(logp.size)
    if alpha == 1:
        return float(-np.sum(np.exp(logp) * logp))
    if math.isinf(alpha):
        return float(-np.max(logp))
    d = alpha - 1.0
    if abs(d) < 0.25:
        # log sum p^alpha = log1p(E[expm1(d log p)]); every term has the same sign, so no cancellation near 1
        return -math.log1p(float(np.sum(np.exp(logp) * np.expm1(d * logp)))) / d
    return log_sum_exp(alpha * logp) / (1.0 - alpha)


def renyi_order_for(rho: float, q: float) -> float:
    """The entropy order (q-1)/(q-rho-1) paired with moment parameters (rho, q)."""
    if not q > rho + 1:
        raise ValueError(f"need q > rho + 1, got rho={rho}, q={q}")
    return (q - 1.0) / (q - rho - 1.0)


ObservationLabel = tuple  # (y_1, ..., y_t)


@dataclass(frozen=True, eq=False)
class JointDist:
    """Exact joint law of a state ``X`` and an observation history ``Y``.

    ``logmass[i, j]`` is ``log P(x_support[i], y_support[j])``. X labels are
    integers for state joints and tuples for input-sequence joints; Y labels are
    tuples, kept in lexicographic order by the constructors in ``process``.
    """

    x_support: tuple
    y_support: tuple
    logmass: np.ndarray
    _x_index: dict = field(init=False, repr=False)
    _y_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        lm = np.asarray(self.logmass, dtype=float)
        if lm.shape != (len(self.x_support), len(self.y_support)):
            raise ValueError(f"logmass shape {lm.shape} does not match supports")
        if np.isnan(lm).any() or (lm > 1e-15).any():
            raise ValueError("joint log-masses must be <= 0 and not NaN")
        total = float(np.exp(log_sum_exp(lm)))
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"joint mass sums to {total!r}, not 1")
        lm.setflags(write=False)
        object.__setattr__(self, "x_support", tuple(self.x_support))
        object.__setattr__(self, "y_support", tuple(self.y_support))
        object.__setattr__(self, "logmass", lm)
        object.__setattr__(self, "_x_index", {x: i for i, x in enumerate(self.x_support)})
        object.__setattr__(self, "_y_index", {y: j for j, y in enumerate(self.y_support)})
        if len(self._x_index) != len(self.x_support) or len(self._y_index) != len(self.y_support):
            raise ValueError("duplicate labels in joint supports")

    @classmethod
    def from_mass(cls, x_support: Sequence[Hashable], y_support: Sequence[Hashable], mass, normalize=False):
        mass = np.asarray(mass, dtype=float)
        if np.any(mass < 0):
            raise ValueError("negative joint mass")
        if normalize:
            mass = mass / mass.sum()
        with np.errstate(divide="ignore"):
            return cls(tuple(x_support), tuple(y_support), np.log(mass))

    @classmethod
    def product(cls, px: IntegerPmf, py_labels: Sequence[Hashable], py_mass):
        """Independent joint of ``px`` and a law over observation labels."""
        with np.errstate(divide="ignore"):
            ly = np.log(np.asarray(py_mass, dtype=float))
        return cls(tuple(int(v) for v in px.support), tuple(py_labels), px.logmass[:, None] + ly[None, :])

    @classmethod
    def from_channel(cls, input_pmf: IntegerPmf, channel) -> "JointDist":
        """Single-use joint of an input law and a ``ChannelSpec``; Y labels are 1-tuples."""
        rows = [channel.input_alphabet.index(int(x)) for x in input_pmf.support]
        lm = input_pmf.logmass[:, None] + channel.log_transition[rows, :]
        ys = tuple((int(y),) for y in channel.output_alphabet)
        keep = np.isfinite(lm).any(axis=0)
        return cls(tuple(int(x) for x in input_pmf.support), tuple(y for y, k in zip(ys, keep) if k), lm[:, keep])

    # cached derived quantities; all log domain

    @cached_property
    def log_px(self) -> np.ndarray:
        return log_sum_exp(self.logmass, axis=1)

    @cached_property
    def log_py(self) -> np.ndarray:
        return log_sum_exp(self.logmass, axis=0)

    @cached_property
    def log_cond(self) -> np.ndarray:
        """log P(x | y) as an (x, y) matrix; columns with zero Y-mass are all -inf."""
        with np.errstate(invalid="ignore"):
            out = self.logmass - self.log_py[None, :]
        return np.where(np.isfinite(self.logmass), out, NEG_INF)

    @cached_property
    def info_density(self) -> np.ndarray:
        """i(x; y) on positive-mass atoms, NaN elsewhere."""
        with np.errstate(invalid="ignore"):
            out = self.logmass - self.log_px[:, None] - self.log_py[None, :]
        return np.where(np.isfinite(self.logmass), out, np.nan)

    @cached_property
    def x_values(self) -> np.ndarray:
        """X labels as floats; only meaningful for integer-valued states."""
        if any(not isinstance(x, (int, np.integer)) for x in self.x_support):
            raise TypeError("X labels of this joint are not integers")
        return np.asarray(self.x_support, dtype=float)

    @property
    def positive(self) -> np.ndarray:
        return np.isfinite(self.logmass)

    def x_index(self, x) -> int:
        return self._x_index[x]

    def y_index(self, y) -> int:
        return self._y_index[y]

    def to_json(self) -> dict:
        return {
            "x_support": [_jsonable_label(x) for x in self.x_support],
            "y_support": [_jsonable_label(y) for y in self.y_support],
            "mass": np.exp(self.logmass).tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict):
        return cls.from_mass(
            [_label_from_json(x) for x in obj["x_support"]],
            [_label_from_json(y) for y in obj["y_support"]],
            obj["mass"],
        )


def _jsonable_label(v):
    if isinstance(v, tuple):
        return [_jsonable_label(u) for u in v]
    return int(v)


def _label_from_json(v):
    if isinstance(v, list):
        return tuple(_label_from_json(u) for u in v)
    return int(v)


def marginals(j: JointDist):
    """Exact marginal laws: (IntegerPmf of X, (Y labels, Y masses)).

    The X marginal is only available as an ``IntegerPmf`` when X labels are
    integers; for sequence-valued X the first item is ``(labels, masses)``.
    """
    ly = j.log_py
    keep = np.isfinite(ly)
    py = ([y for y, k in zip(j.y_support, keep) if k], np.exp(ly[keep]))
    try:
        px = IntegerPmf.from_logmass(j.x_values.astype(np.int64), j.log_px)
    except TypeError:
        px = (list(j.x_support), np.exp(j.log_px))
    return px, py


def conditional(j: JointDist, y) -> IntegerPmf:
    """P(X | Y = y) as an IntegerPmf restricted to positive-mass atoms."""
    col = j.y_index(y) if y in j._y_index else None
    if col is None or not np.isfinite(j.log_py[col]):
        raise ValueError(f"observation {y!r} has zero probability")
    return _column_pmf(j, col)


def _column_pmf(j: JointDist, col: int) -> IntegerPmf:
    lc = j.log_cond[:, col]
    keep = np.isfinite(lc)
    support = j.x_values[keep].astype(np.int64)
    logm = lc[keep]
    # renormalize away rounding so the pmf invariant holds to full precision
    return IntegerPmf(support, logm - log_sum_exp(logm))


def information_density(j: JointDist, x, y) -> float:
    """log[P(x, y) / (P(x) P(y))] in nats; undefined on null events."""
    if x not in j._x_index or y not in j._y_index:
        raise ValueError(f"({x!r}, {y!r}) is outside the joint's support")
    i, k = j.x_index(x), j.y_index(y)
    if not np.isfinite(j.logmass[i, k]):
        raise ValueError(f"information density undefined: P({x!r}, {y!r}) = 0")
    return float(j.info_density[i, k])
