"""Sources, memoryless channels, causal encoders and exact finite-horizon joints."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dist import MASS_TOL, IntegerPmf, JointDist
from .numerics import NEG_INF, as_seed, log_sum_exp

DEFAULT_BUDGET = 10**7
LOG2 = math.log(2.0)


class BudgetExceeded(RuntimeError):
    """An exact enumeration would exceed the configured atom budget."""

    def __init__(self, atoms: int, budget: int, what: str = "joint"):
        super().__init__(f"{what} needs {atoms} atoms, budget is {budget}")
        self.atoms = atoms
        self.budget = budget


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    """Memoryless channel ``P(y | x)`` with integer alphabets."""

    input_alphabet: tuple
    output_alphabet: tuple
    log_transition: np.ndarray
    memoryless: bool = True

    def __post_init__(self):
        lt = np.asarray(self.log_transition, dtype=float)
        ia, oa = tuple(int(v) for v in self.input_alphabet), tuple(int(v) for v in self.output_alphabet)
        if lt.shape != (len(ia), len(oa)):
            raise ValueError(f"transition shape {lt.shape} does not match alphabets ({len(ia)}, {len(oa)})")
        if len(set(ia)) != len(ia) or len(set(oa)) != len(oa):
            raise ValueError("channel alphabets must not repeat symbols")
        if not self.memoryless:
            raise ValueError("only memoryless channels are supported")
        rows = np.exp(log_sum_exp(lt, axis=1))
        if np.any(np.abs(rows - 1.0) > MASS_TOL):
            raise ValueError(f"channel rows must sum to 1, got {rows.tolist()}")
        lt.setflags(write=False)
        object.__setattr__(self, "input_alphabet", ia)
        object.__setattr__(self, "output_alphabet", oa)
        object.__setattr__(self, "log_transition", lt)

    @classmethod
    def from_matrix(cls, matrix, input_alphabet=None, output_alphabet=None):
        w = np.asarray(matrix, dtype=float)
        if w.ndim != 2 or np.any(w < 0):
            raise ValueError("channel matrix must be a 2-d array of non-negative rows")
        ia = range(w.shape[0]) if input_alphabet is None else input_alphabet
        oa = range(w.shape[1]) if output_alphabet is None else output_alphabet
        with np.errstate(divide="ignore"):
            return cls(tuple(ia), tuple(oa), np.log(w))

    @classmethod
    def bsc(cls, p: float):
        return cls.from_matrix([[1 - p, p], [p, 1 - p]])

    @classmethod
    def identity(cls, n: int = 2):
        return cls.from_matrix(np.eye(n))

    @classmethod
    def useless(cls, n_in: int = 2, n_out: int = 2, output=None):
        out = np.full(n_out, 1.0 / n_out) if output is None else np.asarray(output, dtype=float)
        return cls.from_matrix(np.tile(out, (n_in, 1)))

    @property
    def matrix(self) -> np.ndarray:
        return np.exp(self.log_transition)

    def row(self, x: int) -> int:
        try:
            return self.input_alphabet.index(int(x))
        except ValueError:
            raise ValueError(f"channel input {x} not in alphabet {self.input_alphabet}") from None

    def to_json(self) -> dict:
        return {
            "input_alphabet": list(self.input_alphabet),
            "output_alphabet": list(self.output_alphabet),
            "matrix": self.matrix.tolist(),
        }


def product_channel(ch: ChannelSpec, t: int) -> ChannelSpec:
    """The ``t``-fold memoryless extension with mixed-radix coded alphabets.

    Input index ``k`` stands for the tuple of digits of ``k`` in base
    ``|input alphabet|``, most significant digit first.
    """
    lt = ch.log_transition
    out = lt
    for _ in range(t - 1):
        out = (out[:, None, :, None] + lt[None, :, None, :]).reshape(out.shape[0] * lt.shape[0], -1)
    return ChannelSpec(tuple(range(out.shape[0])), tuple(range(out.shape[1])), out)


@dataclass(frozen=True, eq=False)
class SourceSpec:
    """Generative description of the tracked integer process ``S_1, S_2, ...``.

    ``kind`` is one of:

    * ``"rate_r"``: S_0 = 0 and S_{t+1} = 2^R S_t + W_t, W_t uniform on R-bit digits.
    * ``"markov_integer"``: S_0 = ``initial_state``, then ``transition[s]`` gives the next-state law.
    * ``"iid"``: every S_t drawn independently from ``pmf``.

    ``bound_sequence`` optionally maps t to c_t; enumeration checks |S_t| <= c_t.
    """

    kind: str
    rate: int = 1
    transition: Mapping[int, IntegerPmf] | None = None
    initial_state: int = 0
    pmf: IntegerPmf | None = None
    bound_sequence: Mapping[int, float] | None = None

    def __post_init__(self):
        if self.kind == "rate_r":
            if not (isinstance(self.rate, (int, np.integer)) and self.rate >= 1):
                raise ValueError("rate_r source needs a positive integer rate")
        elif self.kind == "markov_integer":
            if not self.transition:
                raise ValueError("markov_integer source needs a transition table")
        elif self.kind == "iid":
            if self.pmf is None:
                raise ValueError("iid source needs a pmf")
        else:
            raise ValueError(f"unknown source kind {self.kind!r}")

    @classmethod
    def rate_r(cls, rate: int, bound_sequence=None):
        return cls("rate_r", rate=rate, bound_sequence=bound_sequence)

    @classmethod
    def iid(cls, pmf: IntegerPmf):
        return cls("iid", pmf=pmf)

    @property
    def start_state(self) -> int:
        return self.initial_state if self.kind == "markov_integer" else 0

    def steps(self, state: int):
        """(next_state, log-probability) pairs from ``state``."""
        if self.kind == "rate_r":
            base = 1 << self.rate
            lp = -self.rate * LOG2
            return [(base * state + w, lp) for w in range(base)]
        if self.kind == "iid":
            return list(zip(self.pmf.support.tolist(), self.pmf.logmass.tolist()))
        try:
            law = self.transition[state]
        except KeyError:
            raise ValueError(f"markov source has no transition from state {state}") from None
        return list(zip(law.support.tolist(), law.logmass.tolist()))

    def state_count_bound(self, t: int) -> int:
        """Upper bound on the number of distinct states at time ``t``."""
        if self.kind == "rate_r":
            return 1 << (self.rate * t)
        if self.kind == "iid":
            return len(self.pmf)
        reach = {self.start_state}
        for _ in range(t):
            reach = {s2 for s in reach for s2, _ in self.steps(s)}
        return len(reach)

    def check_bound(self, t: int, state: int):
        if self.bound_sequence is not None and t in self.bound_sequence:
            c = self.bound_sequence[t]
            if abs(state) > c:
                raise ValueError(f"state {state} at t={t} violates the bound c_t = {c}")


@dataclass(frozen=True, eq=False)
class EncoderSpec:
    """Deterministic causal map from source history to channel input.

    ``kind``:

    * ``"identity"``: x_t = s_t.
    * ``"systematic"``: x_t is the newest R-bit digit of a rate-R source,
      s_t mod 2^R, sent as ``input_alphabet[digit]``.
    * ``"table"``: ``tables[t-1][s_1..s_t]`` gives x_t.
    """

    kind: str = "identity"
    tables: Sequence[Mapping[tuple, int]] | None = None

    def __post_init__(self):
        if self.kind not in ("identity", "systematic", "table"):
            raise ValueError(f"unknown encoder kind {self.kind!r}")
        if self.kind == "table" and not self.tables:
            raise ValueError("table encoder needs per-step lookup tables")

    @property
    def needs_history(self) -> bool:
        return self.kind == "table"

    def encode(self, s_hist: tuple, source: SourceSpec, channel: ChannelSpec) -> int:
        s = s_hist[-1]
        if self.kind == "identity":
            return int(s)
        if self.kind == "systematic":
            digit = s % (1 << source.rate)
            if digit >= len(channel.input_alphabet):
                raise ValueError("systematic encoder needs an input alphabet of at least 2^R symbols")
            return channel.input_alphabet[digit]
        t = len(s_hist)
        if t > len(self.tables):
            raise ValueError(f"encoder table has no entry for t={t}")
        try:
            return int(self.tables[t - 1][tuple(s_hist)])
        except KeyError:
            raise ValueError(f"encoder table at t={t} has no entry for history {s_hist}") from None


@dataclass(frozen=True, eq=False)
class TrackingInstance:
    source: SourceSpec
    channel: ChannelSpec
    encoder: EncoderSpec = field(default_factory=EncoderSpec)
    horizon: int = 1

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.encoder.kind == "systematic" and self.source.kind != "rate_r":
            raise ValueError("the systematic encoder is defined for rate-R sources only")


def rate_r_state_dist(rate: int, t: int, budget: int = DEFAULT_BUDGET) -> IntegerPmf:
    """Exact law of S_t for a rate-R source: uniform on {0, ..., 2^{Rt} - 1}."""
    if rate < 1 or t < 1:
        raise ValueError("rate and t must be positive")
    n = 1 << (rate * t)
    if n > budget:
        raise BudgetExceeded(n, budget, f"rate-{rate} state law at t={t}")
    return IntegerPmf(np.arange(n, dtype=np.int64), np.full(n, -rate * t * LOG2))


def joint_atom_count(instance: TrackingInstance, t: int, target: str = "current_state") -> int:
    n_y = len(instance.channel.output_alphabet) ** t
    if target == "full_input_sequence":
        n_x = len(instance.channel.input_alphabet) ** t
    else:
        n_x = instance.source.state_count_bound(t)
    return n_x * n_y


def exact_joint(
    instance: TrackingInstance,
    t: int,
    target: str = "current_state",
    budget: int = DEFAULT_BUDGET,
) -> JointDist:
    """Joint law of (S_t, Y_{1:t}) or (X_{1:t}, Y_{1:t}) by forward enumeration.

    ``target`` is ``"current_state"`` or ``"full_input_sequence"``. Every
    source path and channel output path is visited; atoms with equal labels
    are merged in log domain.
    """
    if target not in ("current_state", "full_input_sequence"):
        raise ValueError(f"unknown joint target {target!r}")
    if not 1 <= t <= instance.horizon:
        raise ValueError(f"t={t} outside horizon 1..{instance.horizon}")
    atoms = joint_atom_count(instance, t, target)
    if atoms > budget:
        raise BudgetExceeded(atoms, budget, f"{target} joint at t={t}")

    src, ch, enc = instance.source, instance.channel, instance.encoder
    lt = ch.log_transition
    out_syms = ch.output_alphabet
    keep_s_hist = enc.needs_history
    keep_x_hist = target == "full_input_sequence" and not keep_s_hist
    steps_cache: dict = {}

    # key: (state, history memory, y history) -> log-probability
    front = {(src.start_state, (), ()): 0.0}
    for k in range(1, t + 1):
        nxt: dict = {}
        for (s, mem, yh), lp in front.items():
            if s not in steps_cache:
                steps_cache[s] = src.steps(s)
            for s2, lps in steps_cache[s]:
                src.check_bound(k, s2)
                if keep_s_hist:
                    mem2 = mem + (s2,)
                    x = enc.encode(mem2, src, ch)
                else:
                    x = enc.encode((s2,), src, ch)
                    mem2 = mem + (x,) if keep_x_hist else ()
                row = lt[ch.row(x)]
                for j, lpy in enumerate(row):
                    if lpy == NEG_INF:
                        continue
                    key = (s2, mem2, yh + (out_syms[j],))
                    v = lp + lps + lpy
                    old = nxt.get(key)
                    nxt[key] = v if old is None else np.logaddexp(old, v)
        front = nxt

    cells: dict = {}
    for (s, mem, yh), lp in front.items():
        if target == "current_state":
            xl = int(s)
        elif keep_s_hist:
            xl = tuple(enc.encode(mem[:i], src, ch) for i in range(1, len(mem) + 1))
        else:
            xl = mem
        key = (xl, yh)
        old = cells.get(key)
        cells[key] = lp if old is None else np.logaddexp(old, lp)

    xs = sorted({k[0] for k in cells})
    ys = sorted({k[1] for k in cells})
    xi = {x: i for i, x in enumerate(xs)}
    yi = {y: i for i, y in enumerate(ys)}
    lm = np.full((len(xs), len(ys)), NEG_INF)
    for (xl, yh), lp in cells.items():
        lm[xi[xl], yi[yh]] = lp
    return JointDist(tuple(xs), tuple(ys), lm)


def sample_batch(instance: TrackingInstance, t: int, n: int, rng: np.random.Generator):
    """``n`` independent rollouts as (s, x, y) integer arrays of shape (n, t)."""
    if not 1 <= t <= instance.horizon:
        raise ValueError(f"t={t} outside horizon 1..{instance.horizon}")
    src, ch, enc = instance.source, instance.channel, instance.encoder
    s = np.empty((n, t), dtype=np.int64)
    if src.kind == "rate_r":
        base = 1 << src.rate
        w = rng.integers(0, base, size=(n, t))
        prev = np.zeros(n, dtype=np.int64)
        for k in range(t):
            prev = base * prev + w[:, k]
            s[:, k] = prev
    elif src.kind == "iid":
        s[:] = _draw(src.pmf, rng.random((n, t)))
    else:
        prev = np.full(n, src.start_state, dtype=np.int64)
        u = rng.random((n, t))
        for k in range(t):
            cur = np.empty(n, dtype=np.int64)
            for state in np.unique(prev):
                sel = prev == state
                law = src.transition.get(int(state))
                if law is None:
                    raise ValueError(f"markov source has no transition from state {state}")
                cur[sel] = _draw(law, u[sel, k])
            s[:, k] = cur
            prev = cur

    alphabet = np.asarray(ch.input_alphabet, dtype=np.int64)
    if enc.kind == "identity":
        x = s.copy()
    elif enc.kind == "systematic":
        digits = s % (1 << src.rate)
        if digits.size and digits.max() >= alphabet.size:
            raise ValueError("systematic encoder needs an input alphabet of at least 2^R symbols")
        x = alphabet[digits]
    else:
        x = np.array(
            [[enc.encode(tuple(row[: k + 1]), src, ch) for k in range(t)] for row in s.tolist()],
            dtype=np.int64,
        ).reshape(n, t)

    row_of = {v: i for i, v in enumerate(ch.input_alphabet)}
    try:
        rows = np.vectorize(row_of.__getitem__, otypes=[np.int64])(x) if x.size else x
    except KeyError as e:
        raise ValueError(f"channel input {e.args[0]} not in alphabet {ch.input_alphabet}") from None
    cdf = np.cumsum(ch.matrix, axis=1)
    u = rng.random((n, t))
    idx = (u[..., None] >= cdf[rows]).sum(axis=-1)
    idx = np.minimum(idx, len(ch.output_alphabet) - 1)
    y = np.asarray(ch.output_alphabet, dtype=np.int64)[idx]
    return s, x, y


def _draw(pmf: IntegerPmf, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(pmf.mass)
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), len(pmf) - 1)
    return pmf.support[idx]


def sample_trajectory(instance: TrackingInstance, t: int, seed) -> tuple[tuple, tuple, tuple]:
    """One rollout (s_{1:t}, x_{1:t}, y_{1:t}) drawn from ``seed``'s stream."""
    s, x, y = sample_batch(instance, t, 1, as_seed(seed).generator())
    return tuple(s[0].tolist()), tuple(x[0].tolist()), tuple(y[0].tolist())


# -- JSON ingestion -------------------------------------------------------------


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def channel_from_config(obj: Mapping, path: str = "channel") -> ChannelSpec:
    try:
        preset = obj.get("preset")
        if preset == "bsc":
            return ChannelSpec.bsc(float(obj["p"]))
        if preset == "identity":
            return ChannelSpec.identity(int(obj.get("n", 2)))
        if preset == "useless":
            return ChannelSpec.useless(int(obj.get("n_in", 2)), int(obj.get("n_out", 2)))
        if preset is not None:
            raise ConfigError(f"{path}.preset", f"unknown preset {preset!r}")
        return ChannelSpec.from_matrix(obj["matrix"], obj.get("input_alphabet"), obj.get("output_alphabet"))
    except ConfigError:
        raise
    except KeyError as e:
        raise ConfigError(f"{path}.{e.args[0]}", "missing field") from None
    except (TypeError, ValueError) as e:
        raise ConfigError(path, str(e)) from None


def pmf_from_config(obj, path="pmf") -> IntegerPmf:
    try:
        return IntegerPmf.from_json(obj)
    except KeyError as e:
        raise ConfigError(f"{path}.{e.args[0]}", "missing field") from None
    except (TypeError, ValueError) as e:
        raise ConfigError(path, str(e)) from None


def _history_key(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    return tuple(int(v) for v in str(text).split(",") if v.strip() != "")


def instance_from_config(obj: Mapping, path: str = "instance") -> TrackingInstance:
    """Build a ``TrackingInstance`` from its JSON description.

    ``source``: ``{"kind": "rate_r", "rate": R}``, ``{"kind": "iid", "pmf": {...}}``
    or ``{"kind": "markov_integer", "initial_state": s0, "transition": {"s": {...}}}``,
    each optionally with ``"bound_sequence": {"t": c_t}``.
    ``encoder``: ``{"kind": "identity" | "systematic"}`` or
    ``{"kind": "table", "tables": [{"s1,...,st": x}, ...]}``.
    """
    if not isinstance(obj, Mapping):
        raise ConfigError(path, "must be an object")
    for key in ("source", "channel"):
        if key not in obj:
            raise ConfigError(f"{path}.{key}", "missing field")
    channel = channel_from_config(obj["channel"], f"{path}.channel")
    sobj = obj["source"]
    spath = f"{path}.source"
    kind = sobj.get("kind")
    bounds = sobj.get("bound_sequence")
    if bounds is not None:
        bounds = {int(k): float(v) for k, v in bounds.items()}
    try:
        if kind == "rate_r":
            source = SourceSpec("rate_r", rate=int(sobj.get("rate", 1)), bound_sequence=bounds)
        elif kind == "iid":
            source = SourceSpec("iid", pmf=pmf_from_config(sobj.get("pmf"), f"{spath}.pmf"), bound_sequence=bounds)
        elif kind == "markov_integer":
            trans = {int(k): pmf_from_config(v, f"{spath}.transition.{k}") for k, v in sobj["transition"].items()}
            source = SourceSpec(
                "markov_integer",
                transition=trans,
                initial_state=int(sobj.get("initial_state", 0)),
                bound_sequence=bounds,
            )
        else:
            raise ConfigError(f"{spath}.kind", f"unknown source kind {kind!r}")
    except ConfigError:
        raise
    except KeyError as e:
        raise ConfigError(f"{spath}.{e.args[0]}", "missing field") from None
    except (TypeError, ValueError) as e:
        raise ConfigError(spath, str(e)) from None

    eobj = obj.get("encoder", {"kind": "systematic" if kind == "rate_r" else "identity"})
    ekind = eobj.get("kind", "identity")
    try:
        if ekind == "table":
            tables = [{_history_key(k): int(v) for k, v in tab.items()} for tab in eobj["tables"]]
            encoder = EncoderSpec("table", tables)
        else:
            encoder = EncoderSpec(ekind)
    except KeyError as e:
        raise ConfigError(f"{path}.encoder.{e.args[0]}", "missing field") from None
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}.encoder", str(e)) from None

    horizon = obj.get("horizon", 1)
    if not isinstance(horizon, int) or horizon < 1:
        raise ConfigError(f"{path}.horizon", "must be a positive integer")
    try:
        return TrackingInstance(source, channel, encoder, horizon)
    except ValueError as e:
        raise ConfigError(path, str(e)) from None
