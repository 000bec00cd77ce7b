"""Config-driven experiment runner.

A config names one tracking instance, a list of bounds with parameter grids,
the horizons to evaluate and optional estimators. ``run_experiment`` writes
four files named after the config digest:

* ``profile-<digest>.csv``: one row per (bound, parameter point, horizon)
* ``reports-<digest>.jsonl``: the full report behind every CSV row
* ``errors-<digest>.csv``: estimator error moments, when estimators are given
* ``manifest-<digest>.json``: digest, tool version, stage timings, file hashes

Everything except the manifest timings is a pure function of the config.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .. import __version__
from ..bounds import (
    BoundReport,
    anytime_bound_check,
    digest,
    e0_from_joint,
    gartner_ellis_value,
    jensen_chain_check,
    lemma1_check,
    lemma2_check,
    map_error_bound,
    necessary_report,
    reverse_holder_check,
    sufficient_map_value,
    sufficient_rho_value,
)
from ..dist import IntegerPmf, marginals
from ..estimate import EstimatorPolicy, error_moment_exact, error_profile
from ..numerics import SeedSpec, riemann_zeta
from ..process import (
    DEFAULT_BUDGET,
    LOG2,
    BudgetExceeded,
    ConfigError,
    TrackingInstance,
    exact_joint,
    instance_from_config,
)
from .io import csv_text, dumps

# parameters each bound accepts; all are required
BOUND_PARAMS: dict[str, tuple[str, ...]] = {
    "necessary_terms": ("q", "rho"),
    "bounded_support_moment": ("rho",),
    "zeta_moment": ("m", "rho"),
    "gallager_e0": ("m",),
    "anytime_bound_check": ("m",),
    "gartner_ellis": ("rho",),
    "jensen_chain": ("rho",),
    "reverse_holder": ("p", "rho"),
    "map_error_bound": ("metric_power", "rho", "s"),
    "sufficient_map": ("m", "s"),
    "sufficient_rho": ("m", "p", "s"),
}
# bounds that need a rate-R source (their right side is R log 2)
RATE_BOUNDS = ("gallager_e0", "anytime_bound_check", "gartner_ellis")
# bounds evaluated once per run rather than per horizon
STATIC_BOUNDS = ("anytime_bound_check",)
INTEGER_PARAMS = ("metric_power",)


class HorizonBudgetError(BudgetExceeded):
    """Enumeration budget exceeded at a particular horizon."""

    def __init__(self, t: int, inner: BudgetExceeded):
        RuntimeError.__init__(self, f"horizon t={t}: {inner}")
        self.atoms = inner.atoms
        self.budget = inner.budget
        self.t = t


@dataclass(frozen=True)
class BoundRequest:
    name: str
    grid: tuple[dict, ...]


@dataclass(frozen=True)
class EstimatorRequest:
    policy: EstimatorPolicy
    m: float


@dataclass(frozen=True)
class ExperimentConfig:
    instance: TrackingInstance
    bounds: tuple[BoundRequest, ...]
    horizons: tuple[int, ...]
    estimators: tuple[EstimatorRequest, ...] = ()
    mc_replications: int | None = None
    mc_confidence: float = 0.95
    seed: SeedSpec = SeedSpec()
    output_dir: Path = Path("out")
    budget: int = DEFAULT_BUDGET
    raw: Mapping = field(default_factory=dict, compare=False)

    @property
    def digest(self) -> str:
        return config_digest(self.raw)


@dataclass
class RunManifest:
    config_digest: str
    tool_version: str
    stages: dict[str, float]
    files: list[dict]
    output_dir: Path

    def to_json(self) -> dict:
        return {
            "config_digest": self.config_digest,
            "tool_version": self.tool_version,
            "stage_seconds": self.stages,
            "files": self.files,
        }

    def path(self, prefix: str) -> Path:
        for f in self.files:
            if f["name"].startswith(prefix + "-"):
                return self.output_dir / f["name"]
        raise KeyError(prefix)


def config_digest(raw: Mapping) -> str:
    """Hash of the config with ``output_dir`` removed, so output location does not rename files."""
    body = {k: v for k, v in raw.items() if k != "output_dir"}
    return hashlib.sha256(dumps(body).encode()).hexdigest()[:16]


# -- validation -----------------------------------------------------------------


def _number(v, path, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(path, f"expected an integer, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(path, "must be finite")
    return int(v) if integer else float(v)


def _check_point(name: str, point: dict, path: str) -> None:
    """Admissibility of one parameter point; errors name BoundParams.<field>."""

    def bad(key, msg):
        raise ConfigError(f"{path}.{key}", f"BoundParams.{key}: {msg}")

    rho = point.get("rho")
    if rho is not None and not rho > 0:
        bad("rho", "must be > 0")
    if "q" in point and not point["q"] > rho + 1:
        bad("q", f"need q > rho + 1, got q={point['q']:g}, rho={rho:g}")
    if "p" in point and not point["p"] > 1:
        bad("p", "must be > 1")
    if "s" in point and not point["s"] > 1:
        bad("s", "must be > 1 (zeta diverges)")
    if "metric_power" in point and point["metric_power"] < 1:
        bad("metric_power", "must be a positive integer")
    if "m" in point:
        m = point["m"]
        if not m > 0:
            bad("m", "must be > 0")
        if name in ("sufficient_map", "sufficient_rho") and int(m) != m:
            bad("m", "must be a positive integer")
        if name == "zeta_moment" and not rho < m:
            bad("rho", f"need rho < m, got rho={rho:g}, m={m:g}")


def _parse_bound(obj, path: str) -> BoundRequest:
    if isinstance(obj, str):
        obj = {"name": obj}
    if not isinstance(obj, Mapping):
        raise ConfigError(path, "must be a bound name or an object")
    name = obj.get("name")
    if name not in BOUND_PARAMS:
        raise ConfigError(f"{path}.name", f"unknown bound {name!r}; known: {', '.join(sorted(BOUND_PARAMS))}")
    params = obj.get("params", {})
    if not isinstance(params, Mapping):
        raise ConfigError(f"{path}.params", "must be an object")
    wanted = BOUND_PARAMS[name]
    for key in params:
        if key not in wanted:
            raise ConfigError(f"{path}.params.{key}", f"{name} takes no parameter {key!r}")
    axes = []
    for key in wanted:
        if key not in params:
            raise ConfigError(f"{path}.params.{key}", "missing parameter")
        vals = params[key] if isinstance(params[key], list) else [params[key]]
        if not vals:
            raise ConfigError(f"{path}.params.{key}", "empty grid")
        axes.append([_number(v, f"{path}.params.{key}", key in INTEGER_PARAMS) for v in vals])
    grid = tuple(dict(zip(wanted, combo)) for combo in itertools.product(*axes))
    for point in grid:
        _check_point(name, point, f"{path}.params")
    return BoundRequest(name, grid)


def _parse_estimator(obj, path: str) -> EstimatorRequest:
    if not isinstance(obj, Mapping):
        raise ConfigError(path, "must be an object")
    m = _number(obj.get("m", 1), f"{path}.m")
    if not m > 0:
        raise ConfigError(f"{path}.m", "must be > 0")
    try:
        policy = _policy(obj)
    except ValueError as e:
        raise ConfigError(path, str(e)) from None
    return EstimatorRequest(policy, m)


def _policy(obj) -> EstimatorPolicy:
    kind = obj.get("kind", "map")
    if kind == "ceiling":
        return EstimatorPolicy("ceiling", inner=_policy(obj.get("inner", {"kind": "map"})))
    rho = obj.get("rho")
    return EstimatorPolicy(kind, rho=None if rho is None else float(rho), tie_rule=obj.get("tie_rule"))


def parse_config(obj: Mapping) -> ExperimentConfig:
    """Validate a JSON config; failures raise ``ConfigError`` with a field path."""
    if not isinstance(obj, Mapping):
        raise ConfigError("config", "must be an object")
    known = {"instance", "bounds", "horizons", "estimators", "mc", "seed", "output_dir", "budget"}
    for key in obj:
        if key not in known:
            raise ConfigError(key, "unknown field")
    if "instance" not in obj:
        raise ConfigError("instance", "missing field")
    instance = instance_from_config(obj["instance"], "instance")

    horizons = obj.get("horizons", list(range(1, instance.horizon + 1)))
    if not isinstance(horizons, list) or not horizons:
        raise ConfigError("horizons", "must be a non-empty list")
    hs = []
    for k, t in enumerate(horizons):
        t = _number(t, f"horizons[{k}]", integer=True)
        if not 1 <= t <= instance.horizon:
            raise ConfigError(f"horizons[{k}]", f"must lie in 1..{instance.horizon} (instance horizon)")
        hs.append(t)

    bounds_obj = obj.get("bounds", [])
    if not isinstance(bounds_obj, list):
        raise ConfigError("bounds", "must be a list")
    bounds = tuple(_parse_bound(b, f"bounds[{k}]") for k, b in enumerate(bounds_obj))
    for k, b in enumerate(bounds):
        if b.name in RATE_BOUNDS and instance.source.kind != "rate_r":
            raise ConfigError(f"bounds[{k}].name", f"{b.name} compares against R log 2 and needs a rate_r source")

    est_obj = obj.get("estimators", [])
    if not isinstance(est_obj, list):
        raise ConfigError("estimators", "must be a list")
    estimators = tuple(_parse_estimator(e, f"estimators[{k}]") for k, e in enumerate(est_obj))

    reps, conf = None, 0.95
    if obj.get("mc") is not None:
        mc = obj["mc"]
        if not isinstance(mc, Mapping):
            raise ConfigError("mc", "must be an object")
        reps = _number(mc.get("replications"), "mc.replications", integer=True)
        if reps < 100:
            raise ConfigError("mc.replications", "must be >= 100")
        conf = _number(mc.get("confidence", 0.95), "mc.confidence")
        if not 0 < conf < 1:
            raise ConfigError("mc.confidence", "must lie in (0, 1)")

    seed = _parse_seed(obj.get("seed", 0))
    budget = _number(obj.get("budget", DEFAULT_BUDGET), "budget", integer=True)
    if budget < 1:
        raise ConfigError("budget", "must be positive")
    out = obj.get("output_dir", "out")
    if not isinstance(out, str):
        raise ConfigError("output_dir", "must be a path string")
    return ExperimentConfig(instance, bounds, tuple(hs), estimators, reps, conf, seed, Path(out), budget, dict(obj))


def _parse_seed(v) -> SeedSpec:
    try:
        if isinstance(v, Mapping):
            return SeedSpec(int(v.get("master_seed", 0)), int(v.get("stream_index", 0)))
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValueError(f"expected an unsigned integer, got {v!r}")
        return SeedSpec(v, 0)
    except (TypeError, ValueError) as e:
        raise ConfigError("seed", str(e)) from None


def load_config(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError("config", f"invalid JSON: {e}") from None


# -- evaluation -----------------------------------------------------------------


class _Joints:
    """Per-horizon exact joints, built lazily and cached."""

    def __init__(self, instance, budget):
        self.instance = instance
        self.budget = budget
        self._cache = {}

    def get(self, t, target="current_state"):
        key = (t, target)
        if key not in self._cache:
            try:
                self._cache[key] = exact_joint(self.instance, t, target, self.budget)
            except BudgetExceeded as e:
                raise HorizonBudgetError(t, e) from None
        return self._cache[key]


def _state_law(j) -> IntegerPmf:
    return marginals(j)[0]


def _evaluate(name, point, t, joints: _Joints, instance: TrackingInstance, seed, provenance="") -> BoundReport:
    rate = instance.source.rate
    if name == "necessary_terms":
        j = joints.get(t)
        res = necessary_report(j, point["rho"], point["q"], t)
        rep = BoundReport(name, res.lhs, res.rhs, res.lhs - res.rhs, reason="clamped" if res.clamped else "")
    elif name == "bounded_support_moment":
        rep = lemma1_check(_state_law(joints.get(t)), point["rho"])
    elif name == "zeta_moment":
        rep = lemma2_check(_state_law(joints.get(t)), point["m"], point["rho"])
    elif name == "gallager_e0":
        e0 = e0_from_joint(joints.get(t, "full_input_sequence"), point["m"])
        lhs = e0 / (point["m"] * t)
        rep = BoundReport(name, lhs, rate * LOG2, lhs - rate * LOG2, extras={"e0": e0})
    elif name == "anytime_bound_check":
        rep = anytime_bound_check(rate, point["m"], instance.channel, seed=seed)
    elif name == "gartner_ellis":
        lhs = gartner_ellis_value(joints.get(t, "full_input_sequence"), point["rho"], t)
        rep = BoundReport(name, lhs, rate * LOG2, lhs - rate * LOG2)
    elif name == "jensen_chain":
        rep = jensen_chain_check(joints.get(t, "full_input_sequence"), point["rho"])
    elif name == "reverse_holder":
        rep = reverse_holder_check(joints.get(t), point["rho"], point["p"])
    elif name == "map_error_bound":
        j = joints.get(t)
        power = point["metric_power"]
        lhs = map_error_bound(j, point["rho"], point["s"], power)
        rhs = error_moment_exact(j, EstimatorPolicy("map"), power)
        rep = BoundReport(name, lhs, rhs, lhs - rhs)
    elif name == "sufficient_map":
        j = joints.get(t)
        m = int(point["m"])
        value = sufficient_map_value(j, m, point["s"])
        lhs = riemann_zeta(point["s"]) * value
        rhs = error_moment_exact(j, EstimatorPolicy("map"), m)
        rep = BoundReport(name, lhs, rhs, lhs - rhs, extras={"value": value})
    elif name == "sufficient_rho":
        j = joints.get(t)
        m = int(point["m"])
        res = sufficient_rho_value(j, m, point["p"], point["s"])
        z = riemann_zeta(point["s"])
        lhs = z * res.pre_holder
        rhs = error_moment_exact(j, EstimatorPolicy("rho", rho=res.rho), m)
        rep = BoundReport(
            name, lhs, rhs, lhs - rhs,
            extras={"estimator_rho": res.rho, "holder_bound": z * res.value, "pre_holder": res.pre_holder},
        )
    else:  # pragma: no cover - names are validated up front
        raise KeyError(name)
    rep.name = name
    rep.params = dict(point)
    rep.t = None if name in STATIC_BOUNDS else t
    if not rep.provenance:
        rep.provenance = provenance
    return rep


def profile_columns(bound_names) -> list[str]:
    """CSV header; the parameter columns depend only on which bounds are requested."""
    params = sorted({p for n in bound_names for p in BOUND_PARAMS[n]})
    return ["name", "t", "lhs", "rhs", "slack", *params, "seed"]


def evaluate_bounds(cfg: ExperimentConfig) -> list[BoundReport]:
    joints = _Joints(cfg.instance, cfg.budget)
    prov = digest(cfg.raw.get("instance", {}))
    reports = []
    for req in cfg.bounds:
        for point in req.grid:
            if req.name in STATIC_BOUNDS:
                reports.append(_evaluate(req.name, point, 0, joints, cfg.instance, cfg.seed, prov))
                continue
            for t in cfg.horizons:
                reports.append(_evaluate(req.name, point, t, joints, cfg.instance, cfg.seed, prov))
    return reports


def evaluate_errors(cfg: ExperimentConfig) -> list[list]:
    rows = []
    for k, est in enumerate(cfg.estimators):
        for t in cfg.horizons:
            try:
                stats = error_profile(
                    cfg.instance, est.policy, est.m, [t], cfg.budget,
                    mc=cfg.mc_replications, seed=cfg.seed.child(k), confidence=cfg.mc_confidence,
                )
            except BudgetExceeded as e:
                raise HorizonBudgetError(t, e) from None
            rows.append([est.policy.label, est.m, t, stats.per_t_moment[t], stats.half_width[t],
                         stats.method, stats.replications])
    return rows


ERROR_COLUMNS = ["estimator", "m", "t", "moment", "half_width", "method", "replications"]


def _report_row(rep: BoundReport, columns, seed) -> list:
    row = [rep.name, "" if rep.t is None else rep.t, rep.lhs, rep.rhs, rep.slack]
    for col in columns[5:-1]:
        row.append(rep.params.get(col))
    row.append(f"{seed.master_seed}:{seed.stream_index}")
    return row


def run_experiment(cfg: ExperimentConfig) -> RunManifest:
    """Evaluate every requested bound and estimator and write the output files."""
    stages: dict[str, float] = {}
    tag = cfg.digest

    t0 = time.perf_counter()
    reports = evaluate_bounds(cfg)
    stages["bounds"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    error_rows = evaluate_errors(cfg) if cfg.estimators else None
    stages["errors"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    columns = profile_columns([b.name for b in cfg.bounds])
    texts = {
        f"profile-{tag}.csv": csv_text(columns, [_report_row(r, columns, cfg.seed) for r in reports]),
        f"reports-{tag}.jsonl": "".join(dumps(r.to_json()) + "\n" for r in reports),
    }
    if error_rows is not None:
        texts[f"errors-{tag}.csv"] = csv_text(ERROR_COLUMNS, error_rows)
    files = []
    for name, text in texts.items():
        data = text.encode()
        (out / name).write_bytes(data)
        files.append({"name": name, "bytes": len(data), "sha256": hashlib.sha256(data).hexdigest()})
    stages["write"] = time.perf_counter() - t0

    manifest = RunManifest(tag, __version__, stages, files, out)
    (out / f"manifest-{tag}.json").write_text(json.dumps(manifest.to_json(), indent=2, sort_keys=True) + "\n")
    return manifest
