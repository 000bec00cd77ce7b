import csv
import io
import json
import math
from pathlib import Path

import pytest

from trackability.harness import parse_config, run_experiment, verify_suite
from trackability.harness.cli import EXPLANATIONS, main
from trackability.harness.experiment import BOUND_PARAMS, config_digest, profile_columns
from trackability.harness.io import dumps, fmt_float, parse_float
from trackability.process import BudgetExceeded, ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

IDENTITY = {
    "instance": {
        "source": {"kind": "iid", "pmf": {"support": [0, 1], "mass": [0.5, 0.5]}},
        "channel": {"preset": "identity", "n": 2},
        "horizon": 6,
    },
    "bounds": [{"name": "necessary_terms", "params": {"rho": 1, "q": 3}}],
    "horizons": [1, 2, 3, 4, 5, 6],
    "seed": 7,
}

BSC_ANYTIME = {
    "instance": {"source": {"kind": "rate_r", "rate": 1}, "channel": {"preset": "bsc", "p": 0.25}, "horizon": 2},
    "bounds": [{"name": "anytime_bound_check", "params": {"m": 1}}],
    "horizons": [1],
}


def _rows(path):
    return list(csv.DictReader(io.StringIO(Path(path).read_text())))


def _reports(path):
    return [json.loads(line) for line in Path(path).read_text().splitlines()]


def _run(raw, out):
    return run_experiment(parse_config({**raw, "output_dir": str(out)}))


def test_io_formatting():
    assert fmt_float(0.1) == "0.10000000000000001"
    assert parse_float(fmt_float(math.pi)) == math.pi
    assert fmt_float(math.inf) == "inf" and fmt_float(-math.inf) == "-inf"
    assert math.isnan(parse_float("nan"))
    assert dumps({"b": 1, "a": math.inf}) == '{"a":"inf","b":1}'


def test_identity_necessary_gap_zero(tmp_path):
    m = _run(IDENTITY, tmp_path)
    rows = _rows(m.path("profile"))
    assert [int(r["t"]) for r in rows] == [1, 2, 3, 4, 5, 6]
    for r in rows:
        t = int(r["t"])
        assert abs(float(r["slack"])) <= 1e-12
        assert float(r["lhs"]) == pytest.approx(math.log(2) / t, abs=1e-12)
        assert r["seed"] == "7:0"


def test_bsc_anytime_violated(tmp_path):
    reps = _reports(_run(BSC_ANYTIME, tmp_path).path("reports"))
    assert len(reps) == 1
    assert reps[0]["reason"] == "violated"
    assert reps[0]["t"] is None
    assert reps[0]["lhs"] < math.log(2) == pytest.approx(reps[0]["rhs"])


def test_inadmissible_q_names_parameter():
    raw = {**IDENTITY, "bounds": [{"name": "necessary_terms", "params": {"rho": 1, "q": 2}}]}
    with pytest.raises(ConfigError) as e:
        parse_config(raw)
    assert "BoundParams.q" in str(e.value)
    assert "bounds[0].params.q" in str(e.value)


@pytest.mark.parametrize("bad,where", [
    ({"horizons": [0]}, "horizons"),
    ({"bounds": [{"name": "nope"}]}, "bounds[0]"),
    ({"seed": -1}, "seed"),
    ({"colour": 1}, "colour"),
])
def test_config_errors_name_path(bad, where):
    with pytest.raises(ConfigError) as e:
        parse_config({**IDENTITY, **bad})
    assert where in str(e.value)


def test_rerun_is_byte_identical(tmp_path):
    raw = json.loads((CONFIGS / "bsc_anytime.json").read_text())
    a = _run(raw, tmp_path / "a")
    b = _run(raw, tmp_path / "b")
    assert [f["sha256"] for f in a.files] == [f["sha256"] for f in b.files]
    for f in a.files:
        assert (tmp_path / "a" / f["name"]).read_bytes() == (tmp_path / "b" / f["name"]).read_bytes()
    assert a.config_digest == config_digest(raw)


def test_digest_ignores_output_dir():
    assert config_digest({**IDENTITY, "output_dir": "x"}) == config_digest({**IDENTITY, "output_dir": "y"})
    assert config_digest(IDENTITY) != config_digest({**IDENTITY, "seed": 8})


def test_columns_depend_only_on_bound_names(tmp_path):
    cols = profile_columns(["necessary_terms", "bounded_support_moment"])
    assert cols == ["name", "t", "lhs", "rhs", "slack", "q", "rho", "seed"]
    a = {**IDENTITY, "bounds": [{"name": "necessary_terms", "params": {"rho": 1, "q": 3}},
                                {"name": "bounded_support_moment", "params": {"rho": 1}}]}
    b = {**IDENTITY, "bounds": [{"name": "necessary_terms", "params": {"rho": [0.5, 2], "q": 4}},
                                {"name": "bounded_support_moment", "params": {"rho": 3}}]}
    for k, raw in enumerate((a, b)):
        text = _run(raw, tmp_path / str(k)).path("profile").read_text()
        assert text.splitlines()[0] == ",".join(cols)
    assert set(BOUND_PARAMS) >= {"necessary_terms", "bounded_support_moment", "gallager_e0", "sufficient_rho"}


def test_budget_error_names_horizon(tmp_path):
    raw = {**IDENTITY, "instance": {**IDENTITY["instance"], "horizon": 12}, "horizons": [12], "budget": 100}
    with pytest.raises(BudgetExceeded, match="horizon t=12"):
        _run(raw, tmp_path)


def test_full_bsc_config_runs(tmp_path):
    raw = json.loads((CONFIGS / "bsc_anytime.json").read_text())
    m = _run(raw, tmp_path)
    reps = _reports(m.path("reports"))
    names = {r["name"] for r in reps}
    assert names == {b["name"] for b in raw["bounds"]}
    # the sufficient-condition bounds dominate exact errors
    for r in reps:
        if r["name"] in ("map_error_bound", "sufficient_map", "sufficient_rho"):
            assert r["slack"] >= -1e-12
    errors = _rows(m.path("errors"))
    assert len(errors) == 2 * len(raw["horizons"])
    assert all(e["method"] == "exact" for e in errors)
    manifest = json.loads((tmp_path / f"manifest-{m.config_digest}.json").read_text())
    assert set(manifest) == {"config_digest", "tool_version", "stage_seconds", "files"}


def test_cli_bounds_and_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(IDENTITY))
    assert main(["bounds", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**IDENTITY, "bounds": [{"name": "necessary_terms", "params": {"rho": 1, "q": 2}}]}))
    assert main(["bounds", "--config", str(bad)]) == 1
    assert "BoundParams.q" in capsys.readouterr().err
    big = tmp_path / "big.json"
    big.write_text(json.dumps({**IDENTITY, "instance": {**IDENTITY["instance"], "horizon": 25}, "horizons": [25]}))
    assert main(["bounds", "--config", str(big), "--out", str(tmp_path / "o2")]) == 2
    assert "horizon t=25" in capsys.readouterr().err
    assert main(["bounds"]) == 1
    assert main(["entropy", "--config", str(tmp_path / "missing.json")]) == 1
    with pytest.raises(SystemExit) as e:
        main(["bogus"])
    assert e.value.code == 1


def test_cli_entropy_and_e0(tmp_path, capsys):
    p = tmp_path / "p.json"
    p.write_text(json.dumps({"pmf": {"support": [0, 1, 2], "mass": [0.5, 0.25, 0.25]}, "alphas": [2]}))
    assert main(["entropy", "--config", str(p)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "alpha,entropy"
    assert float(out[1].split(",")[1]) == pytest.approx(math.log(8 / 3), abs=1e-15)
    c = tmp_path / "c.json"
    c.write_text(json.dumps({"channel": {"preset": "bsc", "p": 0.1}, "rho": [1]}))
    assert main(["e0", "--config", str(c)]) == 0
    row = capsys.readouterr().out.splitlines()[1].split(",")
    assert [float(v) for v in row[3].split()] == pytest.approx([0.5, 0.5], abs=1e-6)


def test_cli_simulate(tmp_path, capsys):
    raw = json.loads((CONFIGS / "bsc_simulate.json").read_text())
    raw["instance"]["horizon"] = 2
    raw["mc"]["replications"] = 2000
    c = tmp_path / "s.json"
    c.write_text(json.dumps(raw))
    assert main(["simulate", "--config", str(c)]) == 0
    first = capsys.readouterr().out
    assert main(["simulate", "--config", str(c)]) == 0
    assert capsys.readouterr().out == first
    rows = list(csv.DictReader(io.StringIO(first)))
    assert {r["method"] for r in rows} == {"monte_carlo"}
    assert all(float(r["half_width"]) > 0 for r in rows)


def test_explain(capsys):
    assert main(["explain"]) == 0
    listing = capsys.readouterr().out
    for name in EXPLANATIONS:
        assert name in listing
    assert main(["explain", "bounded_support_moment"]) == 0
    assert capsys.readouterr().out.strip()
    assert main(["explain", "nonexistent"]) == 1


def test_verify_subset_deterministic(tmp_path):
    only = {"bounded_support_moment", "jensen_chain"}
    a = verify_suite(seed=3, out_dir=tmp_path / "a", only=only)
    b = verify_suite(seed=3, out_dir=tmp_path / "b", only=only)
    assert a.passed and a.table_csv() == b.table_csv()
    assert (tmp_path / "a" / "verify-table.csv").read_bytes() == (tmp_path / "b" / "verify-table.csv").read_bytes()


def test_verify_mutation_is_caught(tmp_path, capsys):
    rc = main(["verify", "--seed", "1", "--mutate", "bounded_support", "--out", str(tmp_path)])
    assert rc == 3
    table = _rows(tmp_path / "verify-table.csv")
    status = {r["property"]: r["status"] for r in table}
    assert status["bounded_support_moment"] == "FAIL"
    assert sum(v == "PASS" for v in status.values()) == len(status) - 1
    repros = sorted(tmp_path.glob("repro-bounded_support_moment-*.json"))
    assert repros
    rep = json.loads(repros[0].read_text())
    assert "instance" in rep
