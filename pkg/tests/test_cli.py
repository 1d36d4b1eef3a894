import json
import math
import subprocess
import sys

import numpy as np
import pytest

from latsphere import ConfigurationError, UnsupportedReportError, __version__
from latsphere.cli import main, parse_norm_spec
from latsphere.experiment import (EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, Report, config_from_dict,
                                  emit_plot_data, parse_config, run)

CONV_L1 = '{"variant": "Convexified", "p": 2, "base": {"variant": "WeightedLp", "p": 1}}'

# one small invocation per subcommand
COMMANDS = {
    "mazur": ["mazur", "verify", "--norm", "WeightedLp:p=1", "--p", "2", "--pairs", "600"],
    "entropy": ["entropy", "solve", "--norm", "WeightedLp:p=3", "--h", "{h}"],
    "midpoint": ["entropy", "midpoint", "--norm", CONV_L1, "--pairs", "300"],
    "constants": ["constants", "estimate", "--norm", "Lorentz:p=1", "--exponent", "2",
                  "--tuples", "300"],
    "ucx": ["modulus", "ucx", "--norm", "WeightedLp:p=2", "--grid", "0.5,1", "--pairs", "300"],
    "smooth": ["modulus", "smooth", "--norm", "WeightedLp:p=2", "--grid", "0.1,0.5",
               "--pairs", "300"],
    "map": ["modulus", "map", "--norm", "WeightedLp:p=2", "--q", "2", "--grid", "0.01,0.1,1",
            "--pairs", "200"],
    "build": ["homeo", "build", "--from", "WeightedLp:p=1.5", "--q", "1.5",
              "--to", "WeightedLp:p=3", "--q2", "3", "--points", "50"],
    "profile": ["homeo", "profile", "--from", "WeightedLp:p=2", "--q", "2", "--pairs", "200",
                "--bins", "0.01,0.1,1"],
    "probe": ["homeo", "probe-linf", "--n-atoms", "2"],
    "dual": ["dual", "support", "--norm", "WeightedLp:p=2", "--x", "{x}"],
}


@pytest.fixture
def vectors(tmp_path):
    rng = np.random.default_rng(0)
    h = rng.exponential(size=6)
    h /= h.mean()
    (tmp_path / "h.json").write_text(json.dumps(h.tolist()))
    (tmp_path / "x.txt").write_text(" ".join(["1.0"] * 6))
    return {"h": str(tmp_path / "h.json"), "x": str(tmp_path / "x.txt")}


def invoke(name, out, vectors, seed=3, extra=()):
    argv = [vectors[a[1:-1]] if a in ("{h}", "{x}") else a for a in COMMANDS[name]]
    return main(argv + ["--n", "6", "--seed", str(seed), "--out", str(out), *extra])


@pytest.mark.parametrize("name", sorted(COMMANDS))
def test_subcommands_run_and_are_deterministic(name, tmp_path, vectors, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert invoke(name, a, vectors) == EXIT_OK
    assert invoke(name, b, vectors) == EXIT_OK
    csv_a = sorted(a.glob("*.csv"))
    assert csv_a, "every task emits a CSV"
    for f in csv_a:
        assert f.read_bytes() == (b / f.name).read_bytes()
    report = json.loads((a / "report.json").read_text())
    assert report["seed"] == 3 and report["version"] == __version__
    assert len(report["config_hash"]) == 64


def test_threads_do_not_change_output(tmp_path, vectors, monkeypatch):
    invoke("midpoint", tmp_path / "one", vectors)
    monkeypatch.setenv("LATSPHERE_THREADS", "4")
    invoke("midpoint", tmp_path / "four", vectors)
    assert ((tmp_path / "one" / "midpoint.csv").read_bytes()
            == (tmp_path / "four" / "midpoint.csv").read_bytes())


def test_entropy_solve_matches_closed_form(tmp_path, vectors):
    assert invoke("entropy", tmp_path, vectors) == EXIT_OK
    payload = json.loads((tmp_path / "report.json").read_text())["payload"]
    h = np.array(json.loads(open(vectors["h"]).read()))
    np.testing.assert_allclose(payload["maximizer"], h ** (1 / 3), atol=1e-6)


def test_mazur_report(tmp_path):
    code = main(["mazur", "verify", "--norm", "WeightedLp:p=1", "--p", "2", "--n", "6",
                 "--out", str(tmp_path)])
    assert code == EXIT_OK
    payload = json.loads((tmp_path / "report.json").read_text())["payload"]
    assert payload["samples"] == 10_000
    assert payload["violations_lower"] == payload["violations_upper"] == 0
    header = (tmp_path / "mazur-verify.csv").read_text().splitlines()[0]
    assert header == "delta,distance,H,F"


def test_csv_full_precision(tmp_path, vectors):
    invoke("ucx", tmp_path, vectors)
    lines = (tmp_path / "modulus.csv").read_text().splitlines()
    assert lines[0] == "epsilon,delta_hat"
    eps, val = lines[1].split(",")
    assert float(eps) == 0.5 and float(val) == pytest.approx(1 - math.sqrt(1 - 1 / 16), abs=1e-3)


def test_config_file_and_overrides(tmp_path):
    cfg = {"version": 1, "task": "mazur-verify", "space": {"n": 4},
           "norms": {"X": {"variant": "Lorentz", "p": 1}}, "params": {"p": 3, "pairs": 300}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert main(["--config", str(path), "--seed", "7", "--out", str(tmp_path / "o")]) == 0
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["seed"] == 7 and report["config"]["params"]["p"] == 3
    assert main(["entropy", "solve", "--config", str(path)]) == EXIT_CONFIG


def test_malformed_configs(tmp_path, capsys):
    missing = tmp_path / "missing.json"
    missing.write_text(json.dumps({"version": 1, "task": "mazur-verify", "space": {},
                                   "norms": {"X": {"variant": "WeightedLp", "p": 1}},
                                   "params": {"p": 2}}))
    assert main(["--config", str(missing)]) == EXIT_CONFIG
    broken = tmp_path / "broken.json"
    broken.write_text('{"version": 1,\n  "task": nope}')
    assert main(["--config", str(broken)]) == EXIT_CONFIG
    assert "line 2, column 11" in capsys.readouterr().err


@pytest.mark.parametrize("doc", [
    {"version": 1, "task": "probe", "space": {"n": 2}, "extra": 1},
    {"version": 2, "task": "probe", "space": {"n": 2}},
    {"version": 1, "task": "render", "space": {"n": 2}},
    {"version": 1, "task": "probe", "space": {"n": 2}, "params": {"colour": "red"}},
    {"version": 1, "task": "mazur-verify", "space": {"n": 2},
     "norms": {"X": {"variant": "WeightedLp", "p": 1}}},
    {"version": 1, "task": "probe", "space": {"n": 2}, "seed": -1},
])
def test_strict_schema(doc):
    with pytest.raises(ConfigurationError):
        config_from_dict(doc)


def test_parse_error_position():
    with pytest.raises(ConfigurationError) as err:
        parse_config('{\n "version": 1,\n "task": }')
    assert (err.value.line, err.value.column) == (3, 10)


def test_solver_failure_exit(tmp_path):
    # a two-step budget cannot certify the generic ascent
    doc = {"version": 1, "task": "entropy-solve", "space": {"n": 3},
           "norms": {"X": {"variant": "WeightedLp", "p": 3}},
           "params": {"h": [1.5, 1.0, 0.5], "method": "ascent", "max_iter": 2}}
    report = run(doc)
    assert report.exit_code == EXIT_SOLVER
    assert report.payload["converged"] is False
    assert len(report.payload["maximizer"]) == 3


def test_unsupported_report(tmp_path):
    report = Report({}, "dual-support", {}, {})
    with pytest.raises(UnsupportedReportError):
        emit_plot_data(report, tmp_path / "x.csv")


def test_norm_spec_forms(tmp_path):
    assert parse_norm_spec("WeightedLp:p=2") == {"variant": "WeightedLp", "p": 2.0}
    assert parse_norm_spec("LInfinity") == {"variant": "LInfinity"}
    assert parse_norm_spec(CONV_L1)["base"]["p"] == 1
    f = tmp_path / "n.json"
    f.write_text('{"variant": "WeightedLp", "p": 3}')
    assert parse_norm_spec(str(f))["p"] == 3
    with pytest.raises(ConfigurationError):
        parse_norm_spec("WeightedLp:p")


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "latsphere", "homeo", "probe-linf",
                          "--n-atoms", "2", "--eps", "1e-3"],
                         capture_output=True, text=True, check=True)
    report = json.loads(out.stdout)
    assert report["payload"]["rows"][0][2] == 1.0
