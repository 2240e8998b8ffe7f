import csv
import json
import subprocess
import sys

import pytest

from poincare_kernel.cli import EXIT_CONFIG, EXIT_OK, EXIT_THRESHOLD, main
from poincare_kernel.config import RunConfig, build_config, load_config
from poincare_kernel.errors import ConfigError


def test_defaults_depend_on_model():
    assert RunConfig().levels == (1, 2, 3, 5, 8) and RunConfig().radius == 8.0
    h = RunConfig(kind="hyperbolic")
    assert h.levels == (2, 3, 4) and h.pairs == 10 and h.radius is None


def test_ini_parsing():
    text = "[model]\nkind = hyperbolic\n[run]\nlevels = 3, 4\nradius = auto\n[output]\ndirectory = out\n"
    cfg = load_config(text=text, seed=7)
    assert cfg.kind == "hyperbolic" and cfg.levels == (3, 4) and cfg.radius is None
    assert cfg.output == "out" and cfg.seed == 7


@pytest.mark.parametrize("text", [
    "[model]\nkind = spherical\n",
    "[model]\ntau_im = -1\n",
    "[run]\nlevels = 0\n",
    "[model]\nkind = hyperbolic\n[run]\nlevels = 1\n",
    "[run]\ntail_tolerance = -1\n",
    "[run]\nbeta = 0\n",
    "[limits]\nelement_cap = 10\n",
    "[limits]\nword_cap = 500\n",
    "[run]\npairs = many\n",
    "[bogus]\nx = 1\n",
    "[run]\nunknown = 1\n",
    "not an ini file",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        load_config(text=text)


def test_override_ignores_none():
    assert build_config({"seed": 3}, seed=None).seed == 3


def test_cli_verify_torus(tmp_path, capsys):
    code = main(["verify-torus", "--n", "1,3", "--pairs", "4", "--out", str(tmp_path)])
    assert code == EXIT_OK
    rows = list(csv.DictReader(open(tmp_path / "summary.csv")))
    assert rows and all(r["passed"] == "True" for r in rows)
    rep = json.load(open(tmp_path / rows[0]["file"]))
    assert set(rep) == {"payload", "timing"}
    assert "PASS theorem1" in capsys.readouterr().out


def test_cli_threshold_exit(tmp_path):
    assert main(["verify-torus", "--n", "2", "--beta", "1000", "--pairs", "2", "--out", str(tmp_path)]) == EXIT_THRESHOLD


def test_cli_bad_arguments(tmp_path):
    assert main(["verify-torus", "--tolerance", "-1", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["verify-torus", "--n", "x", "--out", str(tmp_path)]) == EXIT_CONFIG
    cfg = tmp_path / "c.ini"
    cfg.write_text("[model]\nkind = hyperbolic\n")
    assert main(["verify-torus", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_cli_enumerate_identity_only(tmp_path):
    code = main(["enumerate", "--model", "hyperbolic", "--radius", "0.0001", "--out", str(tmp_path),
                 "--cache-dir", str(tmp_path / "cache")])
    assert code == EXIT_OK
    rows = list(csv.DictReader(open(tmp_path / "elements.csv")))
    assert len(rows) == 1 and float(rows[0]["displacement"]) == 0.0
    assert json.load(open(tmp_path / "enumeration.json"))["count"] == 1


def test_cli_enumerate_flat(tmp_path):
    assert main(["enumerate", "--model", "flat", "--radius", "2.5", "--out", str(tmp_path),
                 "--cache-dir", str(tmp_path / "cache")]) == EXIT_OK
    assert len(list(csv.DictReader(open(tmp_path / "elements.csv")))) == 21


@pytest.mark.parametrize("source", ["cover", "gamma-sum", "basis"])
def test_cli_kernel_grid(tmp_path, source):
    assert main(["kernel-grid", "--model", "flat", "--n", "2", "--grid", "6", "--source", source,
                 "--out", str(tmp_path)]) == EXIT_OK
    rows = list(csv.DictReader(open(tmp_path / "kernel_grid.csv")))
    assert len(rows) == 36


def test_cli_kernel_grid_sources_agree(tmp_path):
    vals = {}
    for source in ("gamma-sum", "basis"):
        d = tmp_path / source
        main(["kernel-grid", "--model", "flat", "--n", "3", "--grid", "5", "--source", source, "--out", str(d)])
        vals[source] = [complex(float(r["value_re"]), float(r["value_im"]))
                        for r in csv.DictReader(open(d / "kernel_grid.csv"))]
    assert max(abs(a - b) for a, b in zip(vals["gamma-sum"], vals["basis"])) < 1e-8


def test_cli_agmon_and_exhaustion(tmp_path):
    assert main(["agmon-fit", "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["enumerate", "--radius", "3", "--out", str(tmp_path / "h"), "--cache-dir", str(tmp_path / "c")]) == EXIT_OK
    for r in csv.DictReader(open(tmp_path / "h" / "elements.csv")):
        float(r["a_re"]), float(r["displacement"])
    assert main(["exhaustion", "--n", "1", "--out", str(tmp_path / "e")]) == EXIT_OK


def test_module_entry_point_subprocess(tmp_path):
    r = subprocess.run([sys.executable, "-m", "poincare_kernel", "verify-torus", "--n", "0", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == EXIT_CONFIG and "error" in r.stderr
    r = subprocess.run([sys.executable, "-m", "poincare_kernel", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "verify-fuchsian" in r.stdout


@pytest.mark.slow
def test_cli_verify_fuchsian_full(tmp_path):
    assert main(["verify-fuchsian", "--full", "--n", "4", "--out", str(tmp_path)]) == EXIT_OK
    rows = list(csv.DictReader(open(tmp_path / "summary.csv")))
    names = {r["experiment"] for r in rows}
    assert {"theorem1", "invariants", "idempotency", "surjectivity", "truncation_doubling"} <= names
    assert all(r["passed"] == "True" for r in rows)
