"""CLI contract: config precedence, schemas, determinism, exit codes."""

import json

import numpy as np
import pytest

from pdmradial.cli import (
    CSV_HEADER,
    RunConfig,
    load_config,
    main,
)
from pdmradial.errors import ConfigError


def run_cli(args, tmp_path, monkeypatch, name="out.csv"):
    """Run the CLI in-process with outputs under tmp_path."""
    monkeypatch.chdir(tmp_path)
    out = tmp_path / name
    code = main(args + ["--output", str(out)])
    return code, out


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def test_defaults():
    config = load_config(None, {}, "solve")
    assert (config.dim, config.ell, config.lam, config.omega) == (3, 0, 0.1, 1.0)
    assert config.levels == 6
    assert config.ordering == "both" and config.method == "both"
    assert config.format == "csv"


def test_flag_overrides_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("lambda = 0.1\nlevels = 4  # trailing comment\n\n# full-line comment\n")
    config = load_config(str(cfg), {"lam": 0.2}, "solve")
    assert config.lam == 0.2  # flag wins
    assert config.levels == 4  # file wins over default


def test_config_file_errors(tmp_path):
    bad_key = tmp_path / "a.cfg"
    bad_key.write_text("lamda = 0.1\n")
    with pytest.raises(ConfigError, match="unknown config key: lamda"):
        load_config(str(bad_key), {}, "solve")

    bad_num = tmp_path / "b.cfg"
    bad_num.write_text("omega = fast\n")
    with pytest.raises(ConfigError, match="omega"):
        load_config(str(bad_num), {}, "solve")

    bad_line = tmp_path / "c.cfg"
    bad_line.write_text("omega 2.0\n")
    with pytest.raises(ConfigError, match="key=value"):
        load_config(str(bad_line), {}, "solve")

    with pytest.raises(ConfigError, match="cannot read"):
        load_config(str(tmp_path / "missing.cfg"), {}, "solve")


def test_invariant_violations_rejected():
    with pytest.raises(ConfigError, match="lambda"):
        load_config(None, {"lam": -1.0}, "solve")
    with pytest.raises(ConfigError, match="ordering"):
        load_config(None, {"ordering": "midpoint"}, "solve")
    with pytest.raises(ConfigError, match="grid_points"):
        load_config(None, {"grid_points": 10}, "solve")


def test_exit_code_1_on_bad_arguments(capsys):
    assert main(["solve", "--lambda", "-1"]) == 1
    assert "lambda" in capsys.readouterr().err
    assert main(["solve", "--no-such-flag"]) == 1
    assert main(["frobnicate"]) == 1


# ---------------------------------------------------------------------------
# outputs
# ---------------------------------------------------------------------------

def test_csv_schema_and_values(tmp_path, monkeypatch):
    code, out = run_cli(
        ["compare", "--dim", "3", "--ell", "0", "--lambda", "0", "--omega", "1",
         "--levels", "3"],
        tmp_path, monkeypatch,
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    rows = [line.split(",") for line in lines[1:]]
    assert len(rows) == 12  # 3 levels x 2 orderings x 2 methods
    header = CSV_HEADER.split(",")
    e_col = header.index("E")
    n_col = header.index("n")
    nu_col = header.index("nu")
    l_col = header.index("l")
    dim_col = header.index("N")
    for row in rows:
        n, ell, dim = int(row[n_col]), int(row[l_col]), int(row[dim_col])
        assert float(row[nu_col]) == 2 * n + ell + dim / 2
        assert float(row[e_col]) == pytest.approx(2 * n + ell + dim / 2, rel=1e-7)
    # same level from both orderings within 1e-8 at constant mass
    for n in range(3):
        values = [float(r[e_col]) for r in rows if int(r[n_col]) == n]
        assert max(values) - min(values) <= 1e-8


def test_solve_reference_value(tmp_path, monkeypatch):
    code, out = run_cli(
        ["solve", "--ordering", "naive", "--lambda", "0.1", "--levels", "1"],
        tmp_path, monkeypatch,
    )
    assert code == 0
    rows = out.read_text().splitlines()[1:]
    assert len(rows) == 2  # fd + shoot
    for row in rows:
        assert float(row.split(",")[8]) == pytest.approx(1.291781, abs=1e-6)


def test_sweep_cardinality_and_order(tmp_path, monkeypatch):
    code, out = run_cli(
        ["sweep", "--lambda-list", "0.1,0.2", "--ell-list", "0,1", "--levels", "2",
         "--ordering", "naive", "--method", "fd"],
        tmp_path, monkeypatch,
    )
    assert code == 0
    rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
    assert len(rows) == 8  # 2 lambdas x 2 ells x 2 levels
    keys = [(float(r[6]), int(r[3]), int(r[4])) for r in rows]  # (lambda, l, n)
    assert keys == sorted(keys)


def test_json_document_and_round_trip(tmp_path, monkeypatch):
    code, out = run_cli(
        ["compare", "--lambda", "0.1", "--levels", "2", "--format", "json"],
        tmp_path, monkeypatch, name="out.json",
    )
    assert code == 0
    text = out.read_text()
    doc = json.loads(text)
    assert set(doc) == {"manifest", "results", "comparisons", "notes"}
    assert doc["manifest"]["tool_version"]
    assert doc["manifest"]["effective_config"]["lambda"] == 0.1
    assert doc["manifest"]["effective_config"]["hbar"] == 1.0
    assert "timestamp" not in doc["manifest"]  # timestamps live in the sidecar
    assert len(doc["results"]) == 8
    assert doc["comparisons"]["levels"][0]["orderings_differ"] is True
    # canonical serialization: parse + re-serialize reproduces the bytes
    assert json.dumps(doc, indent=2) + "\n" == text


def test_manifest_sidecar(tmp_path, monkeypatch):
    code, out = run_cli(["solve", "--levels", "1", "--method", "fd",
                         "--ordering", "naive"], tmp_path, monkeypatch)
    assert code == 0
    manifest = json.loads((tmp_path / "out.manifest.json").read_text())
    assert manifest["tool_version"]
    assert "timestamp" in manifest
    assert manifest["effective_config"]["levels"] == 1
    assert manifest["data_files"] == ["out.csv"]


def test_byte_determinism(tmp_path, monkeypatch):
    # identical config -> byte-identical data files
    args = ["compare", "--lambda", "0.1", "--levels", "2"]
    _, out = run_cli(args, tmp_path, monkeypatch, name="a.csv")
    first = out.read_bytes()
    _, out = run_cli(args, tmp_path, monkeypatch, name="a.csv")
    assert out.read_bytes() == first
    args_json = args + ["--format", "json"]
    _, j = run_cli(args_json, tmp_path, monkeypatch, name="a.json")
    first_json = j.read_bytes()
    _, j = run_cli(args_json, tmp_path, monkeypatch, name="a.json")
    assert j.read_bytes() == first_json


def test_exit_code_2_numerical_failure(tmp_path, monkeypatch):
    # requesting levels that crowd the continuum threshold cannot be
    # resolved; the run still writes its (empty) data file
    code, out = run_cli(["solve", "--lambda", "0.1", "--levels", "40"],
                        tmp_path, monkeypatch)
    assert code == 2
    assert out.read_text().splitlines()[0] == CSV_HEADER


def test_exit_code_2_partial_results(tmp_path, monkeypatch):
    # a deliberately tiny box cannot hold the higher requested levels:
    # the solved levels are still written, the missing ones are flagged
    code, out = run_cli(
        ["solve", "--lambda", "0.5", "--levels", "8", "--r-max", "4",
         "--grid-points", "400", "--method", "shoot", "--ordering", "naive"],
        tmp_path, monkeypatch,
    )
    assert code == 2
    rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
    assert len(rows) == 8
    solved = [r for r in rows if r[8] != "nan"]
    failed = [r for r in rows if r[8] == "nan"]
    assert solved and failed
    for row in failed:
        assert row[11] == "false"  # trusted column


def test_compare_at_lam_zero_reports_unbounded_threshold(tmp_path, monkeypatch):
    code, out = run_cli(
        ["compare", "--lambda", "0", "--levels", "1", "--format", "json"],
        tmp_path, monkeypatch, name="zero.json",
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["comparisons"]["threshold"] is None
    assert doc["comparisons"]["threshold_unbounded"] is True
    assert "accumulation" not in doc["comparisons"]


def test_exit_code_3_unwritable_path(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    code = main(["solve", "--levels", "1", "--output",
                 str(tmp_path / "no-such-dir" / "out.csv")])
    assert code == 3
    assert "I/O failure" in capsys.readouterr().err


def test_outdir_environment_variable(tmp_path, monkeypatch):
    outdir = tmp_path / "results"
    outdir.mkdir()
    monkeypatch.setenv("PDMRADIAL_OUTDIR", str(outdir))
    monkeypatch.chdir(tmp_path)
    code = main(["solve", "--levels", "1", "--ordering", "naive", "--method", "fd",
                 "--output", "rel.csv"])
    assert code == 0
    assert (outdir / "rel.csv").exists()
    assert not (tmp_path / "rel.csv").exists()


def test_eigenfunction_dump(tmp_path, monkeypatch):
    code, out = run_cli(
        ["solve", "--levels", "1", "--lambda", "0.1", "--ordering", "naive",
         "--grid-points", "500", "--dump-eigenfunctions"],
        tmp_path, monkeypatch,
    )
    assert code == 0
    dumps = sorted(tmp_path.glob("out-eigf-*.csv"))
    assert len(dumps) == 2  # fd + shoot
    for path in dumps:
        lines = path.read_text().splitlines()
        assert lines[0] == "r,R"
        r, big_r = zip(*(map(float, line.split(",")) for line in lines[1:]))
        assert all(b >= a for a, b in zip(r, r[1:]))
        norm = np.trapezoid(np.array(big_r) ** 2, np.array(r))
        assert norm == pytest.approx(1.0, rel=1e-2)


def test_converge_command(tmp_path, monkeypatch):
    code, out = run_cli(
        ["converge", "--lambda", "0.1", "--ordering", "naive", "--format", "json"],
        tmp_path, monkeypatch, name="conv.json",
    )
    assert code == 0
    doc = json.loads(out.read_text())
    entry = doc["comparisons"]["convergence"]["naive"]
    assert entry["fd_order"] == pytest.approx(2.0, abs=0.2)
    assert entry["shoot_order"] == pytest.approx(4.0, abs=0.5)
    assert len(doc["results"]) == 6  # 3 grids x 2 methods


def test_reduced_accuracy_tag_in_json(tmp_path, monkeypatch):
    code, out = run_cli(
        ["solve", "--dim", "2", "--ell", "0", "--lambda", "0", "--levels", "1",
         "--grid-points", "500", "--format", "json"],
        tmp_path, monkeypatch, name="eta0.json",
    )
    assert code == 0
    doc = json.loads(out.read_text())
    for row in doc["results"]:
        assert "reduced-accuracy-boundary" in row["tags"]


def test_runconfig_accessors():
    config = RunConfig(command="solve", ordering="bdd", method="shoot")
    assert [o.value for o in config.orderings()] == ["bdd"]
    assert config.methods() == ("shoot",)
