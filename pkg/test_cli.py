import io
import json

import numpy as np
import pandas as pd
import pytest

from cxhyp import __version__
from cxhyp.cli import CSV_COLUMNS, main, parse_config
from cxhyp.errors import ParseError
from cxhyp.geodesic_normal_form import normal_form_matrix
from cxhyp.group_enum import octagon_group
from cxhyp.indefinite_linalg import matrix_to_json, random_element
from cxhyp.utils import to_pairs


def _write(path, obj):
    path.write_text(json.dumps(obj), encoding="utf-8")
    return str(path)


def test_parse_config_merges_file_defaults():
    cfg = parse_config(["sweep"])
    assert (cfg.k_min, cfg.k_max, cfg.k_step) == (50, 400, 50)
    assert cfg.lam == 2.0 and cfg.fmt == "csv"
    cfg = parse_config(["sweep", "--lambda", "3", "--k-min", "10", "--k-max", "40", "--geometric"])
    assert cfg.lam == 3.0
    assert cfg.k_range() == [10, 20, 40]


def test_parse_config_rejects_bad_input():
    with pytest.raises(ParseError):
        parse_config([])
    with pytest.raises(ParseError, match="empty k range"):
        parse_config(["sweep", "--k-min", "10", "--k-max", "5"])
    with pytest.raises(ParseError):
        parse_config(["enum"])
    with pytest.raises(SystemExit) as exc:
        parse_config(["sweep", "--format", "xml"])
    assert exc.value.code == 1


def test_sweep_csv_is_deterministic(capsys):
    argv = ["sweep", "--k-min", "20", "--k-max", "40", "--k-step", "10", "--format", "csv"]
    assert main(argv) == 0
    text = capsys.readouterr().out
    assert main(argv) == 0
    assert capsys.readouterr().out == text
    lines = text.splitlines()
    assert lines[0] == f"# cxhyp {__version__}"
    assert json.loads(lines[1][len("# config: "):])["k_min"] == 20
    df = pd.read_csv(io.StringIO(text), comment="#")
    assert list(df.columns) == CSV_COLUMNS
    assert df["k"].tolist() == [20, 30, 40]
    assert ((df["ratio"] - 1.0).abs() < 0.05).all()
    assert ((df["residual"] - (df["j2"] - df["asymptote"])).abs() <= 1e-12 * df["j2"]).all()


def test_sweep_writes_out_file(tmp_path):
    out = tmp_path / "sweep.json"
    assert main(["sweep", "--k-min", "20", "--k-max", "20", "--format", "json", "--out", str(out)]) == 0
    rows = json.loads(out.read_text(encoding="utf-8"))["rows"]
    assert [r["k"] for r in rows] == [20]


def test_sweep_precondition_failure_keeps_partial_output(tmp_path, capsys):
    out = tmp_path / "bad.csv"
    code = main(["sweep", "--k-min", "10", "--k-max", "20", "--k-step", "10",
                 "--lambda", "1.0", "--format", "csv", "--out", str(out)])
    assert code == 2
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["error"] == "DomainError"
    assert out.read_text(encoding="utf-8").startswith("# cxhyp")


def test_normal_form_command(tmp_path, capsys):
    g = random_element(3, 0.4, 1, real=True)
    m = g @ normal_form_matrix(2.0, 1) @ g.inverse()
    path = _write(tmp_path / "m.json", matrix_to_json(m.entries))
    assert main(["normal-form", path]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["version"] == __version__
    assert doc["config"]["command"] == "normal-form"
    assert doc["decomposition"]["lambda"] == pytest.approx(2.0, abs=1e-8)


def test_normal_form_exit_codes(tmp_path, capsys):
    ident = _write(tmp_path / "id.json", matrix_to_json([[1, 0], [0, 1]]))
    assert main(["normal-form", ident]) == 2
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "NotHyperbolicError"
    assert main(["normal-form", str(tmp_path / "missing.json")]) == 1
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    assert main(["normal-form", str(broken)]) == 1


def test_series_point_default(capsys):
    assert main(["series"]) == 0
    doc = json.loads(capsys.readouterr().out)
    result = doc["result"]
    assert result["converged"]
    assert result["truncation"] == 6
    assert result["value"][0] > 0
    assert result["lambda"] == pytest.approx(2.0)


@pytest.mark.parametrize('kind', ["geodesic", "inner", "poincare"])
def test_series_kinds(kind, capsys):
    argv = ["series", "--k", "4", "--trunc", "8", "--series", kind, "--z", "[[0.1, 0.2]]"]
    assert main(argv) == 0
    assert json.loads(capsys.readouterr().out)["config"]["series"] == kind


def test_series_not_converged_exit_code(capsys):
    assert main(["series", "--k", "2", "--trunc", "1"]) == 3
    captured = capsys.readouterr()
    assert json.loads(captured.out)["result"]["converged"] is False
    assert json.loads(captured.err.strip().splitlines()[-1])["error"] == "ConvergenceError"


def test_series_bad_point(capsys):
    assert main(["series", "--k", "4", "--z", "[[0.1, 0.2"]) == 1
    assert main(["series", "--k", "4", "--z", "[[0.1, 0.2], [0, 0]]"]) == 1
    assert main(["series", "--k", "4", "--z", "[[2.0, 0.0]]"]) == 2


def test_series_with_generators_file(tmp_path, capsys):
    path = _write(tmp_path / "gens.json", [matrix_to_json(normal_form_matrix(2.0, 1).entries)])
    assert main(["series", "--k", "20", "--gens", path, "--trunc", "4"]) == 0
    assert json.loads(capsys.readouterr().out)["result"]["converged"]


def test_enum_octagon(capsys, tmp_path):
    assert main(["enum", "--octagon", "--L", "1"]) == 0
    ball = json.loads(capsys.readouterr().out)["ball"]
    assert ball["size"] == 9
    assert sorted(e["word"] for e in ball["elements"])[1:] == sorted("abcdABCD")
    empty = _write(tmp_path / "empty.json", [])
    assert main(["enum", "--gens", empty]) == 1


@pytest.mark.parametrize('command', ["sweep", "normal-form", "enum"])
def test_global_sections_stay_out_of_run_config(command):
    argv = {"sweep": ["sweep"], "normal-form": ["normal-form", "m.json"], "enum": ["enum", "--octagon"]}[command]
    cfg = parse_config(argv)
    assert cfg.series == "point"
    assert not any(isinstance(v, dict) for v in cfg.to_dict().values())


def test_shipped_configs_run_every_command(tmp_path, capsys):
    assert main(["sweep", "--k-min", "20", "--k-max", "20", "--format", "csv"]) == 0
    path = _write(tmp_path / "g.json", matrix_to_json(normal_form_matrix(2.0, 1).entries))
    assert main(["normal-form", path]) == 0
    assert main(["enum", "--octagon", "--L", "1"]) == 0
    assert main(["series"]) == 0
    assert "ParseError" not in capsys.readouterr().err


def test_series_point_skips_axis_decomposition(tmp_path, capsys):
    gens = [matrix_to_json(g.entries) for g in octagon_group()[1:4]]
    path = _write(tmp_path / "oct.json", gens)
    assert main(["series", "--k", "40", "--trunc", "1", "--series", "point", "--gens", path]) == 0
    assert json.loads(capsys.readouterr().out)["result"]["lambda"] is None
    assert main(["series", "--k", "40", "--trunc", "1", "--gens", path, "--axis", "3"]) == 1


def test_series_seed_conjugates_model_axis(capsys):
    argv = ["series", "--k", "4", "--trunc", "8", "--series", "inner"]
    assert main(argv) == 0
    plain = json.loads(capsys.readouterr().out)["result"]
    assert main(argv + ["--seed", "3"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["config"]["seed"] == 3
    assert doc["result"]["lambda"] == pytest.approx(2.0, abs=1e-8)
    assert doc["result"]["value"][0] == pytest.approx(plain["value"][0], rel=1e-6)


def test_oversized_matrix_is_a_usage_error(tmp_path, capsys):
    path = _write(tmp_path / "big.json", {"n": 16, "entries": to_pairs(np.eye(17))})
    assert main(["normal-form", path]) == 1
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "DimensionError"
