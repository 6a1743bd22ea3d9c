import json

import pytest

from cli import EXIT_ERROR, EXIT_OK, build_parser, collect_flags, main
from constants import CONSTANT_HEADER, CONTOUR_HEADER, DENSITY_HEADER, EXPECTED_HEADER, ZERO_HEADER
from utils.common import canonical_json, read_csv


def _run(argv, path):
    code = main(argv + ["--out", str(path), "--quiet"])
    return code, path.read_text()


def test_asymptote_constants_table(tmp_path):
    code, text = _run(["asymptote", "--alpha", "0.5,0.8"], tmp_path / "c.csv")
    assert code == EXIT_OK
    assert text.startswith("# ")
    rows = read_csv(text)
    assert rows[0] == CONSTANT_HEADER
    assert float(rows[1][1]) == pytest.approx(0.1426990817, abs=1e-10)
    assert float(rows[1][2]) == pytest.approx(1.0)
    assert float(rows[2][2]) == pytest.approx(2.0)


def test_json_table_format(tmp_path):
    code, text = _run(["asymptote", "--alpha", "0.5", "--format", "json"], tmp_path / "c.json")
    assert code == EXIT_OK
    payload = json.loads(text)
    assert payload["header"] == CONSTANT_HEADER
    assert payload["meta"]["config"]["command"] == "asymptote"
    assert payload["meta"]["config"]["format"] == "json"


def test_expected_analytic_case(tmp_path):
    code, text = _run(["expected", "--m", "0", "--n", "5"], tmp_path / "e.csv")
    assert code == EXIT_OK
    rows = read_csv(text)
    assert rows[0] == EXPECTED_HEADER
    assert float(rows[1][3]) == pytest.approx(5.0, rel=1e-6)
    assert float(rows[1][5]) == pytest.approx(1.0, rel=1e-6)


def test_expected_rows_sorted_by_n(tmp_path):
    code, text = _run(["expected", "--alpha", "0.5", "--n", "40,10,20"], tmp_path / "e.csv")
    assert code == EXIT_OK
    assert [int(row[0]) for row in read_csv(text)[1:]] == [10, 20, 40]


def test_density_profile(tmp_path):
    code, text = _run(["density", "--n", "20", "--m", "10", "--r-grid", "0:2:5"], tmp_path / "d.csv")
    assert code == EXIT_OK
    rows = read_csv(text)
    assert rows[0] == DENSITY_HEADER
    assert [float(row[0]) for row in rows[1:]] == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert float(rows[1][1]) == 0.0


def test_montecarlo_document_is_reproducible(tmp_path):
    argv = ["montecarlo", "--n", "1", "--m", "1", "--trials", "5", "--seed", "3"]
    code, first = _run(argv + ["--zeros-out", str(tmp_path / "z.csv")], tmp_path / "a.json")
    assert code == EXIT_OK
    document = json.loads(first)
    assert document["mean"] == 1.0
    assert document["variance"] == 0.0
    assert document["histogram"] == [{"count": 1, "freq": 5}]
    assert document["kacrice"] == pytest.approx(1.0, rel=1e-8)
    zeros = read_csv((tmp_path / "z.csv").read_text())
    assert zeros[0] == ZERO_HEADER
    assert len(zeros) == 6

    _, second = _run(argv + ["--zeros-out", str(tmp_path / "z.csv")], tmp_path / "b.json")
    assert canonical_json(json.loads(first)) == canonical_json(json.loads(second))


MONTECARLO_KEYS = {
    "meta", "spec", "trials", "certified_trials", "mean", "variance", "stderr", "mean_plus", "mean_minus",
    "failures", "resamples", "histogram", "kacrice", "z_score", "variance_over_n2", "valid", "notes",
}


def test_montecarlo_document_keys(tmp_path):
    code, text = _run(["montecarlo", "--n", "2", "--m", "1", "--trials", "3"], tmp_path / "mc.json")
    assert code == EXIT_OK
    document = json.loads(text)
    assert set(document) == MONTECARLO_KEYS
    assert set(document["meta"]) == {"version", "schema", "config", "generated_at"}
    assert set(document["spec"]) == {"model", "n", "m", "alpha", "seed"}
    assert all(set(entry) == {"count", "freq"} for entry in document["histogram"])



def test_config_file_precedence(tmp_path):
    config = tmp_path / "run.toml"
    config.write_text("seed = 7\n\n[montecarlo]\ntrials = 4\n")
    _, text = _run(["montecarlo", "--n", "1", "--m", "1", "--config", str(config)], tmp_path / "a.json")
    meta = json.loads(text)["meta"]["config"]
    assert (meta["seed"], meta["trials"]) == (7, 4)
    _, text = _run(["montecarlo", "--n", "1", "--m", "1", "--config", str(config), "--seed", "9"], tmp_path / "b.json")
    meta = json.loads(text)["meta"]["config"]
    assert (meta["seed"], meta["trials"]) == (9, 4)


def test_lemniscate_exports(tmp_path):
    pgm, contours = tmp_path / "mask.pgm", tmp_path / "contours.csv"
    argv = ["lemniscate", "--n", "4", "--m", "4", "--resolution", "64", "--half-width", "1.5",
            "--pgm-out", str(pgm), "--contour-out", str(contours)]
    code, text = _run(argv, tmp_path / "l.json")
    assert code == EXIT_OK
    document = json.loads(text)
    assert document["window"]["resolution"] == 64
    assert document["bound"] == 3
    assert pgm.read_bytes().startswith(b"P5")
    rows = read_csv(contours.read_text())
    assert rows[0] == CONTOUR_HEADER
    assert len(rows) - 1 == 2 * document["segments"]


def test_lemniscate_survey(tmp_path):
    code, text = _run(["lemniscate", "--n", "4", "--m", "4", "--trials", "2", "--resolution", "64"], tmp_path / "s.json")
    assert code == EXIT_OK
    document = json.loads(text)
    assert len(document["counts"]) == 2
    assert document["violations"] == sum(c > 3 for c in document["counts"])


def test_selftest_quick_passes(tmp_path):
    code, text = _run(["selftest", "--quick"], tmp_path / "s.json")
    document = json.loads(text)
    assert document["passed"], document["suites"]
    assert code == EXIT_OK
    assert {s["name"] for s in document["suites"]} >= {"tail_ratio_vs_exact", "tail_identity", "conditional_moment_oracle"}


@pytest.mark.parametrize("argv", [
    ["expected", "--n", "5"],
    ["expected", "--n", "5", "--m", "6"],
    ["expected", "--n", "10", "--m", "5", "--alpha", "0.5"],
    ["asymptote", "--alpha", "1.5"],
    ["montecarlo", "--n", "25", "--m", "2", "--trials", "1"],
    ["density", "--n", "5,6", "--m", "2"],
    ["montecarlo", "--n", "1", "--m", "1", "--config", "missing.toml"],
])
def test_errors_exit_with_two(argv, tmp_path, capsys):
    assert main(argv + ["--out", str(tmp_path / "x"), "--quiet"]) == EXIT_ERROR
    assert "error:" in capsys.readouterr().err


def test_parser_requires_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_collect_flags_nests_sections():
    args = build_parser().parse_args(["lemniscate", "--n", "4", "--m", "4", "--resolution", "128", "--center", "0.5+0.5j"])
    flags = collect_flags(args)
    assert flags["window"] == {"resolution": 128, "center": [0.5, 0.5]}
    assert flags["n"] == [4]
    assert "trials" not in flags
