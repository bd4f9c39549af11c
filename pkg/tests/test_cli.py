import io
import json

import pytest

from elimtemplate.cli import EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main


def run(argv):
    out = io.StringIO()
    code = main(argv, out=out)
    return code, out.getvalue()


@pytest.fixture(scope="module")
def toy_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "toy.gaps.json"
    code, out = run(["generate", "toy_univariate", "-o", str(path)])
    assert code == EXIT_OK
    assert "|B|         2" in out
    return path


@pytest.fixture(scope="module")
def five_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "relpose_5pt.gaps.json"
    code, out = run(["generate", "relpose_5pt", "--trials", "5", "--seed", "42", "-o", str(path)])
    assert code == EXIT_OK and "|B|         10" in out
    return path


def test_generate_unknown_problem(capsys):
    code, _ = run(["generate", "nope"])
    assert code == EXIT_USAGE
    assert "unknown problem" in capsys.readouterr().err


def test_generate_rejects_bad_prime(tmp_path):
    code, _ = run(["generate", "toy_univariate", "--p", "30012", "-o", str(tmp_path / "x")])
    assert code == EXIT_USAGE


def test_generate_default_output_name(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, _ = run(["generate", "toy_univariate"])
    assert code == EXIT_OK
    assert (tmp_path / "toy_univariate.gaps.json").exists()


def test_seed_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("GAPS_SEED", "17")
    run(["generate", "toy_conics", "-o", str(tmp_path / "a.json")])
    monkeypatch.delenv("GAPS_SEED")
    run(["generate", "toy_conics", "--seed", "17", "-o", str(tmp_path / "b.json")])
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert json.loads((tmp_path / "a.json").read_text())["metadata"]["seed"] == 17


def test_solve_toy_instance(toy_file, tmp_path):
    inst = tmp_path / "a4.json"
    inst.write_text('{"a": 4}')
    code, out = run(["solve", str(toy_file), str(inst), "--json"])
    assert code == EXIT_OK
    sols = json.loads(out)["solutions"]
    assert sorted(s["values"]["x"][0] for s in sols) == pytest.approx([-2, 2])
    assert all(s["real"] for s in sols)
    code, out = run(["solve", str(toy_file), str(inst), "--symmetry", "representatives"])
    assert "1 solution(s)" in out


def test_solve_malformed_instance(toy_file, tmp_path, capsys):
    inst = tmp_path / "bad.json"
    inst.write_text('{"a": \n')
    code, _ = run(["solve", str(toy_file), str(inst)])
    assert code == EXIT_USAGE
    err = capsys.readouterr().err
    assert "bad.json:2:1" in err and "offset" in err


def test_solve_missing_argument(toy_file, tmp_path):
    inst = tmp_path / "b.json"
    inst.write_text('{"b": 4}')
    assert run(["solve", str(toy_file), str(inst)])[0] == EXIT_USAGE


def test_solve_needs_one_source(toy_file):
    assert run(["solve", str(toy_file)])[0] == EXIT_USAGE


def test_solve_random_five_point(five_file):
    code, out = run(["solve", str(five_file), "--random", "--seed", "7", "--json"])
    assert code == EXIT_OK
    assert json.loads(out)["ground_truth_error"] <= 1e-6
    code, out = run(["solve", str(five_file), "--random", "--seed", "7"])
    assert "ground truth matched" in out


def test_solve_degenerate_exit_code(five_file, tmp_path):
    inst = tmp_path / "zero.json"
    inst.write_text(json.dumps({"NE": [[[0.0] * 3] * 3] * 4}))
    assert run(["solve", str(five_file), str(inst)])[0] == EXIT_NUMERIC


def test_bench_table(five_file, toy_file):
    code, out = run(["bench", str(five_file), "50", "--json"])
    assert code == EXIT_OK
    table = json.loads(out)
    assert table["eigen"]["failure_rate"] < 0.01
    assert table["charpoly"]["count"] == 50
    code, out = run(["bench", str(toy_file), "20", "--json"])
    assert json.loads(out)["eigen"]["median_log10_residual"] <= -10
    code, out = run(["bench", str(toy_file), "0"])
    assert code == EXIT_OK and len(out.strip().splitlines()) == 1


def test_inspect(toy_file, tmp_path, capsys):
    code, out = run(["inspect", str(toy_file)])
    assert code == EXIT_OK
    assert "basis        2: x 1" in out
    assert "1 * f0" in out
    assert "sign flip of {x}" in out
    assert run(["inspect", str(tmp_path / "missing.json")])[0] == EXIT_USAGE
    trunc = tmp_path / "trunc.json"
    trunc.write_bytes(toy_file.read_bytes()[:100])
    assert run(["inspect", str(trunc)])[0] == EXIT_USAGE
    assert "offset" in capsys.readouterr().err
