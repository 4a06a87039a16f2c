import json

import numpy as np
import pytest

from stqp import write_matrix
from stqp.cli import main


def run_cli(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:  # argparse errors
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


def test_generate_writes_format_and_echo(tmp_path, capsys):
    out = tmp_path / "m.txt"
    code, stdout, _ = run_cli(
        ["generate", "--ensemble", "goe", "--n", "4", "--seed", "1", "--out", str(out)], capsys
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "4"
    assert len(lines) == 5
    echo = json.loads(stdout)
    assert echo["ensemble"] == {"variant": "goe", "params": {}}

    first = out.read_bytes()
    code, _, _ = run_cli(
        ["generate", "--ensemble", "goe", "--n", "4", "--seed", "1", "--out", str(out)], capsys
    )
    assert code == 0
    assert out.read_bytes() == first  # byte-identical regeneration


def test_generate_rejects_nonpositive_n(tmp_path, capsys):
    code, _, _ = run_cli(
        ["generate", "--ensemble", "goe", "--n", "0", "--seed", "1", "--out", str(tmp_path / "x")],
        capsys,
    )
    assert code == 2


def test_solve_two_by_two_certified(tmp_path, capsys):
    path = tmp_path / "m.txt"
    write_matrix(np.array([[0.0, -1.0], [-1.0, 0.0]]), path)
    code, stdout, _ = run_cli(["solve", "--input", str(path)], capsys)
    assert code == 0
    sol = json.loads(stdout)
    assert sol["value"] == pytest.approx(-0.5)
    assert sol["certified_exact_dnn"] is True
    assert sol["support"] == [1, 2]


def _five_component_matrix():
    q = np.full((6, 6), 2.0)
    np.fill_diagonal(q, 1.0)
    for i, j in ((0, 1), (1, 2), (2, 3), (3, 4)):
        q[i, j] = q[j, i] = 0.5
    return q


def test_solve_uncertified_exit_code(tmp_path, capsys):
    path = tmp_path / "m.txt"
    write_matrix(_five_component_matrix(), path)
    code, stdout, _ = run_cli(["solve", "--input", str(path)], capsys)
    assert code == 3
    sol = json.loads(stdout)
    assert sol["certified_exact_dnn"] is False
    assert max(sol["component_sizes"]) == 5


def test_solve_capacity_exit_code(tmp_path, capsys):
    path = tmp_path / "m.txt"
    write_matrix(_five_component_matrix(), path)
    code, _, err = run_cli(["solve", "--input", str(path), "--support-cap", "4"], capsys)
    assert code == 4
    assert "component" in err


def test_solve_missing_file(capsys):
    code, _, err = run_cli(["solve", "--input", "/nonexistent/m.txt"], capsys)
    assert code == 2
    assert "error" in err


def test_solve_asymmetric_file(tmp_path, capsys):
    path = tmp_path / "m.txt"
    path.write_text("2\n1 2\n3 4\n")
    code, _, err = run_cli(["solve", "--input", str(path)], capsys)
    assert code == 2
    assert "symmetric" in err


def test_solve_inline_generation(capsys):
    code, stdout, _ = run_cli(["solve", "--ensemble", "goe", "--n", "6", "--seed", "9"], capsys)
    assert code in (0, 3)
    sol = json.loads(stdout)
    assert sol["n"] == 6


def test_simulate_threads_do_not_change_summary(capsys):
    argv = ["simulate", "--ensemble", "goe", "--n", "12", "--trials", "4000", "--seed", "3", "--json"]
    code1, out1, _ = run_cli(argv + ["--threads", "1"], capsys)
    code8, out8, _ = run_cli(argv + ["--threads", "8"], capsys)
    assert code1 == code8 == 0
    assert out1 == out8


def test_simulate_writes_trial_records(tmp_path, capsys):
    path = tmp_path / "records.jsonl"
    code, stdout, _ = run_cli(
        [
            "simulate",
            "--ensemble",
            "shifted-exponential",
            "--n",
            "6",
            "--trials",
            "25",
            "--seed",
            "2",
            "--out",
            str(path),
            "--json",
        ],
        capsys,
    )
    assert code == 0
    lines = path.read_text().splitlines()
    assert len(lines) == 25
    rec = json.loads(lines[0])
    assert rec["trial"] == 0
    assert {"m_n", "q_n", "max_component", "edge_count", "certified"} <= set(rec)
    summary = json.loads(stdout)
    assert summary["trials"] == 25


def test_moments_quadrature_table(capsys):
    code, stdout, _ = run_cli(
        ["moments", "--ensemble", "goe", "--power", "4", "--method", "quadrature", "--n-grid", "50,100,200"],
        capsys,
    )
    assert code == 0
    lines = stdout.strip().splitlines()
    assert len(lines) == 4  # header + three rows
    assert "quadrature" in lines[1]


def test_moments_json_output(capsys):
    code, stdout, _ = run_cli(
        [
            "moments",
            "--ensemble",
            "shifted-exponential",
            "--method",
            "closed-form",
            "--n-grid",
            "100,200",
            "--json",
        ],
        capsys,
    )
    assert code == 0
    rows = json.loads(stdout)
    assert len(rows) == 2
    assert rows[0]["method"] == "closed_form"
    assert rows[0]["scaled"] == pytest.approx(100.0**5 * rows[0]["estimate"])


def test_moments_closed_form_requires_shifted_exponential(capsys):
    code, _, _ = run_cli(
        ["moments", "--ensemble", "goe", "--method", "closed-form", "--n-grid", "100"], capsys
    )
    assert code == 2


def test_check_tail_verdict(capsys):
    code, stdout, _ = run_cli(
        [
            "check-tail",
            "--ensemble",
            "wigner",
            "--gamma2",
            "1",
            "--sigma2",
            "0.5",
            "--n-grid",
            "50,100,200",
        ],
        capsys,
    )
    assert code == 0
    assert "SATISFIED" in stdout
    assert "decreasing" in stdout


def test_check_tail_json(capsys):
    code, stdout, _ = run_cli(
        [
            "check-tail",
            "--ensemble",
            "heavy-tail",
            "--alpha-d",
            "2",
            "--alpha-o",
            "2",
            "--n-grid",
            "50,100,200",
            "--json",
        ],
        capsys,
    )
    assert code == 0
    rep = json.loads(stdout)
    assert rep["theoretical"] == "VIOLATED"
    assert rep["empirical"] == "increasing"


def test_oracle_subcommand(tmp_path, capsys):
    path = tmp_path / "m.txt"
    write_matrix(np.array([[0.0, -1.0], [-1.0, 0.0]]), path)
    code, stdout, _ = run_cli(["oracle", "--input", str(path)], capsys)
    assert code == 0
    out = json.loads(stdout)
    assert out["value"] == pytest.approx(-0.5)
    assert out["support"] == [1, 2]


def test_oracle_hidden_from_help(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    out, _ = capsys.readouterr()
    assert "generate" in out
    assert "oracle" not in out


def test_bad_ensemble_parameters_exit_usage(capsys):
    code, _, _ = run_cli(
        ["check-tail", "--ensemble", "wigner", "--gamma2", "-1", "--n-grid", "50,100,200"], capsys
    )
    assert code == 2
