import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from segfisher import matcalc as mc
from segfisher.cli import main


def write_matrix(path, A):
    path.write_text(json.dumps(mc.matrix_to_json(np.asarray(A, dtype=float))))
    return str(path)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_info_grid_circulant(capsys):
    code, out, _ = run(["info-grid", "--family", "gaussian", "--preset", "circulant", "--d", "4", "--theta-grid", "-0.4:0.4:5"], capsys)
    assert code == 0
    table = rows(out)
    assert [r["theta"] for r in table] == ["-0.4", "-0.2", "0", "0.2", "0.4"]
    mid = table[2]
    assert float(mid["J_trace"]) == pytest.approx(4.0) and float(mid["J_quadratic"]) == pytest.approx(4.0)
    assert all(float(r["max_rel_disagreement"]) < 1e-5 for r in table)
    assert list(table[0]) == ["theta", "status", "J_quadratic", "J_trace", "J_logdet", "J_eigen", "max_rel_disagreement"]


def test_info_grid_half_shape_matches_gaussian(tmp_path, capsys):
    rng = np.random.default_rng(2)
    H = rng.standard_normal((3, 3))
    G = rng.standard_normal((3, 3))
    C = write_matrix(tmp_path / "C.json", H + H.T)
    D = write_matrix(tmp_path / "D.json", G @ G.T + 3 * np.eye(3))
    grid = ["--theta-grid", "-0.05:0.05:3"]
    _, g, _ = run(["info-grid", "--family", "gaussian", "--C", C, "--D", D, *grid], capsys)
    _, w, _ = run(["info-grid", "--family", "wishart", "--p", "0.5", "--C", C, "--D", D, *grid], capsys)
    for a, b in zip(rows(g), rows(w)):
        assert a["J_trace"] == b["J_trace"] and a["J_eigen"] == b["J_eigen"]
        assert float(a["J_quadratic"]) == pytest.approx(float(b["J_quadratic"]), rel=1e-12)


def test_info_grid_out_of_domain_and_clamping(capsys):
    code, out, _ = run(["info-grid", "--family", "gaussian", "--preset", "circulant", "--d", "4", "--theta-grid", "-0.6:0.5:3"], capsys)
    assert code == 0
    table = rows(out)
    assert table[0]["status"] == "out-of-domain" and table[0]["J_trace"] == ""
    assert table[2]["status"] == "clamped" and float(table[2]["theta"]) < 0.5


def test_info_grid_empty_domain(capsys):
    code, out, err = run(["info-grid", "--family", "gaussian", "--preset", "circulant", "--d", "4", "--theta-grid", "1:2:3"], capsys)
    assert code == 3 and "domain" in err
    assert all(r["status"] == "out-of-domain" for r in rows(out))


def test_info_grid_bad_anchor(capsys):
    code, _, err = run(["info-grid", "--family", "gaussian", "--preset", "circulant", "--d", "4", "--theta0", "2", "--theta-grid", "0:1:2"], capsys)
    assert code == 3 and "theta0" in err


def test_info_grid_mean_segment_wishart(tmp_path, capsys):
    A = write_matrix(tmp_path / "A.json", np.eye(2))
    B = write_matrix(tmp_path / "B.json", np.zeros((2, 2)))
    code, out, _ = run(["info-grid", "--family", "wishart", "--p", "1", "--A", A, "--B", B, "--theta0", "1", "--theta-grid", "1.5:1.5:1", "--format", "json"], capsys)
    assert code == 0
    row = json.loads(out)["rows"][0]
    assert row["J_trace"] == pytest.approx(8 / 9) and row["J_eigen"] == pytest.approx(8 / 9)


def test_info_grid_noncentral(tmp_path, capsys):
    I = write_matrix(tmp_path / "I.json", np.eye(2))
    code, out, _ = run(["info-grid", "--family", "ncwishart", "--p", "1", "--a", I, "--A", I, "--B", I, "--theta-grid", "0:0:1"], capsys)
    assert code == 0
    r = rows(out)[0]
    assert float(r["J_quadratic"]) == pytest.approx(2.34164, abs=1e-5) and r["J_trace"] == ""


@pytest.mark.parametrize(
    "content,code",
    [("{not json", 2), ('{"rows": 2, "cols": 2, "data": [1, 2]}', 2), ('{"rows": 2, "cols": 2, "data": [1, 2, 3, 1]}', 2)],
)
def test_info_grid_malformed_matrix(tmp_path, capsys, content, code):
    bad = tmp_path / "bad.json"
    bad.write_text(content)
    I = write_matrix(tmp_path / "I.json", np.eye(2))
    got, _, err = run(["info-grid", "--family", "gaussian", "--C", str(bad), "--D", I, "--theta-grid", "0:1:2"], capsys)
    assert got == code and err.startswith("error:")


def test_missing_file_and_bad_grid(tmp_path, capsys):
    code, _, _ = run(["info-grid", "--family", "gaussian", "--C", "missing.json", "--D", "missing.json", "--theta-grid", "0:1:2"], capsys)
    assert code == 2
    code, _, _ = run(["info-grid", "--family", "gaussian", "--preset", "circulant", "--d", "4", "--theta-grid", "0:1"], capsys)
    assert code == 2
    code, _, _ = run(["info-grid", "--family", "wishart", "--preset", "circulant", "--d", "4", "--theta-grid", "0:1:2"], capsys)
    assert code == 2


def test_domain_examples(tmp_path, capsys):
    code, out, _ = run(["domain", "--preset", "circulant", "--d", "4"], capsys)
    assert code == 0 and out.splitlines()[0] == "(-0.5, 0.5)"
    assert out.splitlines()[1].startswith("spectrum: -2 ")
    A = write_matrix(tmp_path / "A.json", np.eye(2))
    B = write_matrix(tmp_path / "B.json", np.zeros((2, 2)))
    _, out, _ = run(["domain", "--A", A, "--B", B, "--theta0", "1"], capsys)
    assert out.splitlines()[0] == "(0, +inf)"
    _, out, _ = run(["domain", "--family", "wishart", "--p", "2", "--A", A, "--B", B, "--theta0", "1", "--format", "json"], capsys)
    obj = json.loads(out)
    assert obj["lower"] == 0.0 and obj["upper"] is None and obj["spectrum"] == [1.0, 1.0]
    _, out, _ = run(["domain", "--preset", "tridiagonal", "--d", "3"], capsys)
    assert out.startswith("(-0.7071067812, 0.7071067812)")
    _, out, _ = run(["domain", "--family", "gaussian", "--preset", "tridiagonal", "--d", "3", "--format", "csv"], capsys)
    assert rows(out)[0]["upper"] == "0.7071067812"


def test_domain_gaussian_mean_segment_sign(tmp_path, capsys):
    A = write_matrix(tmp_path / "A.json", -np.eye(2))
    B = write_matrix(tmp_path / "B.json", np.zeros((2, 2)))
    code, out, _ = run(["domain", "--family", "gaussian", "--A", A, "--B", B, "--theta0", "1"], capsys)
    assert code == 0 and out.startswith("(0, +inf)")
    code, _, _ = run(["domain", "--family", "gaussian", "--A", A, "--B", B, "--theta0", "-1"], capsys)
    assert code == 3


def efficiency_config(tmp_path, **overrides):
    cfg = {"family": "wishart", "p": 1.0, "A": mc.matrix_to_json(np.eye(2)), "B": mc.matrix_to_json(np.zeros((2, 2))),
           "theta": 1.5, "n": 100, "replicates": 1000, "seed": 17, "estimator_C": "inverseA"}
    cfg.update(overrides)
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_efficiency_collinear_config(tmp_path, capsys):
    code, out, _ = run(["efficiency", "--config", efficiency_config(tmp_path)], capsys)
    assert code == 0
    obj = json.loads(out)
    assert obj["efficient"] == "true" and obj["hypothesis"] == "B=cA, C=A^-1"
    assert abs(obj["efficiency_ratio"] - 1) <= 3 * obj["efficiency_ratio_se"]


def test_efficiency_open_question(tmp_path, capsys):
    cfg = efficiency_config(tmp_path, A=[[1, 0], [0, 2]], B=[[1, 0], [0, 1]], replicates=200)
    code, out, _ = run(["efficiency", "--config", cfg, "--replicates", "1000", "--format", "csv"], capsys)
    assert code == 0
    r = rows(out)[0]
    assert r["efficient"] == "n/a (open question)" and r["replicates"] == "1000"
    assert float(r["diag_trace_D_over_d2"]) > float(r["diag_inverse_trace_D_inv"])


def test_efficiency_flags_only(tmp_path, capsys):
    C = write_matrix(tmp_path / "C.json", np.diag([1.0, 2.0]))
    D = write_matrix(tmp_path / "D.json", np.diag([1.0, 2.0]))
    code, out, _ = run(["efficiency", "--family", "gaussian", "--C", C, "--D", D, "--theta", "0.5", "--n", "50",
                        "--replicates", "1000", "--seed", "3"], capsys)
    assert code == 0
    obj = json.loads(out)
    assert obj["diagnostics"]["c"] == pytest.approx(1.0) and obj["efficient"] in ("true", "false")


def test_efficiency_invalid_config(tmp_path, capsys):
    code, _, err = run(["efficiency", "--config", efficiency_config(tmp_path, theta=-1.0)], capsys)
    assert code == 2 and "error" in err
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert run(["efficiency", "--config", str(bad)], capsys)[0] == 2
    assert run(["efficiency", "--config", str(tmp_path / "nope.json")], capsys)[0] == 2
    cfg = efficiency_config(tmp_path)
    d = json.loads(open(cfg).read())
    del d["seed"]
    open(cfg, "w").write(json.dumps(d))
    assert run(["efficiency", "--config", cfg], capsys)[0] == 2


def test_efficiency_deterministic_file(tmp_path, capsys):
    cfg = efficiency_config(tmp_path, replicates=100)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["efficiency", "--config", cfg, "--out", str(a)]) == 0
    assert main(["efficiency", "--config", cfg, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_verify(capsys):
    code, out, _ = run(["verify", "--families", "gaussian"], capsys)
    assert code == 0
    assert "[gaussian]" in out and "[wishart" not in out and "[ncwishart" not in out
    code, out, _ = run(["verify", "--families", "ncwishart", "--format", "json"], capsys)
    assert code == 0 and all(r["passed"] for r in json.loads(out))


def test_verify_negative_control(capsys):
    code, out, _ = run(["verify", "--inject-wrong-variance", "1.1"], capsys)
    assert code == 4 and "FAIL" in out


def test_verify_unknown_family(capsys):
    assert run(["verify", "--families", "poisson"], capsys)[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "segfisher", "domain", "--preset", "circulant", "--d", "4"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("(-0.5, 0.5)")
