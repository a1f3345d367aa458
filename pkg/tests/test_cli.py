import csv
import json
import math

import numpy as np
import pytest

from specflow.cli import main
from specflow.matching import distance_d
from specflow.rigged import RiggedSet
from specflow.unispec import matrix_to_json

from conftest import random_set


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return path


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_metric_one_over_n(tmp_path, capsys):
    S = RiggedSet.line([-2.0, 1.0])
    f = write_json(tmp_path / "in.json", {"S": (S + RiggedSet.line([0.25])).to_dict(), "T": S.to_dict()})
    code, out, _ = run(capsys, "--out", tmp_path, "metric", f)
    assert code == 0 and out.strip() == "0.25"
    rows = read_csv(tmp_path / "matching.csv")
    assert rows[0] == ["source", "target"]
    assert ["0.25", "sticky"] in rows


def test_metric_equal_sets_and_library_agreement(tmp_path, capsys, rng):
    S = RiggedSet.circle([1.0, 2.0])
    f = write_json(tmp_path / "eq.json", {"S": S.to_dict(), "T": S.to_dict()})
    assert run(capsys, "--out", tmp_path, "metric", f)[1].strip() == "0"
    for _ in range(5):
        A, B = random_set(rng, "circle", 4), random_set(rng, "circle", 4)
        f = write_json(tmp_path / "r.json", {"S": A.to_dict(), "T": B.to_dict()})
        assert run(capsys, "--out", tmp_path, "metric", f)[1].strip() == f"{distance_d(A, B).cost:.12g}"


@pytest.mark.parametrize("doc,field", [
    ({"S": {"space": "circle", "points": []}}, "T"),
    ({"S": {"space": "torus", "points": []}, "T": {"space": "circle", "points": []}}, "space"),
    ({"S": {"space": "line", "points": [{"x": 1, "mult": 0}]}, "T": {"space": "line", "points": []}}, "mult"),
    ({"S": {"space": "line", "points": []}, "T": {"space": "line", "points": []}, "U": 1}, "U"),
])
def test_metric_schema_errors(tmp_path, capsys, doc, field):
    code, _, err = run(capsys, "--out", tmp_path, "metric", write_json(tmp_path / "bad.json", doc))
    assert code == 2 and field in err


def test_track_loop(tmp_path, capsys):
    f = write_json(tmp_path / "p.json", {"builtin": "loop", "N": 2})
    code, _, _ = run(capsys, "--out", tmp_path, "--svg", "track", f)
    assert code == 0
    rows = read_csv(tmp_path / "track.csv")
    assert rows[0] == ["r", "j", "theta_j"]
    for r, j, th in rows[1:]:
        r, th = float(r), float(th)
        if 0 < r < 1:
            assert th == pytest.approx(2 * math.pi * r, abs=1e-9)
    assert {j for _, j, _ in rows[1:]} == {"0", "1"}
    svg = (tmp_path / "track.svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg


def test_track_identity_is_header_only(tmp_path, capsys):
    f = write_json(tmp_path / "p.json", {"builtin": "identity", "N": 3})
    assert run(capsys, "--out", tmp_path, "track", f)[0] == 0
    assert read_csv(tmp_path / "track.csv") == [["r", "j", "theta_j"]]


def test_track_exp_irH_matches_eigendecomposition(tmp_path, capsys):
    H = np.array([[1.0, 0.4, 0], [0.4, -2.0, 0.3], [0, 0.3, 3.5]])
    f = write_json(tmp_path / "p.json", {"builtin": "exp_irH", "H": matrix_to_json(H)})
    assert run(capsys, "--out", tmp_path, "track", f)[0] == 0
    rows = read_csv(tmp_path / "track.csv")[1:]
    w = np.linalg.eigvalsh(H)
    nodes = sorted({float(r) for r, _, _ in rows})
    assert len(nodes) > 8
    for r in nodes:
        got = sorted(float(th) for rr, _, th in rows if float(rr) == r)
        if r > 0:
            # exp(irH) has phases r w; |r w| < pi so the lift is exactly r w
            assert got == pytest.approx(sorted(r * w), abs=1e-9)


def test_track_from_samples(tmp_path, capsys):
    H = np.diag([0.5, -1.0])
    samples = [{"r": r, "U": matrix_to_json(np.diag(np.exp(1j * r * np.diag(H))))} for r in (0.0, 0.5, 1.0)]
    f = write_json(tmp_path / "s.json", {"samples": samples})
    assert run(capsys, "--out", tmp_path, "mu", f)[0] == 0
    assert run(capsys, "--out", tmp_path, "track", f)[0] == 0
    last = [float(th) for r, _, th in read_csv(tmp_path / "track.csv")[1:] if float(r) == 1.0]
    assert sorted(last) == pytest.approx([-1.0, 0.5], abs=1e-12)


def test_track_depth_exceeded(tmp_path, capsys):
    f = write_json(tmp_path / "p.json", {"builtin": "loop", "N": 1})
    code, _, err = run(capsys, "--out", tmp_path, "--tol", "max_depth=2", "--tol", "step_tol=0.001", "track", f)
    assert code == 3 and "depth exceeded on r in [" in err


def test_mu_loop_and_round_trip_through_csv(tmp_path, capsys):
    f = write_json(tmp_path / "p.json", {"builtin": "loop", "N": 3})
    code, out, _ = run(capsys, "--out", tmp_path, "mu", f)
    assert code == 0 and out.startswith("base 3 jumps none")
    assert read_csv(tmp_path / "mu.csv")[0] == ["theta_lo", "theta_hi", "value"]
    run(capsys, "--out", tmp_path, "track", f)
    code, out2, _ = run(capsys, "--out", tmp_path / "again", "mu", tmp_path / "track.csv")
    assert code == 0 and out2 == out


def test_mu_requires_identity_start(tmp_path, capsys):
    H = np.diag([0.5, -1.0])
    f = write_json(tmp_path / "p.json", {"builtin": "exp_irH", "H": matrix_to_json(H), "a": 1.0, "b": 2.0})
    assert run(capsys, "--out", tmp_path, "mu", f)[0] == 2


def test_random_path_is_seeded(tmp_path, capsys):
    f = write_json(tmp_path / "p.json", {"builtin": "random", "N": 3})
    outs = []
    for seed in (5, 5, 6):
        run(capsys, "--out", tmp_path, "--seed", seed, "track", f)
        outs.append((tmp_path / "track.csv").read_text())
    assert outs[0] == outs[1] != outs[2]


def test_scatter_zero_coupling(tmp_path, capsys):
    f = write_json(tmp_path / "c.json", {"model": "rank2", "lambda_grid": [-1.0, 0.5], "r_grid": [0]})
    code, out, _ = run(capsys, "--out", tmp_path, "scatter", f)
    assert code == 0
    rows = read_csv(tmp_path / "scatter.csv")
    assert rows[0] == ["lambda", "r", "xi", "xi_ac", "xi_s", "mu_s_value", "bk_residual", "min_singval", "flag"]
    for row in rows[1:]:
        assert [float(x) for x in row[2:7]] == [0.0] * 5
    assert "resonances 0" in out


def test_scatter_rank_one_small_coupling(tmp_path, capsys):
    f = write_json(tmp_path / "c.json", {"model": "rank1", "lambda_grid": [-1.5, 0.5], "r_grid": [0.1, 0.2, 0.3]})
    code, _, _ = run(capsys, "--out", tmp_path, "scatter", f, "--workers", 2)
    assert code == 0
    for row in read_csv(tmp_path / "scatter.csv")[1:]:
        xi_s = float(row[4])
        assert abs(xi_s - round(xi_s)) < 1e-6 and row[-1] == "ok"


def test_scatter_resonance_exit(tmp_path, capsys):
    c = -0.8
    model = {"sites": [0, 1, 2], "kappa": [1, 1, 1], "J": [[0, c, 0], [c, -0.5 * c, c], [0, c, 0]]}
    f = write_json(tmp_path / "c.json", {"model": model, "lambda_grid": [0.5], "r_grid": [1.0, 2.0]})
    code, out, err = run(capsys, "--out", tmp_path, "scatter", f)
    assert code == 4
    assert "resonances 1" in out and "r*=[" in err
    flagged = read_csv(tmp_path / "scatter.csv")[2]
    lo, hi = map(float, flagged[-1].split("[")[1].rstrip("]").split(","))
    assert lo <= 1.25 <= hi


@pytest.mark.parametrize("doc", [
    {"model": "rank2", "extra": 1},
    {"model": "rank3"},
    {"model": "rank1", "lambda_grid": [2.5]},
    {"model": "rank1", "tolerances": {"step_tol": -1}},
    {"model": "rank1", "tolerances": {"bogus": 1}},
    {"model": {"sites": [0], "kappa": [1], "J": [[1, 2]]}},
    {"lambda_grid": [0.5]},
])
def test_scatter_config_errors(tmp_path, capsys, doc):
    assert run(capsys, "--out", tmp_path, "scatter", write_json(tmp_path / "c.json", doc))[0] == 2


@pytest.mark.parametrize("tol", ["step_tol", "foo=1", "step_tol=-1", "max_depth=x"])
def test_bad_tol_flag(tmp_path, capsys, tol):
    f = write_json(tmp_path / "p.json", {"builtin": "loop", "N": 1})
    assert run(capsys, "--out", tmp_path, "--tol", tol, "track", f)[0] == 2


def test_missing_input_and_bad_command(tmp_path, capsys):
    assert run(capsys, "--out", tmp_path, "metric", tmp_path / "nope.json")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2


def test_verify_pass_fault_and_determinism(tmp_path, capsys):
    code, out1, _ = run(capsys, "verify")
    assert code == 0 and "FAIL" not in out1
    assert run(capsys, "verify")[1] == out1
    code, out, err = run(capsys, "verify", "--inject-fault", "metric", "--only", "metric_axioms")
    assert code == 1 and "metric_axioms" in err and "FAIL" in out


def test_plot_is_deterministic(tmp_path, capsys):
    f = write_json(tmp_path / "p.json", {"builtin": "random", "N": 2})
    run(capsys, "--out", tmp_path, "mu", f)
    run(capsys, "--out", tmp_path, "track", f)
    texts = []
    for name in ("track.csv", "mu.csv", "track.csv"):
        code, out, _ = run(capsys, "--out", tmp_path / "plots", "plot", tmp_path / name)
        assert code == 0
        texts.append((tmp_path / "plots" / (name[:-4] + ".svg")).read_text())
    assert texts[0] == texts[2]
    assert all(t.lstrip().startswith("<?xml") for t in texts)
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert run(capsys, "--out", tmp_path, "plot", bad)[0] == 2
