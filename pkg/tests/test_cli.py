import json
import subprocess
import sys

import pytest

from abtheme.cli import run

E_ABG = "(a - 3 b) inv(1 + {beta} b + {gamma} b^2) (a - 3 b) inv(1 + {alpha} b) (a - 3 b)"


def word(alpha, beta, gamma):
    return E_ABG.format(alpha=alpha, beta=beta, gamma=gamma)


def ok(argv):
    report, code = run(argv)
    assert code == 0, report
    return report


def test_analyze_rank_one():
    rep = ok(["analyze", "--xi", "s^(-1/4)"])
    assert rep["rank"] == 1 and rep["lambda1"] == "3/4"


def test_analyze_multi_lambda():
    rep = ok(["analyze", "--xi", "s^(1/2) + s^(1/3)"])
    assert rep["rank"] == 2
    assert len(rep["components"]) == 2 and "convention" in rep


def test_invariant_witness():
    rep = ok(["invariant", "--word", word(2, 2, 5)])
    assert rep["invariant"] is True and rep["witness"] == ["-5*b", "1", "0"]


def test_iso_u():
    rep = ok(["iso", "--word", word(2, 3, 5), "--word", word(2, 3, 0)])
    assert rep["isomorphic"] is True and rep["U"] == "-5"


def test_iso_obstructed():
    rep = ok(["iso", "--word", word(2, 2, 5), "--word", word(2, 2, 1)])
    assert rep["isomorphic"] is False and "obstruction" in rep


def test_ext():
    rep = ok(["ext", "--word", "(a - 3/2 b)", "--word", "(a - 5/2 b)"])
    assert (rep["ext0"], rep["ext1"]) == (0, 1) and rep["stabilized"] is True


def test_dualtwist():
    rep = ok(["dualtwist", "--word", "(a - 5/2 b) inv(1 + 2 b + 3 b^2) (a - 7/2 b)", "--delta", "9"])
    assert rep["dual_twist"]["lambdas"] == ["11/2", "13/2"]


def test_canonical_from_json():
    pres = json.dumps({"lambda1": 3, "p": [2], "S": [[1, 3, 7]]})
    rep = ok(["canonical", "--pres", pres])
    assert rep["canonical_form"]["S"] == [["1", "0", "7"]]


def test_bernstein():
    rep = ok(["bernstein", "--word", "(a - 3 b) inv(1 + b) (a - 3 b)"])
    assert rep["roots"] == ["2", "3"] and rep["bernstein_polynomial_roots"] == ["-2", "-3"]


def test_enddim():
    rep = ok(["enddim", "--word", "(a - 3 b) inv(1 + b) (a - 3 b)"])
    assert rep["end_dimension"] == 2


class TestErrors:
    def test_arity(self):
        rep, code = run(["iso", "--word", "(a - 3 b)"])
        assert code == 1 and "2 inputs" in rep["error"]["message"]

    def test_parse_error(self):
        rep, code = run(["analyze", "--xi", "s^(1/2) +"])
        assert code == 1 and rep["error"]["code"] == "parse_error"

    def test_ambiguous(self):
        rep, code = run(["analyze", "--xi", "s^(1/2)*log(s)^2"])
        assert code == 1 and rep["error"]["code"] == "ambiguous_normalization"

    def test_trunc_too_small(self):
        rep, code = run(["enddim", "--word", word(2, 2, 5), "--trunc", "2"])
        assert code == 1 and "minimum" in rep["error"]["message"]

    def test_delta_too_small(self):
        _, code = run(["dualtwist", "--word", "(a - 5/2 b)", "--delta", "1"])
        assert code == 1


def test_sweep_output_and_figures(tmp_path):
    out = tmp_path / "records.jsonl"
    cfg = {"family": "rank3", "params": {"alpha": [1, 2], "beta": [1, 2, 3], "gamma": [0, 1]},
           "verify": 1, "output": str(out)}
    rep = ok(["sweep", "--config", json.dumps(cfg), "--figures", str(tmp_path)])
    assert rep["locus"]["description"] == "alpha - beta = 0"
    assert rep["invariant_points"] == 4
    lines = out.read_text().splitlines()
    assert len(lines) == 12 and all("invariant" in json.loads(x) for x in lines)
    assert (tmp_path / "sweep_invariance.png").stat().st_size > 0


def test_stratify(tmp_path):
    rep = ok(["stratify", "--xi", "s^(3/2)*log(s) + (z+b)*s^(1/2)", "--param", "z", "--values", "0,1,2",
              "--normal-form", "--figures", str(tmp_path)])
    assert len(rep["strata"]) == 2
    nf = rep["normal_form"]
    assert nf[0]["error"]["code"] == "wrong_rank"
    assert nf[1]["alpha"] == "-3/2" and nf[2]["alpha"] == "-3/4"
    assert (tmp_path / "rank_strata.png").exists()


def test_undecided_exit_code(monkeypatch):
    import abtheme.cli as cli

    monkeypatch.setattr(cli, "_dispatch", lambda args: {"decision": cli.UNKNOWN})
    assert run(["enddim", "--word", "(a - 3 b)"])[1] == 2


@pytest.mark.parametrize("fmt", ["json", "table"])
def test_console_entry(fmt):
    proc = subprocess.run([sys.executable, "-m", "abtheme.cli", "ext", "--word", "(a - 3/2 b)",
                           "--word", "(a - 5/2 b)", "--format", fmt], capture_output=True, text=True)
    assert proc.returncode == 0
    if fmt == "json":
        assert json.loads(proc.stdout)["ext1"] == 1
    else:
        assert "ext1" in proc.stdout
