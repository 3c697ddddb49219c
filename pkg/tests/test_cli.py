import argparse
import json
from pathlib import Path

import numpy as np
import pytest

from spinimage.cli import build_parser, run
from spinimage.core import Graph, JointDistribution, potts, proper_colorings
from spinimage.counterexample import certify_nonconvexity

GOLDEN = Path(__file__).parent / "golden"


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def _run(capsys, *argv):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def files(tmp_path):
    return {
        "ferro": _write(tmp_path, "ferro.json", potts(3, 2).to_json()),
        "anti": _write(tmp_path, "anti.json", potts(3, 0.5).to_json()),
        "ising": _write(tmp_path, "ising.json", potts(2, 2).to_json()),
        "col": _write(tmp_path, "col.json", proper_colorings(3).to_json()),
        "uni2": _write(tmp_path, "uni2.json", JointDistribution.uniform(3, 2).to_json()),
        "uni4": _write(tmp_path, "uni4.json", JointDistribution.uniform(3, 4).to_json()),
        "bin": _write(tmp_path, "bin.json", JointDistribution(2, 2, [0.1, 0.2, 0.3, 0.4]).to_json()),
        "p3": _write(tmp_path, "p3.json", Graph(3, [(0, 1), (1, 2)]).to_json()),
        "tmp": tmp_path,
    }


def _help_paths():
    parser = build_parser()
    paths = [[]]
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for g, gp in sub.choices.items():
        paths.append([g])
        leaves = next(a for a in gp._actions if isinstance(a, argparse._SubParsersAction))
        paths.extend([g, c] for c in leaves.choices)
    return paths


@pytest.mark.parametrize("path", _help_paths(), ids=lambda p: " ".join(p) or "top")
def test_help_golden(path, capsys, monkeypatch):
    monkeypatch.setenv("COLUMNS", "80")
    code, out, _ = _run(capsys, *path, "--help")
    assert code == 0
    assert out == (GOLDEN / ("_".join(["spinimage"] + path) + ".txt")).read_text()


def test_bp_eval(files, capsys):
    code, out, err = _run(capsys, "bp", "eval", "--matrix", files["ferro"], "--dist", files["uni2"])
    assert code == 0 and np.allclose(json.loads(out)["F"], 1 / 3)
    assert err.startswith("F = ")


def test_bp_gibbs_and_budget(files, capsys):
    code, out, _ = _run(capsys, "bp", "gibbs", "--graph", files["p3"], "--matrix", files["col"])
    assert code == 0 and json.loads(out)["Z"] == 12
    code, _, err = _run(capsys, "bp", "gibbs", "--graph", files["p3"], "--matrix", files["col"], "--budget", 10)
    assert code == 3 and "resource limit" in err


def test_bp_check_recursion(files, capsys):
    code, out, _ = _run(capsys, "bp", "check-recursion", "--graph", files["p3"], "--matrix", files["anti"], "--vertex", 1)
    assert code == 0 and json.loads(out)["pass"]
    iso = _write(files["tmp"], "iso.json", Graph(3, [(1, 2)]).to_json())
    code, _, err = _run(capsys, "bp", "check-recursion", "--graph", iso, "--matrix", files["anti"], "--vertex", 0)
    assert code == 2 and "degree 0" in err


def test_weitz_check(files, capsys):
    code, out, _ = _run(capsys, "weitz", "check", "--matrix", files["ising"], "--dist", files["bin"])
    rep = json.loads(out)
    assert code == 0 and rep["pass"] and len(rep["tilted_marginals"]) == 2
    code, _, err = _run(capsys, "weitz", "check", "--matrix", files["ferro"], "--dist", files["uni2"])
    assert code == 2 and "two spins" in err


def test_image_commands(files, capsys):
    code, out, _ = _run(capsys, "image", "vertices", "--matrix", files["col"], "--d", 2)
    # with three colors and two neighbors some color is always free
    assert code == 0 and json.loads(out)["infeasible"] == [] and len(json.loads(out)["images"]) == 9
    pt = _write(files["tmp"], "pt.json", {"point": [1 / 3, 1 / 3, 1 / 3]})
    code, out, _ = _run(capsys, "image", "member", "--matrix", files["ferro"], "--d", 2, "--point", pt)
    assert code == 0 and json.loads(out)["is_member"]
    obj = _write(files["tmp"], "obj.json", [1, 0, 0])
    code, out, err = _run(capsys, "image", "extremize", "--matrix", files["ferro"], "--d", 2, "--objective", obj, "--restarts", 4)
    assert code == 0 and err.startswith("min = ")


def test_certify_and_verify(files, capsys):
    wfile = str(files["tmp"] / "w.json")
    code, _, err = _run(capsys, "counterexample", "certify", "--beta", 2, "--matrix", files["ferro"], "--d", 2, "--restarts", 16, "--out", wfile)
    assert code == 0 and "extremal value" in err
    code, out, _ = _run(capsys, "counterexample", "verify", "--witness", wfile)
    assert code == 0 and json.loads(out)["pass"]
    w = json.loads(Path(wfile).read_text())
    w["extremal_value"] = 0.2
    bad = _write(files["tmp"], "bad.json", w)
    code, out, err = _run(capsys, "counterexample", "verify", "--witness", bad)
    assert code == 1 and "extremal_value" in err


def test_certify_rejects_all_ones(files, capsys):
    ones = _write(files["tmp"], "ones.json", {"q": 3, "entries": np.ones((3, 3)).tolist()})
    code, _, err = _run(capsys, "counterexample", "certify", "--beta", 1, "--matrix", ones, "--d", 2)
    assert code == 1 and "(a) no entry exceeds 1" in err


def test_signature_commands(files, capsys):
    code, out, _ = _run(capsys, "signature", "scan", "--q", 3, "--d", 2, "--beta", 2)
    assert code == 0 and json.loads(out)["pass"]
    code, out, _ = _run(capsys, "signature", "build", "--q", 3, "--d", 2, "--beta", 2, "--k", 1)
    built = json.loads(out)
    assert code == 0 and built["q"] == 3 and built["k"] == 1
    mfile = _write(files["tmp"], "sig.json", built)
    code, _, _ = _run(capsys, "counterexample", "certify", "--beta", 2, "--matrix", mfile, "--d", 2, "--restarts", 8)
    assert code == 0


def test_potts_commands(files, capsys):
    code, out, _ = _run(capsys, "potts", "solve-product", "--matrix", files["anti"], "--dist", files["uni4"])
    assert code == 0 and json.loads(out)["found"]
    code, out, _ = _run(capsys, "potts", "criterion", "--matrix", files["anti"], "--dist", files["uni4"])
    assert code == 0 and json.loads(out)["holds"]
    m2 = _write(files["tmp"], "m2.json", potts(2, 0.5).to_json())
    d2 = _write(files["tmp"], "d2.json", JointDistribution.uniform(2, 2).to_json())
    code, _, err = _run(capsys, "potts", "criterion", "--matrix", m2, "--dist", d2)
    assert code == 2 and "q = 2" in err
    v = _write(files["tmp"], "v.json", [1, 1])
    D = _write(files["tmp"], "D.json", {"D": [0.5, 0.5]})
    code, out, _ = _run(capsys, "potts", "criterion", "--matrix", m2, "--dist", d2, "--v", v, "--D", D)
    assert code == 0


def test_potts_bulk(capsys):
    code, out, err = _run(capsys, "potts", "bulk", "--q", 2, "--d", 4, "--beta", 0.7, "--eps", 0.2, "--n", 10)
    assert code == 0 and json.loads(out)["successes"] == 10 and "10 solved" in err
    code, _, err = _run(capsys, "potts", "bulk", "--q", 3, "--d", 4, "--beta", 0.3, "--eps", 0.2, "--n", 5)
    assert code == 2 and "outside" in err
    code, out, _ = _run(capsys, "potts", "bulk", "--q", 3, "--d", 4, "--beta", 0.3, "--eps", 0.2, "--n", 5, "--allow-out-of-range")
    assert json.loads(out)["out_of_range_override"]


def test_inequalities(capsys):
    code, out, _ = _run(capsys, "inequalities", "check", "--claim", "weird")
    assert code == 0 and json.loads(out)["pass"]
    code, out, _ = _run(capsys, "inequalities", "check", "--claim", "insane", "--d", 8, "--q", 4, "--eps", 0.1)
    assert code == 0 and json.loads(out)["pass"]


def test_influence_commands(files, capsys):
    k4 = _write(files["tmp"], "k4.json", Graph(4, [(i, j) for i in range(4) for j in range(i + 1, 4)]).to_json())
    c5 = _write(files["tmp"], "c5.json", proper_colorings(5).to_json())
    pin = _write(files["tmp"], "pin.json", {"assignments": {"0": 0}})
    code, out, _ = _run(capsys, "influence", "compute", "--graph", k4, "--matrix", c5, "--pinning", pin)
    rep = json.loads(out)
    assert code == 0 and rep["vertices"] == [1, 2, 3] and abs(rep["lambda_max"] - 4 / 3) <= 1e-12
    code, out, _ = _run(capsys, "influence", "contraction", "--matrix", files["ising"], "--delta", 3, "--n", 20)
    assert code == 0 and "sampled" in json.loads(out)["kind"]


def test_validation_errors(files, capsys):
    bad = files["tmp"] / "bad.json"
    bad.write_text("{not json")
    code, _, err = _run(capsys, "bp", "eval", "--matrix", str(bad), "--dist", files["uni2"])
    assert code == 2 and "malformed JSON" in err and str(bad) in err
    asym = _write(files["tmp"], "asym.json", {"q": 2, "entries": [[1, 2], [3, 1]]})
    code, _, err = _run(capsys, "bp", "eval", "--matrix", asym, "--dist", files["bin"])
    assert code == 2 and "asym.json" in err
    code, _, err = _run(capsys, "bp", "eval", "--matrix", str(files["tmp"] / "missing.json"), "--dist", files["uni2"])
    assert code == 2 and "cannot read" in err
    code, _, _ = _run(capsys, "nonsense")
    assert code == 2
    code, _, _ = _run(capsys, "potts", "bulk", "--q", "three")
    assert code == 2
    code, _, err = _run(capsys, "bp", "eval", "--matrix", files["ferro"], "--dist", files["uni2"], "--budget", 0)
    assert code == 2 and "budget" in err


def test_infeasible_exit_code(files, capsys):
    # neighbors on both colors leave no color for the root
    c2 = _write(files["tmp"], "c2.json", proper_colorings(2).to_json())
    d2 = _write(files["tmp"], "d2x.json", JointDistribution.point_mass((0, 1), 2).to_json())
    code, _, err = _run(capsys, "bp", "eval", "--matrix", c2, "--dist", d2)
    assert code == 2 and "infeasible" in err


def test_deterministic_bytes(files, capsys):
    argv = ["counterexample", "certify", "--beta", 2, "--matrix", files["ferro"], "--d", 2, "--restarts", 8, "--seed", 3]
    _, a, _ = _run(capsys, *argv)
    _, b, _ = _run(capsys, *argv)
    assert a == b
    argv = ["potts", "bulk", "--q", 2, "--d", 4, "--beta", 0.7, "--eps", 0.2, "--n", 6, "--seed", 5]
    assert _run(capsys, *argv)[1] == _run(capsys, *argv)[1]


def test_out_file(files, capsys):
    target = files["tmp"] / "res.json"
    code, out, _ = _run(capsys, "bp", "eval", "--matrix", files["ferro"], "--dist", files["uni2"], "--out", target)
    assert code == 0 and out == ""
    text = target.read_text()
    assert text.endswith("\n") and json.loads(text)["F"]
    assert text == json.dumps(json.loads(text), sort_keys=True, indent=2) + "\n"


def test_witness_file_matches_library(files, capsys):
    _, out, _ = _run(capsys, "counterexample", "certify", "--beta", 2, "--matrix", files["ferro"], "--d", 2, "--restarts", 8, "--seed", 1)
    lib = certify_nonconvexity(2.0, potts(3, 2), 2, budget=8, seed=1).to_json()
    assert json.loads(out) == json.loads(json.dumps(lib))
