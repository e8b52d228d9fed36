import json

import pytest

from dualbaxter.cli import Cache, RunConfig, canonical_json, load_config, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_canonical_json_format():
    text = canonical_json({"b": 1.0, "a": [0.1, 1 + 2j], "c": True, "d": None})
    assert text == '{"a":[0.10000000000000001,[1.0,2.0]],"b":1.0,"c":true,"d":null}'
    assert canonical_json({"x": float("nan")}) == '{"x":"NaN"}'
    with pytest.raises(TypeError):
        canonical_json({"x": object()})


def test_config_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\ngamma = 0.9\nmax-iterations=3\n")
    cfg = load_config(p)
    assert cfg == {"gamma": "0.9", "max_iterations": "3"}
    assert load_config(None) == RunConfig()


def test_phi_eval(capsys):
    code, out, _ = run(capsys, "phi", "eval", "--gamma", "0.7", "--phi", "-30")
    assert code == 0
    d = json.loads(out)
    assert abs(d["value"][0] - 1) < 1e-10 and set(d) == {"gamma", "phi", "value", "error_estimate"}


def test_gamma_from_config(capsys, tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("gamma=0.7\n")
    code, out, _ = run(capsys, "--config", str(p), "phi", "eval", "--phi", "0.5,0.1")
    assert code == 0 and json.loads(out)["gamma"] == 0.7


@pytest.mark.parametrize("argv", [
    ("phi", "eval", "--phi", "1"),                         # no gamma
    ("phi", "eval", "--gamma", "-1", "--phi", "1"),
    ("phi", "eval", "--gamma", "0.7", "--phi", "1,2,3"),
    ("curve", "periods", "--t", "1,-5,3"),                  # unpinned last coefficient
    ("bogus",),
    ("verify", "--suite", "nope"),
])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "usage" in err


def test_curve_periods(capsys):
    code, out, _ = run(capsys, "curve", "periods", "--t", "1,-5,2")
    assert code == 0
    d = json.loads(out)
    assert d["genus"] == 1
    assert [round(p[0], 12) for p in d["branch_points"]] == [0, 1, 4, 5]
    assert d["B"][0][0][1] > 0


def test_computational_failure_exit_code(capsys):
    code, _, err = run(capsys, "curve", "periods", "--t", "1,-4,2")
    assert code == 1
    assert json.loads(err)["error"] == "DegeneracyError"


def test_verify_suite(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "dilog", "--gamma", "0.7")
    d = json.loads(out)
    assert code == 0 and d["passed"] and len(d["checks"]) == 4


def test_verify_failing_suite_exit_code(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "classical")
    assert code == 1 and not json.loads(out)["passed"]


def test_spectrum_cache_byte_identity(capsys, tmp_path):
    argv = ("spectrum", "solve", "--g", "1", "--gamma", "0.9", "--out", str(tmp_path), "--max-iterations", "5")
    c1, out1, err1 = run(capsys, *argv)
    c2, out2, err2 = run(capsys, *argv)
    assert "cache hit" in err2 and "cache hit" not in err1
    assert out1 == out2
    assert c1 == c2
    payload = json.loads(out1)
    # a point that fails the self-consistency gate is reported, never passed off as accepted
    assert (c1 == 0) == (payload["status"] == "accepted")
    key = Cache(tmp_path).key(1, 0.9, "ground")
    assert Cache(tmp_path).load(key) == payload


def test_cache_rejects_tampering(capsys, tmp_path):
    argv = ("spectrum", "solve", "--gamma", "0.9", "--out", str(tmp_path), "--max-iterations", "3")
    run(capsys, *argv)
    cache = Cache(tmp_path)
    key = cache.key(1, 0.9, "ground")
    entry = json.loads(cache.path(key).read_text())
    entry["payload"]["residuals"]["baxter_res"] *= 0.5
    cache.path(key).write_text(json.dumps(entry))
    assert cache.load(key) is None
    cache.path(key).write_text("{not json")
    assert cache.load(key) is None


@pytest.fixture(scope="module")
def point_files(tmp_path_factory, point_one, point_two):
    d = tmp_path_factory.mktemp("points")
    a, b = d / "p1.json", d / "p2.json"
    a.write_text(canonical_json(point_one.to_json()))
    b.write_text(canonical_json(point_two.to_json()))
    return a, b


def test_deform_pair_and_riemann(capsys, point_files, tmp_path):
    a, b = point_files
    code, out, _ = run(capsys, "deform", "pair", "--k", "1", "--l", "-1", "--left", str(a), "--right", str(a))
    assert code == 0 and json.loads(out)["scheme"] == "reg"
    csv = tmp_path / "P.csv"
    code, out, _ = run(capsys, "deform", "riemann", "--left", str(a), "--right", str(b), "--csv", str(csv))
    d = json.loads(out)
    assert code == 0 and d["indices"] == [-1, 1] and "symplectic_residual" in d
    assert csv.read_text().splitlines()[0] == ",-1,1"


def test_deform_circ_reports_failure(capsys, point_files):
    a, _ = point_files
    code, _, err = run(capsys, "deform", "circ", "--k", "1", "--l", "-1", "--left", str(a), "--right", str(a))
    assert code == 1 and json.loads(err)["error"] == "LimitError"


def test_missing_point_file_is_usage(capsys, tmp_path):
    code, _, _ = run(capsys, "deform", "riemann", "--left", str(tmp_path / "x.json"), "--right", str(tmp_path / "y.json"))
    assert code == 2


def test_melem_eval(capsys, point_files, tmp_path):
    a, b = point_files
    obs = tmp_path / "obs.json"
    obs.write_text(json.dumps({"h": {"terms": [[[1, 0], [-1]]]}, "H": {"terms": [[[1, 0], [-1]]]}}))
    code, out, _ = run(capsys, "melem", "eval", "--obs", str(obs), "--left", str(a), "--right", str(b))
    assert code == 0 and len(json.loads(out)["value"]) == 2
    obs.write_text("[")
    code, _, _ = run(capsys, "melem", "eval", "--obs", str(obs), "--left", str(a), "--right", str(b))
    assert code == 2
