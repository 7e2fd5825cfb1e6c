import json
import subprocess
import sys

import numpy as np
import pytest

from cstarext import AlgebraElement, AlgebraShape, ShiftClassOperator
from cstarext.schema import validate
from cstarext.serialize import dump_element, element_to_json
from cstarext.testkit import haar_unitary

S = ShiftClassOperator.shift(1)


def write(path, x):
    path.write_text(dump_element(x), encoding="utf-8")
    return path


@pytest.fixture
def files(tmp_path):
    rng = np.random.default_rng(0)
    u = haar_unitary(2, rng)
    out = {
        "extreme": write(tmp_path / "extreme.json", AlgebraElement(AlgebraShape.of(2, "shift"), [u, S])),
        "half": write(tmp_path / "half.json", AlgebraElement(AlgebraShape.of(2, "shift"), [0.5 * np.eye(2), S * 0.5])),
        "diag": write(tmp_path / "diag.json", AlgebraElement(AlgebraShape.of(2), [np.diag([1.0, 0.0])])),
        "e": write(tmp_path / "e.json", AlgebraElement(AlgebraShape.of(3), [np.diag([1.0, 0.0, 0.0])])),
        "f": write(tmp_path / "f.json", AlgebraElement(AlgebraShape.of(3), [np.diag([1.0, 1.0, 0.0])])),
        "bad": tmp_path / "bad.json",
    }
    out["bad"].write_text("{not json", encoding="utf-8")
    return out


def test_classify_extreme(run_cli, files):
    res = run_cli("classify", files["extreme"])
    assert res.code == 0
    validate("classify", res.json)
    assert res.json["verdict"] == "CStarExtreme"
    assert res.json["p1"] == [0] and res.json["p2"] == [1] and res.json["p3"] == []


def test_classify_not_extreme_both_routes(run_cli, files):
    for route in ("cstar", "linear"):
        res = run_cli("classify", "--route", route, files["half"])
        assert res.code == 0
        validate("classify", res.json)
        assert res.json["verdict"] == "NotExtreme" and res.json["route"] == route


@pytest.mark.parametrize(
    "args, schema",
    [
        (("average", "half"), "average"),
        (("polar", "half"), "polar"),
        (("wold", "extreme"), "wold"),
        (("quotient", "extreme"), "quotient"),
        (("norm", "half"), "norm"),
        (("compare", "e", "f"), "compare"),
    ],
)
def test_reports_validate(run_cli, files, args, schema):
    res = run_cli(args[0], *[files[a] for a in args[1:]])
    assert res.code == 0, res.err
    validate(schema, res.json)


def test_average_report_values(run_cli, files):
    rep = run_cli("average", files["half"]).json
    assert rep["midpoint_error"] <= 1e-9 and rep["x1_extreme"] and rep["x2_extreme"]


def test_simeq_and_verify_combo(run_cli, tmp_path):
    sh = AlgebraShape.of("shift")
    x = write(tmp_path / "x.json", AlgebraElement(sh, [S]))
    one = write(tmp_path / "one.json", AlgebraElement(sh, [ShiftClassOperator.identity()]))
    res = run_cli("--window", 64, "simeq", x, x, one)
    assert res.code == 0
    validate("simeq", res.json)
    assert res.json["verified"]

    t = element_to_json(AlgebraElement(sh, [ShiftClassOperator.identity() * (1 / np.sqrt(2))]))
    p = element_to_json(AlgebraElement(sh, [S]))
    combo = tmp_path / "combo.json"
    combo.write_text(json.dumps({"terms": [{"coefficient": t, "point": p}] * 2}), encoding="utf-8")
    res = run_cli("verify-combo", x, combo)
    assert res.code == 0
    validate("verify_combo", res.json)
    assert res.json["equivalences"] == [True, True]

    combo.write_text(json.dumps({"terms": [{"coefficient": p, "point": p}] * 2}), encoding="utf-8")
    res = run_cli("verify-combo", x, combo)
    assert res.code == 3
    validate("verify_combo", res.json)
    assert res.json["valid"] is False


def test_classify_algebra_writes_witness(run_cli, tmp_path):
    res = run_cli("--out", tmp_path, "classify-algebra", "2,shift,shift")
    assert res.code == 0
    validate("classify_algebra", res.json)
    assert res.json["iso_or_coiso_only"] is False
    witness = json.loads((tmp_path / "witness.json").read_text())
    validate("element", witness)
    assert run_cli("classify-algebra", "3,shift").json["iso_or_coiso_only"] is True


def test_exit_codes(run_cli, files, tmp_path):
    res = run_cli("classify", files["bad"])
    assert res.code == 1
    validate("error", res.json)
    assert res.json["error"] == "ParseError"
    assert run_cli("classify", tmp_path / "missing.json").code == 1
    assert run_cli("--window", 3, "classify", files["extreme"]).code == 1
    assert run_cli("frobnicate").code == 1
    # a non-contraction fails verification
    big = write(tmp_path / "big.json", AlgebraElement(AlgebraShape.of(1), [np.array([[2.0]])]))
    res = run_cli("classify", big)
    assert res.code == 3 and res.json["error"] == "NotAContraction"
    res = run_cli("wold", files["diag"])
    assert res.code == 3 and res.json["error"] == "NotIsometry"
    validate("error", res.json)
    # averaging outside the monomial-symbol subclass is unsupported
    sym = write(tmp_path / "sym.json", AlgebraElement(AlgebraShape.of("shift"), [ShiftClassOperator({1: 0.5, -1: 0.5})]))
    res = run_cli("average", sym)
    assert res.code == 2 and res.json["error"] == "UnsupportedShiftElement"
    validate("error", res.json)
    assert run_cli("--version").code == 0


def test_text_format(run_cli, files):
    res = run_cli("--format", "text", "classify", files["extreme"])
    assert res.code == 0 and "verdict: CStarExtreme" in res.out


def test_out_directory(run_cli, files, tmp_path):
    out = tmp_path / "reports"
    res = run_cli("--out", out, "norm", files["half"])
    assert res.code == 0
    assert (out / "norm.json").read_text() == res.out


def test_env_var_override(run_cli, files, monkeypatch):
    monkeypatch.setenv("CSTAREXT_WINDOW", "64")
    assert run_cli("norm", files["half"]).json["window"] == 64
    monkeypatch.setenv("CSTAREXT_WINDOW", "2")
    assert run_cli("norm", files["half"]).code == 1


@pytest.mark.parametrize("kind", ["contraction", "unitary", "isometry_shift", "nonextreme", "similarity_pair"])
def test_gen_is_byte_identical(run_cli, tmp_path, kind):
    outs = []
    for tag in ("a", "b"):
        d = tmp_path / tag
        res = run_cli("--seed", 42, "--out", d, "gen", kind, "--shape", "2,shift", "--count", 3)
        assert res.code == 0
        validate("gen", res.json)
        outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    assert outs[0] == outs[1]
    for name, data in outs[0].items():
        validate("meta" if name.endswith(".meta.json") else "element", json.loads(data))
    res = run_cli("--seed", 43, "--out", tmp_path / "c", "gen", kind, "--shape", "2,shift", "--count", 3)
    other = {p.name: p.read_bytes() for p in sorted((tmp_path / "c").iterdir())}
    assert other != outs[0]


def test_gen_random_shapes(run_cli, tmp_path):
    res = run_cli("--out", tmp_path, "gen", "contraction", "--shape", "shift", "--count", 4, "--random-shapes")
    assert res.code == 0 and len(res.json["files"]) == 4


def test_console_script_exit_code(files):
    proc = subprocess.run(
        [sys.executable, "-m", "cstarext.cli", "classify", str(files["bad"])], capture_output=True, text=True
    )
    assert proc.returncode == 1
    assert json.loads(proc.stdout)["error"] == "ParseError"
