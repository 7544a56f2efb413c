import io
import json
import subprocess
import sys
from fractions import Fraction

from qcint.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, jsonable, run


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def report(*argv):
    code, text, _ = call(*argv)
    return code, json.loads(text)


def test_integrate_dirichlet():
    code, r = report("integrate", "--fn", "dirichlet", "--domain", "[0,1]")
    assert code == EXIT_OK
    assert r["value"] == "0/1" and r["errorBound"] == "0/1"
    assert r["trace"] and all(s["value"] == "0/1" for s in r["trace"])


def test_integrate_over_set():
    code, r = report("integrate", "--fn", "const:1", "--set", "(0,1)u(2,3)")
    assert code == EXIT_OK and r["value"] == "2/1"


def test_integrate_infinite_verdict():
    code, r = report("integrate", "--fn", "tail-indicator:1")
    assert code == EXIT_OK and r["verdict"] == "+inf"
    code, _, _ = call("integrate", "--fn", "exp-abs-y", "--require-summable")
    assert code == EXIT_FAIL


def test_integrate_probe():
    code, r = report("integrate", "--fn", "step:0,1/2,1,-2,5", "--probe", "5", "--seed", "4")
    assert code == EXIT_OK
    assert r["probe"]["boundedCheck"] is True and len(r["probe"]["rows"]) == 5


def test_riemann():
    code, r = report("riemann", "--fn", "power:2", "--tol", "1e-6")
    assert code == EXIT_OK and abs(r["value"] - 1 / 3) <= 1e-6
    code, _, err = call("riemann", "--fn", "dirichlet", "--tol", "1/1000")
    assert code == EXIT_FAIL


def test_dini():
    assert call("dini", "--fn", "thomae", "--alpha", "1/5", "--eps", "1/10")[0] == EXIT_OK
    code, r = report("dini", "--fn", "dirichlet", "--alpha", "1/2", "--eps", "1/2", "--max-n", "256")
    assert code == EXIT_FAIL and r["heavyLength"] == "1/1"


def test_measure():
    code, r = report("measure", "--set", "(0,1)u(0,1)")
    assert code == EXIT_OK and r["measure"] == "1/1" and r["L"] == "2/1"
    code, r = report("measure", "--set", "[0,1]", "--box", "[-1,2]", "--eps", "1/100")
    assert code == EXIT_OK and "exterior" in r


def test_decompose_svg(tmp_path):
    path = tmp_path / "d.svg"
    code, r = report("decompose", "--set", "(0,1)x(0,1)", "--depth", "4", "--svg", str(path))
    assert code == EXIT_OK
    assert r["cubeMeasure"] == "49/64" and r["setMeasure"] == "1/1" and r["missing"] == "15/64"
    assert path.read_text().startswith("<svg")


def test_cantor():
    code, r = report("cantor", "--kind", "svc", "--stage", "10", "--emit", "measure")
    assert code == EXIT_OK and r["measureRemoved"] == "1023/2048"
    code, r = report("cantor", "--kind", "ternary", "--stage", "3", "--emit", "measure")
    assert r["measureRemoved"] == "19/27"
    code, r = report("cantor", "--kind", "ternary", "--stage", "2")
    assert len(r["retained"]) == 4


def test_cantor_csv():
    code, text, _ = call("cantor", "--kind", "ternary", "--stage", "2", "--csv")
    lines = text.strip().splitlines()
    assert code == EXIT_OK and len(lines) >= 2 and "," in lines[0]


def test_egorov():
    code, r = report("egorov", "--seq", "power:n", "--eps", "1/8")
    assert code == EXIT_OK and r["passed"] is True
    code, _, err = call("egorov", "--seq", "trapezoid:n", "--eps", "1/8")
    assert code == EXIT_USAGE and "unbounded" in err


def test_converge():
    assert call("converge", "--law", "dominated", "--seq", "spike:n")[0] == EXIT_FAIL
    assert call("converge", "--law", "dominated", "--seq", "power:n", "--dominator", "power:0")[0] == EXIT_OK
    assert call("converge", "--law", "monotone", "--seq", "tail-indicator:n")[0] == EXIT_FAIL
    code, r = report("converge", "--law", "fatou", "--seq", "spike:n")
    assert code == EXIT_OK and r["gap"] == "1/1"


def test_fubini():
    code, r = report("fubini", "--fn", "prod(poly:0,1;poly:0,1)", "--rect", "[0,1]x[0,1]")
    assert code == EXIT_OK and r["verdict"] == "pass"
    assert r["direct"]["value"] == "1/4"
    assert all(Fraction(g) < Fraction(1, 10 ** 6) for g in r["gaps"].values())
    code, r = report("fubini", "--fn", "exp-abs-y")
    assert code == EXIT_FAIL and r["verdict"] == "not-summable"
    code, r = report("fubini", "--set", "[0,1]x[0,1]u[0,1]x[2,3]", "--axis", "1")
    assert code == EXIT_OK and r["passed"] is True


def test_usage_errors():
    assert call("integrate", "--fn", "no-such-fn")[0] == EXIT_USAGE
    assert call("integrate", "--fn", "spike:1")[0] == EXIT_USAGE
    assert call("riemann", "--fn", "power:2", "--tol", "0")[0] == EXIT_USAGE
    assert call("cantor", "--kind", "fat", "--stage", "1")[0] == EXIT_USAGE
    assert call()[0] == EXIT_USAGE


def test_global_flags_anywhere():
    a = call("--seed", "3", "integrate", "--fn", "power:2")
    b = call("integrate", "--fn", "power:2", "--seed", "3")
    assert a[0] == b[0] == EXIT_OK and a[1] == b[1]


def test_deterministic():
    argv = ["integrate", "--fn", "alternating:3", "--probe", "4", "--seed", "11"]
    assert call(*argv)[1] == call(*argv)[1]


def test_jsonable():
    assert jsonable({"a": Fraction(1, 3), "b": float("inf"), "c": [Fraction(2)]}) == {"a": "1/3", "b": "inf",
                                                                                   "c": ["2/1"]}


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qcint.cli", "cantor", "--kind", "svc", "--stage", "2",
                           "--emit", "measure"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["measureRemoved"] == "3/8"
