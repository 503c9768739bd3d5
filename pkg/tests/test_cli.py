import json
import math

import jsonschema
import pytest

from holonomy import __version__
from holonomy.cli import ERROR_SCHEMA, REPORT_SCHEMA, main, render, run


def invoke(*argv):
    code, report = run(list(argv))
    jsonschema.validate(report, REPORT_SCHEMA)
    if code != 0:
        jsonschema.validate(report["results"], ERROR_SCHEMA)
    return code, report


def test_exponent_doubling():
    code, rep = invoke("exponent", "--example", "doubling", "--point", "0", "--depth", "5")
    assert code == 0 and rep["command"] == "exponent" and rep["version"] == __version__
    assert rep["results"]["points"][0]["lambda_hat"] == pytest.approx(math.log(2))


def test_exponent_csv(tmp_path):
    out = tmp_path / "prof.csv"
    code, _ = invoke("exponent", "--example", "doubling", "--point", "0", "--point", "0.1", "--depth", "3",
                     "--csv", str(out))
    assert code == 0
    assert len(out.read_text().splitlines()) == 1 + 2 * 4


def test_ping_pong_report():
    code, rep = invoke("ping-pong", "--example", "ifs_ping_pong")
    cert = rep["results"]["certificate"]
    assert code == 0 and rep["results"]["found"]
    assert cert["P"]["fixed_point"] == pytest.approx(0.0, abs=1e-10)
    assert cert["Q"]["fixed_point"] == pytest.approx(1.0, abs=1e-10)
    assert cert["powers"] == [1, 1]


def test_none_found_is_success():
    code, rep = invoke("ping-pong", "--example", "isometric_translation", "--density", "8")
    assert code == 0 and rep["results"] == {"certificate": None, "found": False}


def test_resilient_report():
    code, rep = invoke("resilient", "--example", "ifs_ping_pong")
    assert code == 0
    trace = rep["results"]["resilient"]["trace"]
    assert trace[0][0] == pytest.approx(0.75)


def test_pliss_csv(tmp_path):
    src = tmp_path / "lambdas.csv"
    src.write_text("lam\n-3\n1\n-1\n")
    flags = tmp_path / "flags.csv"
    code, rep = invoke("pliss", "--csv", str(src), "--column", "lam", "--a", "1", "--eps1", "0.5",
                       "--flags-csv", str(flags))
    assert code == 0 and rep["results"]["q"] == 1
    assert flags.read_text().splitlines()[1:] == ["1,-3.0,1,0", "2,1.0,0,1", "3,-1.0,0,0"]
    src.write_text("-3\n1\n-1\n")
    assert invoke("pliss", "--csv", str(src), "--a", "1", "--eps1", "0.5")[1]["results"]["q"] == 1


def test_pliss_bad_number(tmp_path):
    src = tmp_path / "l.csv"
    src.write_text("lam\n-3\nx\n")
    code, rep = invoke("pliss", "--csv", str(src), "--column", "lam", "--a", "1", "--eps1", "0.5")
    assert code == 2 and "line 3" in rep["results"]["detail"]


def test_pliss_precondition_is_module_error(tmp_path):
    src = tmp_path / "l.csv"
    src.write_text("1\n1\n")
    code, rep = invoke("pliss", "--csv", str(src), "--a", "1", "--eps1", "0.5")
    assert code == 1 and rep["results"]["error_kind"] == "PreconditionViolation"


@pytest.mark.parametrize("argv", [
    ["exponent", "--example", "doubling", "--point", "0", "--eps1", "0.01"],
    ["exponent", "--example", "doubling", "--point", "0", "--depth", "0"],
    ["describe", "--example", "nope"],
    ["describe"],
    ["bogus"],
])
def test_parse_errors_exit_2(argv):
    code, rep = invoke(*argv)
    assert code == 2 and rep["results"]["error_kind"] == "ParseError"


def test_validation_error_exit_3(tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("""
[transversal]
epsilon0 = 0.2
components = [[-1.0, 1.0, -1.5, 1.5]]

[[generator]]
id = "h"
kind = "affine"
params = { slope = -2.0, offset = 0.0 }
domain = [-0.5, 0.5]
extended_domain = [-0.7, 0.7]
""")
    code, rep = invoke("describe", "--config", str(cfg))
    assert code == 3 and rep["results"]["invariant"] == "orientation"


def test_budget_exit_4():
    code, rep = invoke("fixed-point", "--example", "isometric_translation", "--point", "0", "--budget", "50")
    assert code == 4 and rep["results"]["error_kind"] == "BudgetExhausted"


def test_divergent_gauge_exit_1():
    code, rep = invoke("gauge", "--example", "doubling", "--point", "0", "--epsilon", "0.3", "--depth", "4")
    assert code == 1 and rep["results"]["error_kind"] == "Divergent"


def test_gauge_and_entropy_and_contract():
    code, rep = invoke("gauge", "--example", "isometric_translation", "--point", "0", "--epsilon", "1",
                       "--depth", "20", "--generator", "t")
    assert code == 0 and rep["results"]["inequality"]["passed"]
    assert rep["results"]["value"] == pytest.approx((1 - math.exp(-21)) / (1 - math.exp(-1)))
    code, rep = invoke("entropy", "--example", "isometric_translation", "--n", "2")
    assert code == 0 and rep["results"]["estimate"] < 0.02
    code, rep = invoke("contract", "--example", "doubling", "--point", "0", "--n", "4")
    assert code == 0 and rep["results"]["certificate"]["sup_deriv"] == pytest.approx(1 / 16)


def test_describe_and_fixed_point():
    code, rep = invoke("describe", "--example", "doubling")
    assert code == 0 and rep["results"]["constants"]["C0"] == 2.0
    code, rep = invoke("fixed-point", "--example", "ifs_ping_pong", "--point", "0")
    assert code == 0 and rep["results"]["Phi"]["letters"] == ["f"]


def test_examples_dump_reloads(tmp_path):
    code, rep = invoke("examples", "dump", "moebius_slow")
    cfg = tmp_path / "m.toml"
    cfg.write_text(rep["results"]["config"])
    code2, rep2 = invoke("describe", "--config", str(cfg))
    assert code == 0 and code2 == 0
    assert len(rep2["results"]["generators"]) == 3


def test_main_writes_out_and_stdout(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["--out", str(out), "examples", "list"]) == 0
    assert json.loads(out.read_text())["command"] == "examples"
    assert main(["examples", "list"]) == 0
    assert json.loads(capsys.readouterr().out)["command"] == "examples"


def test_render_sorted_and_timestamp_only_difference():
    _, a = run(["exponent", "--example", "moebius_slow", "--point", "0.1", "--depth", "4"])
    _, b = run(["exponent", "--example", "moebius_slow", "--point", "0.1", "--depth", "4"])
    a["timestamp"] = b["timestamp"] = "T"
    assert render(a) == render(b)
    assert list(json.loads(render(a))) == sorted(json.loads(render(a)))


def test_workers_do_not_change_results():
    _, a = run(["--workers", "1", "ping-pong", "--example", "ifs_ping_pong", "--density", "16"])
    _, b = run(["--workers", "4", "ping-pong", "--example", "ifs_ping_pong", "--density", "16"])
    assert a["results"] == b["results"]
