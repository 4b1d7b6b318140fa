import csv
import json

import pytest

from fpcert.cli import main


def run_cli(*argv):
    return main(list(argv))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_yaml(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# -- run -----------------------------------------------------------------


def test_run_writes_artifacts(tmp_path):
    out = tmp_path / "lin"
    assert run_cli("run", "linear-contraction", "--out", str(out)) == 0
    for fname in ("trace.csv", "iterates.csv", "run.json"):
        assert (out / fname).exists()
    info = read_json(out / "run.json")
    assert info["problem"] == "linear-contraction"
    assert info["scheme"] == "contraction"
    assert info["stop_reason"] == "residual_tol"
    assert info["exit"] == 0
    assert len(info["digest"]) == 64

    with open(out / "trace.csv") as fh:
        header = fh.readline().rstrip("\n")
    assert header == "n,r_n,R_n,r_tilde_n,residual_n,inner_defect_n,injected_n"
    rows = read_rows(out / "trace.csv")
    first = rows[0]
    assert first["n"] == "0"
    assert float(first["r_n"]) == 1.0
    assert float(first["R_n"]) == 1.0
    assert float(first["r_tilde_n"]) == 0.0
    assert first["inner_defect_n"] == "" and first["injected_n"] == ""
    # the last row records the final iterate: no forward step from it
    assert rows[-1]["r_n"] == "" and rows[-1]["R_n"] == ""
    assert float(rows[-1]["residual_n"]) <= 1e-12


def test_trace_floats_are_canonical_17g(tmp_path):
    out = tmp_path / "cos"
    assert run_cli("run", "cos-fixed-point", "--out", str(out)) == 0
    for path in (out / "trace.csv", out / "iterates.csv"):
        rows = read_rows(path)
        for row in rows:
            for key, text in row.items():
                if key == "n" or text == "":
                    continue
                assert format(float(text), ".17g") == text, (path, key, text)


def test_run_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli("run", "perturbed-linear-random", "--seed", "5", "--out", str(a)) == 0
    assert run_cli("run", "perturbed-linear-random", "--seed", "5", "--out", str(b)) == 0
    for fname in ("trace.csv", "iterates.csv"):
        assert (a / fname).read_bytes() == (b / fname).read_bytes()
    c = tmp_path / "c"
    assert run_cli("run", "perturbed-linear-random", "--seed", "6", "--out", str(c)) == 0
    assert (a / "iterates.csv").read_bytes() != (c / "iterates.csv").read_bytes()


def test_run_divergence_exits_2(tmp_path):
    out = tmp_path / "exp"
    assert run_cli("run", "expanding", "--out", str(out)) == 2
    info = read_json(out / "run.json")
    assert info["stop_reason"] == "diverged"
    assert info["exit"] == 2


def test_run_reports_bad_expression_with_position(tmp_path, capsys):
    src = write_yaml(tmp_path, "bad.yaml", "operator: 0.5*x9 + 1\nx0: 0.0\n")
    assert run_cli("run", src, "--out", str(tmp_path / "o")) == 1
    err = capsys.readouterr().err
    assert "x9" in err and "position" in err


def test_run_missing_source(tmp_path, capsys):
    assert run_cli("run", str(tmp_path / "nope.yaml")) == 1
    assert "neither a catalog problem" in capsys.readouterr().err


def test_run_integral_problem(tmp_path):
    src = write_yaml(tmp_path, "vol.yaml",
                     "catalog: volterra-exp\nintegral: {m: 100}\n")
    out = tmp_path / "vol"
    assert run_cli("run", src, "--out", str(out)) == 0
    assert (out / "solution.csv").exists()
    info = read_json(out / "run.json")
    assert info["kind"] == "integral"
    assert info["m"] == 100
    assert info["sup_error_vs_exact"] < 5e-3
    rows = read_rows(out / "solution.csv")
    assert list(rows[0]) == ["node", "value"]
    assert len(rows) == 101


def test_run_inner_tol_recorded(tmp_path):
    out = tmp_path / "avg"
    assert run_cli("run", "averaged-linear", "--inner-tol", "1e-6",
                   "--out", str(out)) == 0
    assert read_json(out / "run.json")["inner_tol"] == 1e-6
    rows = read_rows(out / "trace.csv")
    defects = [float(r["inner_defect_n"]) for r in rows if r["inner_defect_n"]]
    assert defects and all(d <= 1e-6 for d in defects)


# -- certify ----------------------------------------------------------------


def certified_setup(tmp_path, problem_yaml, run_name="t"):
    src = write_yaml(tmp_path, "prob.yaml", problem_yaml)
    out = tmp_path / run_name
    rc = run_cli("run", src, "--out", str(out))
    return src, out, rc


def test_certify_valid_bounded(tmp_path):
    src, out, rc = certified_setup(tmp_path, (
        "catalog: linear-contraction\n"
        "certificates:\n"
        "  - {regime: bounded, witnesses: search}\n"
        "  - {regime: geometric, witnesses: search}\n"))
    assert rc == 0
    assert run_cli("certify", src, "--trace", str(out)) == 0
    rep = read_json(out / "certify.json")
    assert rep["all_valid"] is True
    assert [c["regime"] for c in rep["certificates"]] == ["bounded", "geometric"]
    for c in rep["certificates"]:
        assert c["valid"] and c["ok"]
        assert c["min_margin_measured"] > 0.0
    assert all(e["status"] == "pass" for e in rep["precheck"]
               if e["name"] != "first step bound")
    tails = rep["tail_bounds"]
    assert tails and all(t is not None and t > 0 for t in tails)
    # tail bounds must dominate the measured remaining travel distance
    rows = read_rows(out / "trace.csv")
    r = [float(x["r_n"]) for x in rows if x["r_n"]]
    for n in range(1, len(r) + 1):
        assert tails[n - 1] >= sum(r[n:]) * (1 - 1e-12)


def test_certify_digest_mismatch(tmp_path, capsys):
    src, out, rc = certified_setup(tmp_path, "catalog: linear-contraction\n")
    assert rc == 0
    assert run_cli("certify", "cos-fixed-point", "--trace", str(out)) == 1
    assert "digest" in capsys.readouterr().err


def test_certify_invalid_regime_exits_1(tmp_path):
    # quadratic cannot hold here: eta r0 > 1 from this start
    src, out, rc = certified_setup(tmp_path, (
        "catalog: cos-fixed-point\n"
        "certificates:\n"
        "  - {regime: quadratic, witnesses: search}\n"))
    assert rc == 0
    assert run_cli("certify", src, "--trace", str(out)) == 1
    rep = read_json(out / "certify.json")
    assert rep["all_valid"] is False
    assert rep["certificates"][0]["valid"] is False


def test_certify_integral_unsupported(tmp_path, capsys):
    out = tmp_path / "vol"
    assert run_cli("run", "volterra-exp", "--out", str(out)) == 0
    assert run_cli("certify", "volterra-exp", "--trace", str(out)) == 1
    assert "bound propagation" in capsys.readouterr().err


def test_certify_needs_existing_trace(tmp_path, capsys):
    assert run_cli("certify", "linear-contraction",
                   "--trace", str(tmp_path / "missing")) == 1
    assert "run.json" in capsys.readouterr().err


def test_certify_with_estimated_constants(tmp_path):
    src, out, rc = certified_setup(tmp_path, (
        "operator: 0.5*x1 + 1\n"
        "x0: 0.0\n"
        "stop: {max_n: 40, residual_tol: 1e-13}\n"
        "constants: {estimate: {radius: 2.0, samples: 100}}\n"
        "certificates:\n"
        "  - {regime: bounded, witnesses: search}\n"))
    assert rc == 0
    assert run_cli("certify", src, "--trace", str(out)) == 0
    rep = read_json(out / "certify.json")
    assert "constants_note" in rep
    assert "safety factor" in rep["constants_note"]


# -- sweep ---------------------------------------------------------------------


def test_sweep_preserves_input_order(tmp_path):
    out = tmp_path / "sw"
    assert run_cli("sweep", "linear-contraction", "--param", "eps",
                   "--values", "1e-2,1e-4,1e-3", "--out", str(out)) == 0
    rows = read_rows(out / "summary.csv")
    assert [r["value"] for r in rows] == ["0.01", "0.0001", "0.001"]
    assert all(r["param"] == "eps" for r in rows)
    assert all(r["exit"] == "0" for r in rows)
    for r in rows:
        assert (out / ("eps=" + r["value"]) / "trace.csv").exists()
    # stagnation level tracks the injected budget: residual ~ eps
    final = {r["value"]: float(r["final_residual"]) for r in rows}
    assert final["0.01"] > final["0.001"] > final["0.0001"]


def test_sweep_aborts_on_bad_value_before_running(tmp_path):
    out = tmp_path / "sw"
    assert run_cli("sweep", "linear-contraction", "--param", "eps",
                   "--values", "1e-2,banana", "--out", str(out)) == 1
    assert not out.exists()


def test_sweep_aborts_on_bad_param(tmp_path, capsys):
    out = tmp_path / "sw"
    assert run_cli("sweep", "linear-contraction", "--param", "theta",
                   "--values", "0.5", "--out", str(out)) == 1
    assert "unknown sweep param" in capsys.readouterr().err
    assert not out.exists()


def test_sweep_integral_mesh(tmp_path):
    out = tmp_path / "swm"
    assert run_cli("sweep", "volterra-exp", "--param", "m",
                   "--values", "50,100", "--out", str(out)) == 0
    rows = read_rows(out / "summary.csv")
    assert [r["value"] for r in rows] == ["50", "100"]
    assert (out / "m=50" / "solution.csv").exists()


# -- catalog and usage -----------------------------------------------------------


def test_catalog_lists_everything(capsys):
    from fpcert.problems import catalog_names
    assert run_cli("catalog") == 0
    text = capsys.readouterr().out
    for name in catalog_names():
        assert name in text


def test_usage_errors_exit_1(capsys):
    assert run_cli("frobnicate") == 1
    assert run_cli() == 1
    assert run_cli("certify", "linear-contraction") == 1  # --trace required
    capsys.readouterr()
