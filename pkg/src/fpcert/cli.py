"""Command line front end: problems in, traces and certificate reports out.

Artifacts are plain CSV/JSON with 17-significant-digit decimal floats so that
every number round-trips exactly and repeated runs with the same seed produce
byte-identical files.

Exit codes: 0 run completed (including stagnation at max_n), 1 validation or
step failure, 2 divergence/non-contraction guard.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Tuple

import yaml

from .core import BallDomain
from .estimate import estimate_lipschitz_K, estimate_lipschitz_M, with_safety
from .greens import GridFunction, IntegralTrace, run_integral_iteration
from .majorant import (MajorantError, NoValidMajorantError, certify as run_certificate,
                       majorant_from_constants, precheck, tail_bound)
from .problems import (CATALOG, CertRequest, ProblemError, ResolvedProblem,
                       constants_for, override_param, resolve_config)
from .schemes import IterationTrace, SchemeKind, StepFailure, run_outer

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_DIVERGED = 2

_GUARD_REASONS = ("diverged", "non_contraction")


def _fmt(v) -> str:
    return format(float(v), ".17g")


class CliError(ValueError):
    pass


def _load_cfg(source: str) -> dict:
    if source in CATALOG:
        return {"catalog": source}
    try:
        with open(source, "r") as fh:
            cfg = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ProblemError("%r is neither a catalog problem nor a readable file" % source)
    except yaml.YAMLError as exc:
        raise ProblemError("cannot parse %s: %s" % (source, exc))
    if not isinstance(cfg, dict):
        raise ProblemError("problem file %s must contain a mapping" % source)
    return cfg


def _resolve(source: str, seed: Optional[int]) -> ResolvedProblem:
    cfg = _load_cfg(source)
    if seed is not None:
        pert = dict(cfg.get("perturbation") or {})
        pert["seed"] = seed
        cfg["perturbation"] = pert
    return resolve_config(cfg)


# ---------------------------------------------------------------------------
# artifact writers/readers


def _write_trace_csv(path: Path, trace: IterationTrace):
    sums = trace.partial_sums()
    with open(path, "w", newline="") as fh:
        fh.write("n,r_n,R_n,r_tilde_n,residual_n,inner_defect_n,injected_n\n")
        for n in range(trace.steps + 1):
            row = [str(n)]
            if n < len(trace.r):
                row += [_fmt(trace.r[n]), _fmt(sums[n])]
            else:
                row += ["", ""]
            row += [_fmt(trace.r_tilde[n]), _fmt(trace.residual[n])]
            if n >= 1:
                row += [_fmt(trace.inner_defect[n - 1]), _fmt(trace.injected[n - 1])]
            else:
                row += ["", ""]
            fh.write(",".join(row) + "\n")


def _write_iterates_csv(path: Path, trace: IterationTrace):
    dim = trace.iterates[0].dim
    with open(path, "w", newline="") as fh:
        fh.write("n," + ",".join("x%d" % (i + 1) for i in range(dim)) + "\n")
        for n, x in enumerate(trace.iterates):
            fh.write(",".join([str(n)] + [_fmt(x[i]) for i in range(dim)]) + "\n")


def _write_integral_trace_csv(path: Path, trace: IntegralTrace):
    with open(path, "w", newline="") as fh:
        fh.write("n,r_n,r_tilde_n,residual_n\n")
        for n in range(trace.steps + 1):
            row = [str(n),
                   _fmt(trace.r[n]) if n < len(trace.r) else "",
                   _fmt(trace.r_tilde[n]),
                   _fmt(trace.residual[n])]
            fh.write(",".join(row) + "\n")


def _write_solution_csv(path: Path, g: GridFunction):
    with open(path, "w", newline="") as fh:
        fh.write("node,value\n")
        for t, v in zip(g.nodes, g.values):
            fh.write("%s,%s\n" % (_fmt(t), _fmt(v)))


def _read_trace_r(path: Path) -> List[float]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except FileNotFoundError:
        raise CliError("no trace.csv in the trace directory (run `fpcert run` first)")
    return [float(row["r_n"]) for row in rows if row.get("r_n")]


def _read_run_json(path: Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise CliError("no run.json in the trace directory (run `fpcert run` first)")


def _dump_json(path: Path, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# run


def _execute_run(resolved: ResolvedProblem, out_dir: Path, inner_tol: float) -> Tuple[int, dict]:
    out_dir.mkdir(parents=True, exist_ok=True)
    if resolved.kind == "integral":
        return _execute_integral(resolved, out_dir)
    try:
        trace = run_outer(resolved.operator, resolved.scheme, resolved.x0,
                          plan=resolved.plan, stop=resolved.stop, norm=resolved.norm,
                          inner_tol=inner_tol, custom_factory=resolved.custom_factory())
    except StepFailure as exc:
        return EXIT_VALIDATION, {"problem": resolved.name, "digest": resolved.digest,
                                 "error": str(exc), "failed_step": exc.step}
    _write_trace_csv(out_dir / "trace.csv", trace)
    _write_iterates_csv(out_dir / "iterates.csv", trace)
    code = EXIT_DIVERGED if trace.stop_reason in _GUARD_REASONS else EXIT_OK
    summary = {
        "problem": resolved.name,
        "digest": resolved.digest,
        "kind": resolved.kind,
        "scheme": resolved.scheme.value,
        "norm": resolved.norm.value,
        "seed": resolved.plan.seed,
        "inner_tol": inner_tol,
        "stop_reason": trace.stop_reason,
        "steps": trace.steps,
        "final_residual": trace.residual[-1],
        "final_r": trace.r[-1] if trace.r else None,
        "exit": code,
    }
    _dump_json(out_dir / "run.json", summary)
    return code, summary


def _execute_integral(resolved: ResolvedProblem, out_dir: Path) -> Tuple[int, dict]:
    setup = resolved.integral
    x0 = GridFunction.uniform(setup.T_end, setup.m)
    trace = run_integral_iteration(setup.kernel(), resolved.operator, x0, resolved.stop)
    _write_integral_trace_csv(out_dir / "trace.csv", trace)
    _write_solution_csv(out_dir / "solution.csv", trace.grids[-1])
    code = EXIT_DIVERGED if trace.stop_reason in _GUARD_REASONS else EXIT_OK
    summary = {
        "problem": resolved.name,
        "digest": resolved.digest,
        "kind": "integral",
        "m": setup.m,
        "T_end": setup.T_end,
        "stop_reason": trace.stop_reason,
        "steps": trace.steps,
        "final_residual": trace.residual[-1],
        "final_r": trace.r[-1] if trace.r else None,
        "exit": code,
    }
    if setup.exact is not None:
        final = trace.grids[-1]
        summary["sup_error_vs_exact"] = float(
            max(abs(final.values - setup.exact(final.nodes))))
    _dump_json(out_dir / "run.json", summary)
    return code, summary


def cmd_run(args) -> int:
    resolved = _resolve(args.problem, args.seed)
    out_dir = Path(args.out) if args.out else Path("fpcert-out") / resolved.name
    code, summary = _execute_run(resolved, out_dir, args.inner_tol)
    if "error" in summary:
        print("error: step %s failed: %s" % (summary.get("failed_step"), summary["error"]),
              file=sys.stderr)
        return code
    print("%s: %d steps, stopped on %s, final residual %s -> %s"
          % (resolved.name, summary["steps"], summary["stop_reason"],
             _fmt(summary["final_residual"]), out_dir))
    return code


# ---------------------------------------------------------------------------
# certify


def _problem_constants(resolved: ResolvedProblem):
    if resolved.M is not None:
        return resolved.constants(), None
    if resolved.estimate_cfg is None:
        raise CliError("problem %r has neither analytic constants nor an estimate block"
                       % resolved.name)
    cfg = resolved.estimate_cfg
    ball = resolved.ball or BallDomain(resolved.x0, float(cfg.get("radius", 1.0)),
                                       resolved.norm)
    samples = int(cfg.get("samples", 200))
    seed = int(cfg.get("seed", 0))
    safety = float(cfg.get("safety", 1.1))
    m_est = with_safety(estimate_lipschitz_M(resolved.operator, ball, samples, seed), safety)
    k_est = with_safety(estimate_lipschitz_K(resolved.operator, ball, max(10, samples // 2),
                                             seed), safety)
    note = ("constants estimated by sampling (%d pairs, seed %d), safety factor %s"
            % (samples, seed, _fmt(safety)))
    c = constants_for(m_est, k_est, resolved.scheme, resolved.plan,
                      resolved.operator, resolved.x0, resolved.norm, resolved.theta)
    return c, note


def cmd_certify(args) -> int:
    resolved = _resolve(args.problem, args.seed)
    if resolved.kind == "integral":
        print("error: certificates apply to fixed_point/root runs; integral runs "
              "are checked by bound propagation", file=sys.stderr)
        return EXIT_VALIDATION
    trace_dir = Path(args.trace)
    run_info = _read_run_json(trace_dir / "run.json")
    if run_info.get("digest") != resolved.digest:
        print("error: trace digest %s does not match problem digest %s"
              % (run_info.get("digest"), resolved.digest), file=sys.stderr)
        return EXIT_VALIDATION
    r_meas = _read_trace_r(trace_dir / "trace.csv")
    if not r_meas:
        print("error: trace has no completed steps to certify", file=sys.stderr)
        return EXIT_VALIDATION
    inner_tol = float(run_info.get("inner_tol", 1e-12))
    slack = 10.0 * inner_tol + 1e-12
    horizon = args.horizon

    constants, note = _problem_constants(resolved)
    report = {
        "problem": resolved.name,
        "digest": resolved.digest,
        "horizon": horizon,
        "slack": slack,
        "precheck": [{"name": e.name, "status": e.status, "detail": e.detail}
                     for e in precheck(constants, r0=r_meas[0], horizon=horizon).entries],
        "certificates": [],
        "tail_bounds": None,
    }
    if note:
        report["constants_note"] = note

    out_dir = Path(args.out) if args.out else trace_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        p = majorant_from_constants(constants, resolved.scheme, r0=r_meas[0], horizon=horizon)
    except (NoValidMajorantError, MajorantError) as exc:
        report["error"] = str(exc)
        _dump_json(out_dir / "certify.json", report)
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_VALIDATION

    report["majorant"] = {"eta": p.eta, "r0": p.r0,
                          "lambda_0": p.lam(0), "rho_0": p.rho(0)}

    requests = resolved.cert_requests or [CertRequest("bounded")]
    all_ok = True
    for req in requests:
        cert = run_certificate(p, req.regime, horizon, witnesses=req.witnesses)
        entry = {
            "regime": cert.regime,
            "valid": cert.valid,
            "premises_ok": cert.premises_ok,
            "bounds_ok": cert.bounds_ok,
            "witnesses": cert.witnesses,
            "checked_horizon": cert.checked_horizon,
            "min_margin_sim": cert.min_margin if math.isfinite(cert.min_margin) else None,
            "detail": cert.detail,
        }
        measured = None
        if cert.valid:
            margins = [cert.upper[n] - r_meas[n]
                       for n in range(1, min(len(r_meas), horizon + 1))
                       if math.isfinite(cert.upper[n])]
            measured = min(margins) if margins else None
        entry["min_margin_measured"] = measured
        ok = cert.valid and (measured is None or measured >= -slack)
        entry["ok"] = ok
        all_ok = all_ok and ok
        report["certificates"].append(entry)
        print("%s: %s%s" % (req.regime,
                            "valid" if cert.valid else "invalid",
                            "" if measured is None else ", measured margin %s" % _fmt(measured)))

    tails = []
    for n in range(1, len(r_meas) + 1):
        try:
            t = tail_bound(r_meas, p, n, horizon=horizon)
        except (NoValidMajorantError, MajorantError):
            tails.append(None)
            continue
        tails.append(t if math.isfinite(t) else None)
    report["tail_bounds"] = tails
    report["all_valid"] = all_ok

    _dump_json(out_dir / "certify.json", report)
    return EXIT_OK if all_ok else EXIT_VALIDATION


# ---------------------------------------------------------------------------
# sweep and catalog


def _parse_values(text: str) -> List[float]:
    vals = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            vals.append(float(chunk))
        except ValueError:
            raise CliError("sweep value %r is not a number" % chunk)
    return vals


def _value_label(param: str, value: float) -> str:
    if param in ("m", "seed"):
        return "%s=%d" % (param, int(value))
    return "%s=%s" % (param, _fmt(value))


def cmd_sweep(args) -> int:
    cfg = _load_cfg(args.problem)
    if args.seed is not None:
        pert = dict(cfg.get("perturbation") or {})
        pert["seed"] = args.seed
        cfg["perturbation"] = pert
    values = _parse_values(args.values)
    if not values:
        print("error: sweep needs a nonempty values list", file=sys.stderr)
        return EXIT_VALIDATION
    # resolve everything up front so validation failures abort before any run
    jobs = []
    for v in values:
        resolved = resolve_config(override_param(cfg, args.param, v))
        jobs.append((v, resolved))
    out_root = Path(args.out) if args.out else Path("fpcert-out") / ("sweep-" + jobs[0][1].name)
    out_root.mkdir(parents=True, exist_ok=True)

    def work(job):
        v, resolved = job
        return _execute_run(resolved, out_root / _value_label(args.param, v), args.inner_tol)

    with ThreadPoolExecutor(max_workers=min(8, len(jobs))) as pool:
        results = list(pool.map(work, jobs))

    with open(out_root / "summary.csv", "w", newline="") as fh:
        fh.write("param,value,steps,stop_reason,final_residual,final_r,exit\n")
        for (v, resolved), (code, summary) in zip(jobs, results):
            fh.write(",".join([
                args.param, _fmt(v),
                str(summary.get("steps", "")),
                str(summary.get("stop_reason", summary.get("error", "failed"))),
                _fmt(summary["final_residual"]) if "final_residual" in summary else "",
                _fmt(summary["final_r"]) if summary.get("final_r") is not None else "",
                str(code),
            ]) + "\n")
    print("sweep of %s over %d values -> %s" % (args.param, len(jobs), out_root))
    return EXIT_OK


def cmd_catalog(args) -> int:
    for name, entry in CATALOG.items():
        print("%-24s %-12s %s" % (name, entry.kind, entry.summary))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors, which collides with the
    # divergence-guard exit code; route usage errors through CliError instead
    def error(self, message):
        raise CliError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fpcert",
                     description="Inexact fixed-point iteration runner with "
                                 "convergence-rate certificates.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a problem and write trace artifacts")
    run_p.add_argument("problem", help="catalog name or YAML problem file")
    run_p.add_argument("--out", help="output directory (default fpcert-out/<name>)")
    run_p.add_argument("--seed", type=int, help="override the perturbation seed")
    run_p.add_argument("--inner-tol", type=float, default=1e-12,
                       help="inner solve tolerance (default 1e-12)")
    run_p.set_defaults(func=cmd_run)

    cert_p = sub.add_parser("certify", help="check certificates against a recorded trace")
    cert_p.add_argument("problem")
    cert_p.add_argument("--trace", required=True, help="directory written by `fpcert run`")
    cert_p.add_argument("--out", help="where to write certify.json (default: trace dir)")
    cert_p.add_argument("--horizon", type=int, default=200,
                        help="side-condition horizon (default 200)")
    cert_p.add_argument("--seed", type=int, help="seed used for the run, if overridden")
    cert_p.set_defaults(func=cmd_certify)

    sweep_p = sub.add_parser("sweep", help="run a problem across one scalar parameter")
    sweep_p.add_argument("problem")
    sweep_p.add_argument("--param", required=True, help="eps, m, alpha or seed")
    sweep_p.add_argument("--values", required=True, help="comma-separated values")
    sweep_p.add_argument("--out")
    sweep_p.add_argument("--seed", type=int)
    sweep_p.add_argument("--inner-tol", type=float, default=1e-12)
    sweep_p.set_defaults(func=cmd_sweep)

    cat_p = sub.add_parser("catalog", help="list built-in problems")
    cat_p.set_defaults(func=cmd_catalog)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (CliError, ProblemError, MajorantError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
