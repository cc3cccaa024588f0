"""Problem-file ingestion and the command-line interface.

Commands: kkt, frame, gamma, ssosc, sweep, certify, selftest.  Every
command writes a canonical JSON report (stdout by default) and exits 0
when the computation ran, 1 on input errors, 2 on internal or oracle
failures.
"""

import argparse
import json
import sys

import numpy as np

from .certify import (CompositeProblem, certify, gamma_closed_form, hessian_pd_sweep,
                      kkt_candidate, ssosc_margin, DEFAULT_SIGMA_GRID)
from .config import ToleranceConfig
from .oracles import run_selftest
from .prox import NuclearNorm, PsdIndicator, make_frame
from .report import (base_report, emit_report, frame_summary, kkt_summary,
                     ssosc_summary, sweep_summary)


class ProblemError(ValueError):
    """Input file failed validation; message names the offending key."""


def _need(mapping, key, where):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ProblemError(f"{where}: missing key '{key}'")
    return mapping[key]


def _as_matrix(value, where, shape=None):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ProblemError(f"{where}: not a numeric matrix ({exc})") from None
    if arr.ndim != 2:
        raise ProblemError(f"{where}: expected a matrix (array of arrays)")
    if shape is not None and arr.shape != shape:
        raise ProblemError(f"{where}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ProblemError(f"{where}: non-finite entries")
    return arr


def _as_vector(value, where, length=None):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ProblemError(f"{where}: not a numeric array ({exc})") from None
    if arr.ndim != 1:
        raise ProblemError(f"{where}: expected a flat array")
    if length is not None and arr.shape != (length,):
        raise ProblemError(f"{where}: expected length {length}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ProblemError(f"{where}: non-finite entries")
    return arr


def _check_sym(arr, where, tol=1e-12):
    if arr.shape[0] != arr.shape[1]:
        raise ProblemError(f"{where}: must be square")
    if arr.size and np.max(np.abs(arr - arr.T)) > tol:
        raise ProblemError(f"{where}: not symmetric to {tol:g}")
    return 0.5 * (arr + arr.T)


def parse_problem_dict(doc, tolerances=ToleranceConfig()):
    n = _need(doc, "n", "problem")
    if not isinstance(n, int) or n < 0:
        raise ProblemError("n: must be a nonnegative integer")

    gspec = _need(doc, "g", "problem")
    kind = _need(gspec, "kind", "g")
    if kind == "psd_indicator":
        m = _need(gspec, "m", "g")
        if not isinstance(m, int) or m < 1:
            raise ProblemError("g.m: must be a positive integer")
        func = PsdIndicator(m)
    elif kind == "nuclear_norm":
        p = _need(gspec, "p", "g")
        q = _need(gspec, "q", "g")
        if not (isinstance(p, int) and isinstance(q, int) and 1 <= p <= q):
            raise ProblemError("g.p/g.q: need integers with 1 <= p <= q")
        func = NuclearNorm(p, q)
    else:
        raise ProblemError(f"g.kind: unknown kind '{kind}'")

    f0 = _need(doc, "f0", "problem")
    quad = _check_sym(_as_matrix(_need(f0, "Q", "f0"), "f0.Q", (n, n)), "f0.Q")
    lin = _as_vector(_need(f0, "c", "f0"), "f0.c", n)
    const = float(_need(f0, "const", "f0"))

    fmap = _need(doc, "F", "problem")
    offset = _as_matrix(_need(fmap, "A0", "F"), "F.A0", func.shape)
    raw_maps = _need(fmap, "A", "F")
    if not isinstance(raw_maps, list) or len(raw_maps) != n:
        raise ProblemError(f"F.A: expected a list of {n} matrices")
    maps = np.zeros((n,) + func.shape)
    for i, entry in enumerate(raw_maps):
        maps[i] = _as_matrix(entry, f"F.A[{i}]", func.shape)
    if isinstance(func, PsdIndicator):
        offset = _check_sym(offset, "F.A0")
        for i in range(n):
            maps[i] = _check_sym(maps[i], f"F.A[{i}]")

    cand = _need(doc, "candidate", "problem")
    x = _as_vector(_need(cand, "x", "candidate"), "candidate.x", n)
    u = _as_matrix(_need(cand, "u", "candidate"), "candidate.u", func.shape)
    if isinstance(func, PsdIndicator):
        u = _check_sym(u, "candidate.u")

    problem = CompositeProblem(quad=quad, lin=lin, const=const, offset=offset,
                               maps=maps, func=func)
    return problem, kkt_candidate(problem, x, u, tolerances)


def parse_problem(path, tolerances=ToleranceConfig()):
    """Load and validate a problem file; returns (problem, candidate)."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ProblemError(f"cannot read problem file: {exc}") from None
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProblemError(f"problem file is not valid JSON: {exc}") from None
    problem, kkt = parse_problem_dict(doc, tolerances)
    return problem, kkt, data


def _load_direction(path, func):
    try:
        with open(path, "rb") as fh:
            doc = json.loads(fh.read().decode("utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProblemError(f"cannot read direction file: {exc}") from None
    return _as_matrix(_need(doc, "Y", "direction"), "direction.Y", func.shape)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # input errors exit 1, not argparse's 2
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser():
    parser = _Parser(prog="ssoscert",
                     description="Second-order certification of composite KKT pairs")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, problem=True):
        if problem:
            p.add_argument("--problem", required=True, help="problem JSON file")
        p.add_argument("--report", default=None, help="report path (default stdout)")
        p.add_argument("--tol-pd", type=float, default=1e-8)
        p.add_argument("--tol-class", type=float, default=1e-9)
        p.add_argument("--tol-range", type=float, default=1e-8)
        p.add_argument("--seed", type=int, default=0)

    for name in ("kkt", "frame", "ssosc"):
        add_common(sub.add_parser(name))

    p = sub.add_parser("gamma")
    add_common(p)
    p.add_argument("--direction", required=True, help="direction JSON file with key Y")

    for name in ("sweep", "certify"):
        p = sub.add_parser(name)
        add_common(p)
        p.add_argument("--sigma-grid", default=",".join(str(s) for s in DEFAULT_SIGMA_GRID),
                       help="comma-separated ascending sigma values")
        p.add_argument("--budget", type=int, default=64)
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("selftest")
    add_common(p, problem=False)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--budget", type=int, default=64)
    return parser


def _tolerances(args):
    return ToleranceConfig(tol_class=args.tol_class, tol_pd=args.tol_pd,
                           tol_range=args.tol_range)


def _parse_grid(text):
    try:
        grid = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ProblemError(f"--sigma-grid: not a comma-separated float list: '{text}'")
    if not grid:
        raise ProblemError("--sigma-grid: empty grid")
    return grid


def run(args):
    """Execute one parsed command; returns (exit_code, report_dict)."""
    tol = _tolerances(args)
    if args.command == "selftest":
        summary = run_selftest(trials=args.trials, seed=args.seed,
                               budget=args.budget, tol=tol)
        report = base_report("selftest", b"", args.seed, tol)
        report["selftest"] = summary
        return (0 if summary["all_pass"] else 2), report

    problem, kkt, raw = parse_problem(args.problem, tol)
    report = base_report(args.command, raw, args.seed, tol)
    report["kkt"] = kkt_summary(kkt)

    if args.command == "kkt":
        return 0, report

    frame = make_frame(problem.func, problem.map_value(kkt.x), kkt.u, tol)
    report["frame"] = frame_summary(frame)
    if args.command == "frame":
        return 0, report

    if args.command == "gamma":
        direction = _load_direction(args.direction, problem.func)
        report["gamma"] = {"value": gamma_closed_form(frame, direction, tol)}
        return 0, report

    if args.command == "ssosc":
        result, _ = ssosc_margin(problem, kkt, tol)
        report["ssosc"] = ssosc_summary(result)
        return 0, report

    grid = _parse_grid(args.sigma_grid)
    if args.command == "sweep":
        entries = hessian_pd_sweep(problem, kkt, grid, args.budget, tol,
                                   workers=args.workers, seed=args.seed)
        report["sweep"] = sweep_summary(entries)
        return 0, report

    cert = certify(problem, kkt, grid, args.budget, tol,
                   workers=args.workers, seed=args.seed)
    report["ssosc"] = ssosc_summary(cert.ssosc)
    report["sweep"] = sweep_summary(cert.sweep)
    report["equivalence_verdict"] = cert.equivalence_verdict
    report["sampling_completeness"] = bool(cert.sampling_completeness)
    return 0, report


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        code, report = run(args)
    except (ProblemError, ValueError) as exc:
        print(f"ssoscert: input error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - surface as internal failure
        print(f"ssoscert: internal error: {exc}", file=sys.stderr)
        return 2
    text = emit_report(report, args.report)
    if args.report is None:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
