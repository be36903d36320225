"""Command-line runner.

Exit codes: 0 success, 1 IO/parse error, 2 mathematical precondition failure
(including a failed check), 3 shift domination violated.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io as fio
from .dilation import (
    build_dilation,
    build_shift,
    isometry_defect,
    moment_kernel,
    shift_domination,
    verify_dilation,
    von_neumann_check,
)
from .errors import KernelError, ShiftDominationViolated
from .gaussian import (
    SeededRng,
    covariance_convergence,
    covariance_estimate,
    empirical_kernel,
    energy_estimate,
    sample_paths,
    truncated_realization,
)
from .kernels import check_pd, check_rpd, is_pathwise_pd
from .kolmogorov import factorize, reconstruction_error, trace_diagonal

EXIT_OK, EXIT_IO, EXIT_MATH, EXIT_DOMINATION = 0, 1, 2, 3


def _positive(kind):
    def conv(text):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return conv


def _emit(report: dict):
    sys.stdout.write(fio.dumps(report))


def _write(args, name: str, obj=None, text: str | None = None):
    if args.out is None:
        return
    path = Path(args.out) / name
    if text is None:
        fio.write_json(path, obj)
    else:
        fio.write_atomic(path, text)


def cmd_check_pd(args) -> int:
    k = fio.kernel_from_json(fio.read_json(args.input))
    r = check_pd(k, args.tol)
    report = {"is_pd": r.is_pd, "min_eigenvalue": r.min_eigenvalue, "max_eigenvalue": r.max_eigenvalue, "tol": args.tol}
    _emit(report)
    _write(args, "check_pd.json", report)
    return EXIT_OK if r.is_pd else EXIT_MATH


def cmd_check_rpd(args) -> int:
    rk = fio.random_kernel_from_json(fio.read_json(args.input))
    r = check_rpd(rk, args.tol)
    path = is_pathwise_pd(rk, args.tol)
    report = {
        "is_rpd": r.is_pd,
        "min_eigenvalue": r.min_eigenvalue,
        "all_pathwise_pd": path.all_pathwise_pd,
        "atoms": [{"index": i, "is_pd": a.is_pd, "min_eigenvalue": a.min_eigenvalue} for i, a in path.atoms],
        "tol": args.tol,
    }
    _emit(report)
    _write(args, "check_rpd.json", report)
    return EXIT_OK if r.is_pd else EXIT_MATH


def cmd_factorize(args) -> int:
    k = fio.kernel_from_json(fio.read_json(args.input))
    f = factorize(k, args.rank_tol)
    report = {
        "rank": f.rank,
        "dim": f.dim,
        "reconstruction_error": reconstruction_error(f, k),
        "trace_diagonal": {str(s): v for s, v in trace_diagonal(k).items()},
    }
    _emit(report)
    _write(args, "factor.json", fio.factor_to_json(f))
    return EXIT_OK


def cmd_gauss(args) -> int:
    k = fio.kernel_from_json(fio.read_json(args.input))
    f = factorize(k, args.rank_tol)
    rng = SeededRng(args.seed)
    if args.coords is not None:
        g = truncated_realization(f, args.coords, args.samples, rng)
    else:
        g = sample_paths(f, args.samples, rng)
    cov = covariance_estimate(g)
    energy = energy_estimate(g)
    traces = np.array(list(trace_diagonal(k).values()))
    report = {
        "M": g.sample_count,
        "rank": f.rank,
        "max_abs_error": float(np.abs(cov.mean - k.blocks).max()),
        "covariance_within_5se": bool(cov.within(k.blocks).all()),
        "mean_energy": energy.mean.real.tolist(),
        "trace": traces.tolist(),
        "energy_within_5se": bool(energy.within(traces).all()),
    }
    _emit(report)
    _write(args, "realization.json", fio.realization_to_json(g))
    _write(args, "convergence.csv", text=fio.convergence_csv(covariance_convergence(g, k)))
    _write(args, "gauss_report.json", report)
    return EXIT_OK


def cmd_empirical(args) -> int:
    rk = fio.random_kernel_from_json(fio.read_json(args.input))
    res = empirical_kernel(rk, args.samples, SeededRng(args.seed))
    pd = check_rpd(res.kernel, args.tol)
    report = {
        "m": args.samples,
        "max_abs_error": res.error,
        "is_pd": pd.is_pd,
        "min_eigenvalue": pd.min_eigenvalue,
        "atom_counts": res.atom_counts.tolist() if res.atom_counts is not None else None,
    }
    _emit(report)
    _write(args, "empirical.json", fio.random_kernel_to_json(res.kernel))
    _write(args, "convergence.csv", text=fio.convergence_csv(res.record))
    _write(args, "empirical_report.json", report)
    return EXIT_OK


def cmd_moments(args) -> int:
    A = fio.operator_from_json(fio.read_json(args.input))
    K = moment_kernel(A, args.max_power)
    dom = shift_domination(K, args.tol)
    pd = check_pd(K, args.tol)
    report = {"max_power": K.max_power, "is_pd": pd.is_pd, "domination_holds": dom.holds,
              "domination_min_eigenvalue": dom.min_eigenvalue}
    _emit(report)
    _write(args, "moments.json", fio.moment_kernel_to_json(K))
    return EXIT_OK


def cmd_dilate(args) -> int:
    A = fio.operator_from_json(fio.read_json(args.input))
    K = moment_kernel(A, args.max_power)
    _write(args, "moments.json", fio.moment_kernel_to_json(K))
    dom = shift_domination(K, args.rank_tol)
    dom_report = fio.report_to_json(dom)
    _write(args, "domination.json", dom_report)
    if not dom.holds:
        _emit({"domination": dom_report})
        print(f"shift domination violated: min eigenvalue {dom.min_eigenvalue:.6g}", file=sys.stderr)
        return EXIT_DOMINATION
    T = build_dilation(K, args.rank_tol)
    ver = verify_dilation(K, T)
    shift = build_shift(K, args.rank_tol)
    ver_report = fio.report_to_json(ver)
    ver_report["ok"] = ver.ok
    ver_report["shift_norm"] = float(np.linalg.norm(T.B, 2))
    ver_report["shift_isometry_defect"] = isometry_defect(shift, args.rank_tol)
    _write(args, "dilation.json", fio.triple_to_json(T))
    _write(args, "verification.json", ver_report)
    _emit({"domination": dom_report, "verification": ver_report})
    return EXIT_OK if ver.ok else EXIT_MATH


def cmd_vn(args) -> int:
    A = fio.operator_from_json(fio.read_json(args.input))
    r = von_neumann_check(A, args.coeffs, args.grid_size, args.tol)
    report = fio.report_to_json(r)
    _emit(report)
    _write(args, "vn.json", report)
    return EXIT_OK if r.holds else EXIT_MATH


def _coeffs(text: str) -> list:
    try:
        return [complex(c.strip().replace(" ", "")) for c in text.split(",") if c.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _coords(text: str) -> list:
    return [int(c) for c in text.split(",") if c.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", help="input JSON file")
    common.add_argument("--tol", type=_positive(float), default=1e-10)
    common.add_argument("--rank-tol", type=_positive(float), default=1e-10)
    common.add_argument("--samples", type=_positive(int), default=10_000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--max-power", type=_positive(int), default=4)
    common.add_argument("--grid-size", type=int, default=4096)
    common.add_argument("--out", default=None, help="output directory")

    parser = argparse.ArgumentParser(prog="rpdkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check-pd", parents=[common], help="positivity of a kernel").set_defaults(func=cmd_check_pd)
    sub.add_parser("check-rpd", parents=[common], help="positivity in mean of a random kernel").set_defaults(
        func=cmd_check_rpd)
    sub.add_parser("factorize", parents=[common], help="Kolmogorov factor of a kernel").set_defaults(
        func=cmd_factorize)
    g = sub.add_parser("gauss", parents=[common], help="Gaussian process with a kernel as covariance")
    g.add_argument("--coords", type=_coords, default=None, help="comma-separated retained coordinates")
    g.set_defaults(func=cmd_gauss)
    sub.add_parser("empirical", parents=[common], help="empirical average of a random kernel").set_defaults(
        func=cmd_empirical)
    sub.add_parser("moments", parents=[common], help="moment kernel of a random operator").set_defaults(
        func=cmd_moments)
    sub.add_parser("dilate", parents=[common], help="moments, shift domination, dilation, verification").set_defaults(
        func=cmd_dilate)
    v = sub.add_parser("vn", parents=[common], help="mean-square von Neumann inequality")
    v.add_argument("--coeffs", type=_coeffs, required=True, help="ascending coefficients c0,c1,...")
    v.set_defaults(func=cmd_vn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_IO if exc.code else EXIT_OK
    if args.grid_size < 64:
        print("--grid-size must be >= 64", file=sys.stderr)
        return EXIT_IO
    try:
        return args.func(args)
    except ShiftDominationViolated as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMINATION
    except fio.FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except KernelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MATH


if __name__ == "__main__":
    sys.exit(main())
