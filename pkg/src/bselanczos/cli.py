"""Command-line front end: generate, solve, compare, and check instances.

Reports are plain structured text (key-value header plus a per-pair table)
under a versioned schema so they stay diffable in CI; two runs with the same
flags and seed differ only in the wall-time line.

Exit codes: 0 success, 2 usage error, 3 not converged within the restart
cap, 4 indefinite problem, 5 breakdown before enough pairs converged,
6 file I/O error.
"""

import argparse
import sys
import time

import numpy as np
import scipy.io

from . import gruning, projected, shao
from .dense_oracle import (DENSE_GUARD, assemble_h, definiteness_check,
                           dense_eig)
from .errors import IndefiniteProblemError, MatrixIOError
from .instances import (PentadiagSpec, gen_pentadiag, gen_random_definite,
                        read_blocks, write_blocks)
from .solver_common import DEFAULT_SEED, EigResult, SolverConfig

REPORT_SCHEMA = "bselanczos-report 1"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NOT_CONVERGED = 3
EXIT_INDEFINITE = 4
EXIT_BREAKDOWN = 5
EXIT_IO = 6

_SOLVERS = {"shao": shao, "gruning": gruning, "projectedbse": projected}


def _add_instance_flags(p):
    p.add_argument("--pentadiag", type=int, metavar="N",
                   help="pentadiagonal family instance of block size N")
    p.add_argument("--random", type=int, metavar="N",
                   help="seeded random definite instance of block size N")
    p.add_argument("--matrix-r", metavar="PATH", help="file with the Hermitian block")
    p.add_argument("--matrix-c", metavar="PATH", help="file with the symmetric block")
    p.add_argument("--margin", type=float, default=0.5,
                   help="coupling strength for --random (>= 1 forces indefinite)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                   help="seed for --random instances and the initial vector")


def _add_solver_flags(p):
    p.add_argument("--nev", type=int, default=10, help="number of eigenpairs (even)")
    p.add_argument("--ncv", type=int, default=None, help="basis size k (column pairs)")
    p.add_argument("--restart-size", type=int, default=None,
                   help="fixed restart size r (default: adaptive)")
    p.add_argument("--tol", type=float, default=1e-8, help="convergence tolerance")
    p.add_argument("--which", choices=("smallest", "largest"), default="smallest")
    p.add_argument("--criterion", choices=("rel", "abs"), default="rel")
    p.add_argument("--max-restarts", type=int, default=10000)
    p.add_argument("--precision", choices=("double", "single"), default="double")


def _load_instance(args, parser):
    sources = [args.pentadiag is not None, args.random is not None,
               args.matrix_r is not None or args.matrix_c is not None]
    if sum(sources) != 1:
        parser.error("exactly one of --pentadiag, --random, or "
                     "--matrix-r/--matrix-c is required")
    if args.pentadiag is not None:
        return gen_pentadiag(PentadiagSpec(args.pentadiag)), f"pentadiag {args.pentadiag}"
    if args.random is not None:
        return (gen_random_definite(args.random, seed=args.seed, margin=args.margin),
                f"random {args.random} seed {args.seed} margin {args.margin:g}")
    if args.matrix_r is None or args.matrix_c is None:
        parser.error("--matrix-r and --matrix-c must be given together")
    return read_blocks(args.matrix_r, args.matrix_c), f"files {args.matrix_r} {args.matrix_c}"


def _config_from_args(args):
    return SolverConfig(
        nev=args.nev, ncv=args.ncv, restart=args.restart_size, tol=args.tol,
        criterion="relative" if args.criterion == "rel" else "absolute",
        which=args.which, max_restarts=args.max_restarts, seed=args.seed,
        precision=args.precision)


def _true_residuals(op, res):
    """Relative true residuals of the normalized right and left eigenvectors."""
    lam = res.values_full()
    X = res.right_vectors()
    Y = res.left_vectors()
    rr = np.linalg.norm(op.apply_stacked(X) - X * lam, axis=0)
    rl = np.linalg.norm(op.apply_stacked_adjoint(Y) - Y * lam, axis=0)
    denom = np.maximum(np.abs(lam), np.finfo(np.float64).tiny)
    return rr / denom, rl / denom


def _dense_pseudo_solve(op, cfg):
    """Oracle 'solver': dense eigendecomposition trimmed to the wanted pairs."""
    if op.n > DENSE_GUARD:
        raise ValueError(
            f"--solver dense needs n <= {DENSE_GUARD}, got n = {op.n}")
    dec = dense_eig(assemble_h(op))
    if dec.verdict == "indefinite":
        raise IndefiniteProblemError("dense oracle found the companion indefinite")
    vals, vecs = dec.positive_sorted()
    nev2 = cfg.nev // 2
    if cfg.which == "largest":
        idx = np.arange(vals.size)[::-1][:nev2]
    else:
        idx = np.arange(min(nev2, vals.size))
    vals = vals[idx]
    vecs = vecs[:, idx]
    n = op.n
    X1 = vecs[:n]
    X2 = vecs[n:]
    scale = np.sqrt(np.sum(np.abs(X1) ** 2, axis=0) + np.sum(np.abs(X2) ** 2, axis=0))
    X1, X2 = X1 / scale, X2 / scale
    zeros = np.zeros(vals.size)
    return EigResult(vals, X1, X2, zeros, scale, vals.size, 0, True,
                     False, [], 0.0, zeros)


def _run_one(solver_name, op, cfg):
    t0 = time.perf_counter()
    if solver_name == "dense":
        res = _dense_pseudo_solve(op, cfg)
    else:
        res = _SOLVERS[solver_name].solve(op, cfg)
    wall = time.perf_counter() - t0
    return res, wall


def _pair_table(res, rr, rl):
    """Rows sorted by |lambda| ascending within each sign (positives first)."""
    lam = res.values_full()
    nev2 = res.values.size
    lines = [" idx  lambda  b_abs  resid_right_rel  resid_left_rel"]
    order = list(np.argsort(np.abs(res.values), kind="stable"))
    rows = [(i, False) for i in order] + [(i, True) for i in order]
    for row, (i, is_neg) in enumerate(rows, start=1):
        col = i + (nev2 if is_neg else 0)
        lines.append(
            f" {row} {lam[col]:+.14e} {res.b_abs[i]:.6e} "
            f"{rr[col]:.6e} {rl[col]:.6e}")
    return lines


def _write_report(path, lines):
    text = "\n".join(lines) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _report_header(args, solver, instance_desc, res, wall, rr, rl):
    return [
        REPORT_SCHEMA,
        f"command: {args.command}",
        f"solver: {solver}",
        f"instance: {instance_desc}",
        f"nev: {args.nev}",
        f"ncv: {args.ncv if args.ncv is not None else 'auto'}",
        f"restart_size: {args.restart_size if args.restart_size is not None else 'auto'}",
        f"tol: {args.tol:g}",
        f"criterion: {args.criterion}",
        f"which: {args.which}",
        f"seed: {args.seed}",
        f"precision: {args.precision}",
        f"converged: {'yes' if res.converged else 'no'}",
        f"breakdown: {'yes' if res.breakdown else 'no'}",
        f"restarts: {res.restarts}",
        f"nconv: {res.nconv}",
        f"wall_time_s: {wall:.3f}",
        f"first_eigenvalue: {res.values[0]:.10f}",
        f"max_rel_residual_right: {rr.max():.6e}",
        f"max_rel_residual_left: {rl.max():.6e}",
        f"biorthogonality: {res.biorthogonality():.6e}",
    ]


def _exit_code_for(res):
    if res.converged:
        return EXIT_OK
    if res.breakdown:
        return EXIT_BREAKDOWN
    return EXIT_NOT_CONVERGED


def cmd_solve(args, parser):
    op, instance_desc = _load_instance(args, parser)
    if args.nev % 2 != 0 or args.nev < 2:
        parser.error("--nev must be a positive even integer")
    cfg = _config_from_args(args)
    res, wall = _run_one(args.solver, op, cfg)
    rr, rl = _true_residuals(op, res)
    lines = _report_header(args, args.solver, instance_desc, res, wall, rr, rl)
    lines.append("pairs:")
    lines.extend(_pair_table(res, rr, rl))
    lines.append("end")
    _write_report(args.report, lines)
    if args.vectors:
        scipy.io.mmwrite(args.vectors, res.right_vectors(), field="complex",
                         precision=17,
                         comment="right eigenvectors, columns paired with report rows")
    return _exit_code_for(res)


def cmd_compare(args, parser):
    op, instance_desc = _load_instance(args, parser)
    solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    for s in solvers:
        if s not in _SOLVERS and s != "dense":
            parser.error(f"--solvers: unknown solver {s!r}")
    runs = []
    for s in solvers:
        cfg = _config_from_args(args)
        res, wall = _run_one(s, op, cfg)
        rr, rl = _true_residuals(op, res)
        runs.append((s, res, wall, rr, rl))
    lines = [
        REPORT_SCHEMA,
        f"command: {args.command}",
        f"instance: {instance_desc}",
        f"nev: {args.nev}",
        f"tol: {args.tol:g}",
        "table:",
        " solver  restarts  wall_time_s  max_rel_residual  biorthogonality",
    ]
    for s, res, wall, rr, rl in runs:
        lines.append(f" {s} {res.restarts} {wall:.3f} "
                     f"{max(rr.max(), rl.max()):.6e} {res.biorthogonality():.6e}")
    lines.append("pairwise_max_eigenvalue_deviation:")
    for i in range(len(runs)):
        for j in range(i + 1, len(runs)):
            si, ri = runs[i][0], runs[i][1]
            sj, rj = runs[j][0], runs[j][1]
            m = min(ri.values.size, rj.values.size)
            dev = float(np.max(np.abs(ri.values[:m] - rj.values[:m]))) if m else np.inf
            lines.append(f" {si} {sj} {dev:.6e}")
    lines.append("end")
    _write_report(args.report, lines)
    bad = [res for _, res, _, _, _ in runs if not res.converged]
    if bad:
        return EXIT_BREAKDOWN if bad[0].breakdown else EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_check(args, parser):
    op, instance_desc = _load_instance(args, parser)
    if op.n > DENSE_GUARD:
        parser.error(f"check needs n <= {DENSE_GUARD}")
    verdict = definiteness_check(op)
    lines = [
        REPORT_SCHEMA,
        f"command: {args.command}",
        f"instance: {instance_desc}",
        f"definiteness: {verdict}",
    ]
    if verdict == "definite":
        dec = dense_eig(assemble_h(op))
        vals = np.sort(dec.values.real)
        pairdev = float(np.max(np.abs(vals + vals[::-1])))
        lines.append(f"max_imag_part: {np.max(np.abs(dec.values.imag)):.6e}")
        lines.append(f"pairing_deviation: {pairdev:.6e}")
        lines.append(f"first_positive: {vals[vals > 0][0]:.10f}")
    lines.append("end")
    _write_report(args.report, lines)
    return EXIT_OK


def cmd_gen(args, parser):
    op, _ = _load_instance(args, parser)
    write_blocks(op, args.out_r, args.out_c)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bselanczos",
        description="Structure-preserving thick-restart eigensolvers for "
                    "definite Bethe-Salpeter problems")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance with one solver")
    p.add_argument("--solver", choices=("shao", "gruning", "projectedbse", "dense"),
                   default="shao")
    _add_instance_flags(p)
    _add_solver_flags(p)
    p.add_argument("--report", metavar="PATH", default=None,
                   help="report file (default: stdout)")
    p.add_argument("--vectors", metavar="PATH", default=None,
                   help="write right eigenvectors in array exchange format")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", help="run several solvers side by side")
    p.add_argument("--solvers", default="shao,gruning,projectedbse",
                   help="comma list from shao,gruning,projectedbse,dense")
    _add_instance_flags(p)
    _add_solver_flags(p)
    p.add_argument("--report", metavar="PATH", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("check", help="dense-oracle definiteness and spectrum check")
    _add_instance_flags(p)
    p.add_argument("--report", metavar="PATH", default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("gen", help="generate an instance and write its blocks")
    _add_instance_flags(p)
    p.add_argument("--out-r", metavar="PATH", required=True)
    p.add_argument("--out-c", metavar="PATH", required=True)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except MatrixIOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except IndefiniteProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INDEFINITE
    except ValueError as exc:
        parser.error(str(exc))


if __name__ == "__main__":
    sys.exit(main())
