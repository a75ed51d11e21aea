"""Command-line experiment harness.

Pipeline for one run: read the matrix, build b from the all-ones solution,
scale symmetrically, compute the level-l fill pattern, factorize with the
shifted incomplete Cholesky, then solve the *scaled* system with the chosen
driver.  Statistics mirror the usual preconditioner-study table columns.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .factor import ShiftRestartError, shifted_ic
from .precision import get_format
from .refine import (DELTA_DEFAULT, DELTA_KRYLOV_DEFAULT, backward_error,
                     ic_krylov_ir, ic_lu_ir)
from .sparse import (MatrixFormatError, inf_norm_matrix, inf_norm_vector,
                     l2_scale, matvec_f64, read_matrix_market)
from .symbolic import ic_pattern

__all__ = ["RunConfig", "RunRecord", "build_rhs", "run_experiment", "run_suite", "main"]

SOLVERS = ("cg", "gmres", "lu-ir", "plain-krylov")


@dataclass
class RunConfig:
    matrix_path: str
    level: int = 0
    factor_format: str = "fp16"
    solver: str = "cg"
    delta: float = DELTA_DEFAULT
    delta_krylov: float = DELTA_KRYLOV_DEFAULT
    inner_maxit: int | None = None  # default depends on solver
    outer_itmax: int | None = None
    tau: float | None = None
    shift_init: float = 1e-3
    max_restarts: int = 40
    output: str = "csv"

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")
        if self.output not in ("csv", "json"):
            raise ValueError("output must be csv or json")
        if self.level < 0:
            raise ValueError("level must be nonnegative")
        get_format(self.factor_format)  # validate early

    @staticmethod
    def from_dict(d: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return RunConfig(**d)


RECORD_FIELDS = [
    "identifier", "n", "nnz_A", "normA", "normb", "nnz_L", "alpha", "nmod",
    "nofl", "resinit", "resfinal", "res_unscaled", "iouter", "totits",
    "maxbasis", "status", "wall_seconds",
]


@dataclass
class RunRecord:
    identifier: str
    n: int
    nnz_A: int
    normA: float
    normb: float
    nnz_L: int
    alpha: float
    nmod: int
    nofl: int
    resinit: float
    resfinal: float
    res_unscaled: float
    iouter: int
    totits: int
    maxbasis: int
    status: str
    wall_seconds: float

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def build_rhs(A):
    """Right-hand side for the reference solution of all ones."""
    x_true = np.ones(A.n)
    return matvec_f64(A, x_true), x_true


def run_experiment(config: RunConfig) -> RunRecord:
    t0 = time.perf_counter()
    A = read_matrix_market(config.matrix_path)
    identifier = Path(config.matrix_path).stem
    b, _ = build_rhs(A)
    normA = inf_norm_matrix(A)
    normb = inf_norm_vector(b)

    Ahat, S = l2_scale(A)
    bhat = b / S.s
    f = get_format(config.factor_format)
    pattern = ic_pattern(Ahat, config.level)
    L = shifted_ic(Ahat, pattern, tau=config.tau, alpha_s=config.shift_init,
                   f=f, max_restarts=config.max_restarts)

    solver = config.solver
    inner_maxit = config.inner_maxit
    outer_itmax = config.outer_itmax
    if solver == "lu-ir":
        report = ic_lu_ir(Ahat, bhat, L, delta=config.delta,
                          itmax=1000 if outer_itmax is None else outer_itmax)
    elif solver == "plain-krylov":
        # single outer step: the Krylov solver does all the work
        report = ic_krylov_ir(Ahat, bhat, L, method="gmres", delta=config.delta,
                              delta_krylov=config.delta,
                              inner_maxit=2000 if inner_maxit is None else inner_maxit,
                              itmax=1 if outer_itmax is None else outer_itmax)
    else:
        report = ic_krylov_ir(Ahat, bhat, L, method=solver, delta=config.delta,
                              delta_krylov=config.delta_krylov,
                              inner_maxit=1000 if inner_maxit is None else inner_maxit,
                              itmax=20 if outer_itmax is None else outer_itmax)

    x_unscaled = report.solution / S.s  # x = S^-1 xhat
    res_unscaled = backward_error(A, x_unscaled, b)
    if report.converged:
        status = "converged"
    elif report.diverged:
        status = "diverged"
    else:
        status = "not-converged"
    return RunRecord(
        identifier=identifier, n=A.n, nnz_A=A.nnz, normA=normA, normb=normb,
        nnz_L=L.nnz, alpha=L.alpha, nmod=L.stats.nmod, nofl=L.stats.nofl,
        resinit=report.resinit, resfinal=report.resfinal,
        res_unscaled=res_unscaled, iouter=report.iouter, totits=report.totits,
        maxbasis=report.maxbasis, status=status,
        wall_seconds=time.perf_counter() - t0,
    )


def run_suite(manifest_path: str):
    """Execute one JSON config per manifest line; per-run errors do not stop the suite.

    Returns (records, errors) where errors are structured dicts.
    """
    records = []
    errors = []
    with open(manifest_path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                config = RunConfig.from_dict(json.loads(line))
                records.append(run_experiment(config))
            except (ValueError, OSError, MatrixFormatError, ShiftRestartError,
                    json.JSONDecodeError) as exc:
                errors.append({"line": lineno, "error": type(exc).__name__,
                               "message": str(exc)})
    return records, errors


def _write_records(records, fmt: str, out):
    if fmt == "json":
        json.dump([r.as_dict() for r in records], out, indent=2)
        out.write("\n")
    else:
        writer = csv.DictWriter(out, fieldnames=RECORD_FIELDS)
        writer.writeheader()
        for r in records:
            writer.writerow(r.as_dict())


def _summary(records, errors, out):
    for r in records:
        out.write(f"{r.identifier}: n={r.n} level-fill nnz_L={r.nnz_L} alpha={r.alpha:g} "
                  f"iouter={r.iouter} totits={r.totits} resfinal={r.resfinal:.3e} "
                  f"[{r.status}]\n")
    for e in errors:
        out.write(f"line {e['line']}: {e['error']}: {e['message']}\n")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="icir",
        description="Low-precision incomplete Cholesky preconditioners in "
                    "Krylov-based iterative refinement.")
    ap.add_argument("--matrix", help="Matrix Market file (coordinate real symmetric)")
    ap.add_argument("--level", type=int, default=0, help="level of fill (default 0)")
    ap.add_argument("--format", default="fp16", choices=["fp16", "bf16", "fp32", "fp64"],
                    dest="factor_format", help="factorization format")
    ap.add_argument("--solver", default="cg", choices=list(SOLVERS))
    ap.add_argument("--delta", type=float, default=DELTA_DEFAULT,
                    help="outer backward-error tolerance")
    ap.add_argument("--delta-krylov", type=float, default=DELTA_KRYLOV_DEFAULT,
                    help="inner Krylov tolerance")
    ap.add_argument("--inner-maxit", type=int, default=None)
    ap.add_argument("--outer-itmax", type=int, default=None)
    ap.add_argument("--tau", type=float, default=None, help="pivot threshold override")
    ap.add_argument("--shift-init", type=float, default=1e-3, help="initial shift alpha_S")
    ap.add_argument("--max-restarts", type=int, default=40)
    ap.add_argument("--output", default="csv", choices=["csv", "json"])
    ap.add_argument("--out", default=None, help="write records here instead of stdout")
    ap.add_argument("--suite", default=None, help="manifest file, one JSON config per line")
    args = ap.parse_args(argv)

    if (args.matrix is None) == (args.suite is None):
        ap.error("exactly one of --matrix or --suite is required")

    try:
        if args.suite:
            records, errors = run_suite(args.suite)
        else:
            config = RunConfig(
                matrix_path=args.matrix, level=args.level,
                factor_format=args.factor_format, solver=args.solver,
                delta=args.delta, delta_krylov=args.delta_krylov,
                inner_maxit=args.inner_maxit, outer_itmax=args.outer_itmax,
                tau=args.tau, shift_init=args.shift_init,
                max_restarts=args.max_restarts, output=args.output)
            records, errors = [run_experiment(config)], []
    except (ValueError, OSError, MatrixFormatError, ShiftRestartError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    buf = io.StringIO()
    _write_records(records, args.output, buf)
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    _summary(records, errors, sys.stderr)
    return 0 if not errors else 1


if __name__ == "__main__":
    sys.exit(main())
