"""Triangular solves with the incomplete factor.

Two execution modes:

  cast_f64   -- the stored (format-representable) entries are promoted to
                fp64 on the fly and the substitution runs entirely in double
                precision using one temporary vector; cannot overflow.
  native_low -- every divide/multiply/subtract is rounded into the factor's
                format; any rounding that overflows raises OverflowSignal.
                The right-hand side is expected to be format-representable
                (apply_preconditioner scales it by its inf-norm first).

In native_low the overflow check is applied to each rounded result, which
detects exactly the operations the predictive safe tests guard against.
"""

from __future__ import annotations

import numpy as np

from .factor import IcFactor
from .precision import _round_scalar, quantize
from .sparse import inf_norm_vector

__all__ = ["OverflowSignal", "forward_solve", "backward_solve", "apply_preconditioner"]

CAST_F64 = "cast_f64"
NATIVE_LOW = "native_low"


class OverflowSignal(ArithmeticError):
    """A native_low substitution step overflowed the factor's format."""


def _check_modes(exec_mode: str):
    if exec_mode not in (CAST_F64, NATIVE_LOW):
        raise ValueError(f"unknown exec mode {exec_mode!r}")


def forward_solve(L: IcFactor, w: np.ndarray, exec_mode: str = CAST_F64) -> np.ndarray:
    """Solve L y = w by column-oriented substitution."""
    _check_modes(exec_mode)
    n = L.n
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (n,):
        raise ValueError("dimension mismatch")
    cp = L.pattern.col_ptr
    rows_all = L.pattern.row_idx
    vals = L.values
    y = w.copy()
    if exec_mode == CAST_F64:
        for j in range(n):
            s, e = cp[j], cp[j + 1]
            yj = y[j]
            if yj == 0.0:
                continue
            yj /= vals[s]
            y[j] = yj
            if e > s + 1:
                y[rows_all[s + 1:e]] -= vals[s + 1:e] * yj
        return y

    f = L.format
    for j in range(n):
        s, e = cp[j], cp[j + 1]
        yj = y[j]
        if yj == 0.0:
            continue
        d = vals[s]
        if d == 0.0:
            raise ZeroDivisionError(f"zero diagonal at column {j}")
        yj, over = _round_scalar(yj / d, f)
        if over:
            raise OverflowSignal(f"division overflow at column {j}")
        y[j] = yj
        if e > s + 1:
            prod, over_p = quantize(vals[s + 1:e] * yj, f)
            if np.any(over_p):
                raise OverflowSignal(f"product overflow at column {j}")
            idx = rows_all[s + 1:e]
            upd, over_u = quantize(y[idx] - prod, f)
            if np.any(over_u):
                raise OverflowSignal(f"subtraction overflow at column {j}")
            y[idx] = upd
    return y


def backward_solve(L: IcFactor, w: np.ndarray, exec_mode: str = CAST_F64) -> np.ndarray:
    """Solve L^T y = w; column j of L supplies the dot product for unknown j."""
    _check_modes(exec_mode)
    n = L.n
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (n,):
        raise ValueError("dimension mismatch")
    cp = L.pattern.col_ptr
    rows_all = L.pattern.row_idx
    vals = L.values
    y = w.copy()
    if exec_mode == CAST_F64:
        for j in range(n - 1, -1, -1):
            s, e = cp[j], cp[j + 1]
            acc = y[j]
            if e > s + 1:
                acc -= np.dot(vals[s + 1:e], y[rows_all[s + 1:e]])
            y[j] = acc / vals[s]
        return y

    f = L.format
    for j in range(n - 1, -1, -1):
        s, e = cp[j], cp[j + 1]
        d = vals[s]
        if d == 0.0:
            raise ZeroDivisionError(f"zero diagonal at column {j}")
        acc = y[j]
        if e > s + 1:
            prod, over_p = quantize(vals[s + 1:e] * y[rows_all[s + 1:e]], f)
            if np.any(over_p):
                raise OverflowSignal(f"product overflow at column {j}")
            # sequential accumulation in storage (ascending row) order
            for p in prod.tolist():
                if p == 0.0:
                    continue
                acc, over = _round_scalar(acc - p, f)
                if over:
                    raise OverflowSignal(f"subtraction overflow at column {j}")
        acc, over = _round_scalar(acc / d, f)
        if over:
            raise OverflowSignal(f"division overflow at column {j}")
        y[j] = acc
    return y


def apply_preconditioner(L: IcFactor, r: np.ndarray, exec_mode: str = CAST_F64) -> np.ndarray:
    """Apply (L L^T)^-1 to r.

    native_low scales the right-hand side by its inf-norm so that the solve
    input is representable, then rescales the result in fp64.
    """
    _check_modes(exec_mode)
    r = np.asarray(r, dtype=np.float64)
    if exec_mode == CAST_F64:
        return backward_solve(L, forward_solve(L, r, CAST_F64), CAST_F64)
    nr = inf_norm_vector(r)
    if nr == 0.0:
        return np.zeros(L.n)
    rs, over = quantize(r / nr, L.format)
    if np.any(over):  # entries are <= 1 in magnitude; defensive
        raise OverflowSignal("right-hand side scaling overflowed")
    y = forward_solve(L, rs, NATIVE_LOW)
    v = backward_solve(L, y, NATIVE_LOW)
    return v * nr
