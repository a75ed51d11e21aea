"""Simulation of reduced-precision IEEE-style binary floating point on fp64 carriers.

Every simulated value is stored in a native double whose value is exactly
representable in the target format.  An arithmetic operation is evaluated
exactly (or correctly rounded) in fp64 and the result is then rounded once
into the target format with round-to-nearest, ties-to-even.

Why a single final rounding is exact simulation: for +, -, *, / and sqrt the
fp64 evaluation of format-f operands is itself correctly rounded to 53 bits.
If the target significand has p bits with 2p + 2 <= 53, rounding that 53-bit
result to p bits gives the same answer as rounding the exact result directly
(the classical double-rounding bound; see Figueroa, "When is double rounding
innocuous?").  This holds for fp16 (p=11), bfloat16 (p=8) and fp32 (p=24).
For +, -, * the fp64 result of fp16/bf16/fp32 operands is actually exact,
which is stronger still.

Overflow is reported through flags, never by producing an infinity: carriers
must stay finite.  No fused multiply-add anywhere; every multiply and subtract
rounds separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FpFormat",
    "RoundOutcome",
    "get_format",
    "round_to",
    "quantize",
    "sim_op",
    "safe_scale_check",
    "safe_update",
    "safe_update_many",
]


@dataclass(frozen=True)
class FpFormat:
    """A binary floating-point format described by its bit widths.

    significand_bits counts the implicit leading bit, so fp64 has 53.
    Derived constants follow the IEEE bias convention:
    e_max = 2^(exponent_bits-1) - 1, e_min = 1 - e_max.
    """

    name: str
    significand_bits: int
    exponent_bits: int
    supports_subnormals: bool = True

    def __post_init__(self):
        if self.significand_bits < 2 or self.exponent_bits < 2:
            raise ValueError("format needs at least 2 significand and 2 exponent bits")
        if self.significand_bits > 53 or self.exponent_bits > 11:
            raise ValueError("format must be no wider than fp64")

    @property
    def e_max(self) -> int:
        return 2 ** (self.exponent_bits - 1) - 1

    @property
    def e_min(self) -> int:
        return 1 - self.e_max

    @property
    def u(self) -> float:
        # unit roundoff = 2^-p for round-to-nearest
        return math.ldexp(1.0, -self.significand_bits)

    @property
    def x_min(self) -> float:
        return math.ldexp(1.0, self.e_min)

    @property
    def x_s_min(self) -> float | None:
        if not self.supports_subnormals:
            return None
        return math.ldexp(1.0, self.e_min - (self.significand_bits - 1))

    @property
    def x_max(self) -> float:
        return (2.0 - math.ldexp(1.0, 1 - self.significand_bits)) * math.ldexp(1.0, self.e_max)

    @property
    def is_double(self) -> bool:
        # wide enough that quantization of a double is the identity
        return self.significand_bits == 53 and self.exponent_bits == 11


_FORMATS = {
    "fp16": FpFormat("fp16", 11, 5, supports_subnormals=True),
    "bf16": FpFormat("bf16", 8, 8, supports_subnormals=False),
    "fp32": FpFormat("fp32", 24, 8, supports_subnormals=True),
    "fp64": FpFormat("fp64", 53, 11, supports_subnormals=True),
}
_FORMATS["bfloat16"] = _FORMATS["bf16"]
_FORMATS["half"] = _FORMATS["fp16"]
_FORMATS["single"] = _FORMATS["fp32"]
_FORMATS["double"] = _FORMATS["fp64"]


def get_format(name: str) -> FpFormat:
    try:
        return _FORMATS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown format {name!r}; expected one of fp16, bf16, fp32, fp64")


OVERFLOW = "overflow"
UNDERFLOW_TO_ZERO = "underflow_to_zero"
BECAME_SUBNORMAL = "became_subnormal"


@dataclass(frozen=True)
class RoundOutcome:
    """Result of rounding one value: the rounded carrier (None on overflow) and flags."""

    value: float | None
    flags: frozenset

    @property
    def overflow(self) -> bool:
        return OVERFLOW in self.flags


def _round_scalar(x: float, f: FpFormat):
    """Round one finite double into format f.

    Returns (value, overflow) where value is a double exactly representable
    in f.  Mirrors quantize() operation-for-operation so scalar and vector
    paths are bit-identical.
    """
    if x == 0.0:
        return x, False  # preserves signed zero
    ax = abs(x)
    p = f.significand_bits
    if ax >= f.x_min:
        m, e = math.frexp(ax)  # ax = m * 2^e, m in [0.5, 1)
        q = round(math.ldexp(m, p))  # banker's rounding on an exact scale
        y = math.ldexp(float(q), e - p)
    elif f.supports_subnormals:
        q = round(ax / f.x_s_min)  # division by a power of two is exact
        y = q * f.x_s_min
    else:
        # no subnormals: nearest of {0, x_min}; the tie x_min/2 goes to 0 (even)
        y = f.x_min if ax > 0.5 * f.x_min else 0.0
    if y > f.x_max:
        return math.copysign(y, x), True
    return math.copysign(y, x), False


def round_to(x: float, f: FpFormat) -> RoundOutcome:
    """Round a finite double into f with round-to-nearest, ties-to-even."""
    if not math.isfinite(x):
        raise ValueError("round_to requires a finite input")
    if f.is_double:
        return RoundOutcome(x, frozenset())
    y, over = _round_scalar(float(x), f)
    if over:
        return RoundOutcome(None, frozenset({OVERFLOW}))
    flags = set()
    if y == 0.0 and x != 0.0:
        flags.add(UNDERFLOW_TO_ZERO)
    elif abs(y) < f.x_min:
        flags.add(BECAME_SUBNORMAL)
    return RoundOutcome(y, frozenset(flags))


def quantize(x: np.ndarray, f: FpFormat):
    """Vectorized rounding of an array of finite doubles into f.

    Returns (y, overflow_mask).  Overflowed slots keep their (finite, too
    large) rounded magnitude; callers must honor the mask before using them.
    """
    x = np.asarray(x, dtype=np.float64)
    if f.is_double:
        return x.copy(), np.zeros(x.shape, dtype=bool)
    p = f.significand_bits
    ax = np.abs(x)
    m, e = np.frexp(ax)
    q = np.rint(np.ldexp(m, p))  # ties to even
    y = np.ldexp(q, e - p)
    small = ax < f.x_min
    if np.any(small):
        if f.supports_subnormals:
            ysub = np.rint(ax / f.x_s_min) * f.x_s_min
        else:
            ysub = np.where(ax > 0.5 * f.x_min, f.x_min, 0.0)
        y = np.where(small, ysub, y)
    over = y > f.x_max
    return np.copysign(y, x), over


def sim_op(op: str, a: float, b: float | None = None, f: FpFormat = None) -> RoundOutcome:
    """One simulated arithmetic operation: exact/correctly-rounded fp64, then one rounding.

    op in {add, sub, mul, div, sqrt}; operands must already be representable
    in f (this is the caller's contract and is not re-verified here).
    """
    if op == "add":
        z = a + b
    elif op == "sub":
        z = a - b
    elif op == "mul":
        z = a * b
    elif op == "div":
        z = a / b
    elif op == "sqrt":
        if a < 0:
            raise ValueError("sqrt of negative operand")
        z = math.sqrt(a)
    else:
        raise ValueError(f"unknown op {op!r}")
    return round_to(z, f)


def safe_scale_check(d: float, a: float, f: FpFormat) -> bool:
    """True iff dividing any column entry of magnitude <= a by the pivot d cannot overflow.

    Safe when d >= 1 (quotients only shrink) or d >= a / x_max.  The
    comparison is done as d * x_max >= a: both operands are representable in
    f, so for formats with p <= 24 the product is exact in fp64 and the test
    is the exact predicate (no quotient rounding to worry about).
    """
    if d >= 1.0:
        return True
    return d * f.x_max >= a


def safe_update(a: float, b: float, c: float, f: FpFormat):
    """Guarded update v = a - b*c in format f.

    Returns the rounded v, or None when performing the update could overflow
    (breakdown B3).  The guard tests run on the exact fp64 product b*c --
    exact for formats with p <= 24 significand bits -- because evaluating the
    tests in f itself can round a product across the x_max boundary and admit
    an update whose exact value overflows.  See the B3 discussion in factor.py.
    """
    xmax = f.x_max
    ab, ac = abs(b), abs(c)
    if not (ab <= 1.0 or ac <= 1.0 or ab * ac <= xmax):
        return None
    w = b * c  # exact in fp64
    if a >= 0.0:
        if not (w >= 0.0 or xmax - a >= -w):
            return None
    else:
        if not (w < 0.0 or xmax + a >= w):
            return None
    wr, over = _round_scalar(w, f)
    if over:  # cannot happen given the product guard; defensive
        return None
    v, over = _round_scalar(a - wr, f)
    if over:
        return None
    return v


def safe_update_many(a: np.ndarray, b: np.ndarray, c, f: FpFormat):
    """Vectorized safe_update over aligned arrays (c may be scalar).

    Returns (v, unsafe_mask); entries of v under the mask are invalid.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    xmax = f.x_max
    ab = np.abs(b)
    ac = np.abs(c)
    unsafe = ~((ab <= 1.0) | (ac <= 1.0) | (ab * ac <= xmax))
    w = b * c
    neg_a = a < 0.0
    bad_pos = ~neg_a & ~((w >= 0.0) | (xmax - a >= -w))
    bad_neg = neg_a & ~((w < 0.0) | (xmax + a >= w))
    unsafe |= bad_pos | bad_neg
    wr, over_w = quantize(w, f)
    v, over_v = quantize(a - wr, f)
    unsafe |= over_w | over_v
    return v, unsafe
