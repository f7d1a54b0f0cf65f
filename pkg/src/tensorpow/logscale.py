"""Fixed-point natural logarithms.

Every singular value is stored as ``round(log(sigma) * 2**FRAC_BITS)``, a plain
Python int.  Products of d factors become exact integer sums, so the only
rounding in a d-fold product is the d per-factor roundings (each at most
2**-(FRAC_BITS+1)).  With 100 fractional bits this is far below the tie
tolerance, and far below double-double resolution.

Two precision modes exist, selected by the ``TENSORPOW_PRECISION`` environment
variable at spectrum construction time:

``dd`` (default)
    logs evaluated with mpmath at 164 bits, ties within 1e-24 relative.
``double``
    logs evaluated with ``math.log`` in binary64, ties within 1e-12 relative.
"""

import math
import os

import mpmath

from .errors import DomainError

FRAC_BITS = 100
ONE = 1 << FRAC_BITS
WORK_PREC = FRAC_BITS + 64

PRECISION_ENV = "TENSORPOW_PRECISION"
REL_TOL = {"dd": 1e-24, "double": 1e-12}

LOG2 = None  # filled lazily; fixed-point log(2)


def precision_mode(mode=None):
    if mode is None:
        mode = os.environ.get(PRECISION_ENV, "dd")
    mode = mode.strip().lower()
    if mode not in REL_TOL:
        raise DomainError(f"{PRECISION_ENV} must be one of {sorted(REL_TOL)}, got {mode!r}")
    return mode


def tol_unit(mode):
    """Absolute tie tolerance (fixed-point units) for log-values of magnitude <= 1."""
    return int(REL_TOL[mode] * ONE)


def tolerance(unit, *values):
    """Tie tolerance scaled to the magnitude of ``values`` (relative, floor 1)."""
    m = 0
    for v in values:
        a = abs(v)
        if a > m:
            m = a
    return unit * max(1, m >> FRAC_BITS)


def from_mpf(x):
    with mpmath.workprec(WORK_PREC):
        return int(mpmath.nint(x * ONE))


def log_fixed(value, mode="dd"):
    """Fixed-point log of a positive real (int, float, Fraction, str or mpf)."""
    if mode == "double":
        v = float(value)
        if not v > 0:
            raise DomainError(f"log of non-positive value {value!r}")
        return int(math.log(v) * ONE)
    with mpmath.workprec(WORK_PREC):
        if hasattr(value, "numerator") and not isinstance(value, (int, float)):
            x = mpmath.mpf(value.numerator) / value.denominator
        else:
            x = mpmath.mpf(value)
        if not x > 0:
            raise DomainError(f"log of non-positive value {value!r}")
        return int(mpmath.nint(mpmath.log(x) * ONE))


def log2_fixed():
    global LOG2
    if LOG2 is None:
        LOG2 = log_fixed(2)
    return LOG2


def to_float(fx):
    """Convert a fixed-point log to a binary64 log (correctly rounded)."""
    if fx is None:
        return -math.inf
    return fx / ONE


def to_mpf(fx):
    with mpmath.workprec(WORK_PREC):
        return mpmath.mpf(fx) / ONE


def exp_float(fx):
    """Linear-scale value of a fixed-point log, as a float (may underflow to 0)."""
    if fx is None:
        return 0.0
    with mpmath.workprec(64):
        return float(mpmath.exp(mpmath.mpf(fx) / ONE))
