"""Special functions and factorial bookkeeping shared by the solvers.

Everything here is pure. The log-factorial table is built once on import
and never mutated afterwards.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln


class DomainError(ValueError):
    """Argument outside the domain of an operation."""


class TruncationError(ValueError):
    """A Fock cutoff is too small to hold the requested probability mass."""

    def __init__(self, msg, tail_mass=None):
        super().__init__(msg)
        self.tail_mass = tail_mass


class PrecisionError(ArithmeticError):
    """A numerical route lost too many digits to be trusted."""


class ConditioningWarning(RuntimeWarning):
    """Cancellation in an intermediate sum exceeded the reporting threshold."""


@dataclass(frozen=True)
class LogFactorialTable:
    values: np.ndarray
    max_n: int

    @classmethod
    def build(cls, max_n: int = 1024) -> "LogFactorialTable":
        vals = np.zeros(max_n + 1)
        # running sum of logs keeps consecutive differences exact to rounding
        vals[1:] = np.cumsum(np.log(np.arange(1, max_n + 1, dtype=float)))
        vals.setflags(write=False)
        return cls(vals, max_n)


_TABLE = LogFactorialTable.build()


def log_factorial(n):
    """ln(n!) for integer n >= 0 (scalar or array)."""
    n_arr = np.asarray(n)
    if np.any(n_arr < 0):
        raise DomainError("log_factorial needs n >= 0")
    if n_arr.ndim == 0:
        k = int(n_arr)
        if k <= _TABLE.max_n:
            return float(_TABLE.values[k])
        return float(gammaln(k + 1.0))
    n_int = n_arr.astype(np.int64)
    out = np.empty(n_int.shape)
    small = n_int <= _TABLE.max_n
    out[small] = _TABLE.values[n_int[small]]
    out[~small] = gammaln(n_int[~small] + 1.0)
    return out


def laguerre(n: int, a: float, x):
    """Generalized Laguerre polynomial L_n^(a)(x) by forward recurrence in n.

    ``x`` may be an array; ``n`` and ``a`` are scalars.
    """
    if n < 0 or int(n) != n:
        raise DomainError("laguerre degree must be a nonnegative integer")
    x = np.asarray(x, dtype=float)
    if not np.isfinite(a) or not np.all(np.isfinite(x)):
        raise DomainError("laguerre needs finite a and x")
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 + a - x
    for k in range(1, int(n)):
        prev, cur = cur, ((2 * k + 1 + a - x) * cur - (k + a) * prev) / (k + 1)
    return cur if cur.ndim else float(cur)


def _kummer_exact(m: int, b: float, x: float) -> float:
    fb, fx = Fraction(b), Fraction(x)
    term = Fraction(1)
    total = Fraction(1)
    for k in range(m):
        term = term * (k - m) / (fb + k) * fx / (k + 1)
        total += term
    return float(total)


def kummer_poly(m: int, b: float, x: float, *, exact_above: float = 1e3) -> float:
    """Terminating confluent hypergeometric series 1F1(-m; b; x).

    The m+1 terms are summed in floating point. When the terms cancel by
    more than ``exact_above`` (sum of moduli over modulus of the sum) the
    same finite sum is redone in exact rational arithmetic.
    """
    if m < 0 or int(m) != m:
        raise DomainError("kummer_poly needs a nonnegative integer m")
    if not (math.isfinite(b) and math.isfinite(x)):
        raise DomainError("kummer_poly needs finite b and x")
    if b <= 0 and float(b).is_integer() and b > -m:
        raise DomainError(f"b={b} makes the series undefined for m={m}")
    term = 1.0
    total = 1.0
    size = 1.0
    for k in range(int(m)):
        term *= (k - m) / (b + k) * x / (k + 1)
        total += term
        size += abs(term)
    if size > exact_above * abs(total):
        return _kummer_exact(int(m), b, x)
    return total
