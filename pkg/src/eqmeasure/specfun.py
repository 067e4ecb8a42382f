"""Scalar special functions used by the potential operator formulas.

Everything here is a pure function of its arguments.  Gamma-family values
are handled in log space with explicit sign tracking so that the large
Gamma-ratio prefactors appearing in the operator constants can be assembled
without overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import hyp2f1 as _scipy_hyp2f1

__all__ = [
    "GammaPoleError",
    "Hyp2F1Error",
    "HypergeometricArgs",
    "ln_gamma",
    "gamma_sign",
    "signed_ln_gamma",
    "reciprocal_gamma",
    "pochhammer",
    "beta",
    "gauss_2f1",
]

# Tolerance for treating a float as an exact integer.  Parameters such as
# n - beta/2 are produced by exact arithmetic on user inputs, so anything
# this close to an integer is one.
_INT_TOL = 1e-12

_SERIES_CAP = 20000


class GammaPoleError(ValueError):
    """Gamma-family function evaluated at a pole."""


class Hyp2F1Error(ArithmeticError):
    """Gauss hypergeometric evaluation failed to produce a finite value."""


def _is_nonpositive_integer(x: float) -> bool:
    return x <= _INT_TOL and abs(x - round(x)) < _INT_TOL


def ln_gamma(x: float) -> float:
    """log |Gamma(x)|.  Raises GammaPoleError at non-positive integers."""
    if _is_nonpositive_integer(x):
        raise GammaPoleError(f"Gamma pole at x={x}")
    return math.lgamma(x)


def gamma_sign(x: float) -> int:
    """Sign of Gamma(x) for x off the poles."""
    if x > 0:
        return 1
    # Gamma alternates sign on the negative intervals (-m, -m+1).
    m = math.ceil(-x)
    return -1 if m % 2 == 1 else 1


def signed_ln_gamma(x: float) -> tuple[float, int]:
    """(log |Gamma(x)|, sign of Gamma(x))."""
    return ln_gamma(x), gamma_sign(x)


def reciprocal_gamma(x: float) -> float:
    """1 / Gamma(x), which is entire: returns exactly 0 at the poles."""
    if _is_nonpositive_integer(x):
        return 0.0
    return gamma_sign(x) * math.exp(-math.lgamma(x))


def pochhammer(x: float, n: int) -> float:
    """Rising factorial (x)_n = x (x+1) ... (x+n-1), with (x)_0 = 1."""
    if n < 0:
        raise ValueError("pochhammer requires n >= 0")
    out = 1.0
    for k in range(n):
        out *= x + k
    return out


def beta(x: float, y: float) -> float:
    """Beta function Gamma(x)Gamma(y)/Gamma(x+y), in log space with signs.

    Returns 0 when x+y sits on a Gamma pole while x and y do not.
    """
    lx, sx = signed_ln_gamma(x)
    ly, sy = signed_ln_gamma(y)
    if _is_nonpositive_integer(x + y):
        return 0.0
    lxy, sxy = signed_ln_gamma(x + y)
    return sx * sy * sxy * math.exp(lx + ly - lxy)


@dataclass(frozen=True)
class HypergeometricArgs:
    """Arguments of the Gauss hypergeometric function 2F1(a, b; c; z).

    z must lie in [0, 1); z = 1 is admitted only when c - a - b > 0 or when
    the series terminates.  c must not be a non-positive integer unless a or
    b terminates the series first.
    """

    a: float
    b: float
    c: float
    z: float

    def __post_init__(self) -> None:
        n_term = self.termination_index()
        if _is_nonpositive_integer(self.c):
            if n_term is None or n_term > -round(self.c):
                raise ValueError(f"2F1 undefined: lower parameter c={self.c} is a non-positive integer")
        if not 0.0 <= self.z <= 1.0:
            raise ValueError(f"2F1 argument z={self.z} outside [0, 1]")
        if self.z == 1.0 and n_term is None and self.c - self.a - self.b <= 0:
            raise ValueError("2F1 divergent at z=1 when c - a - b <= 0")

    def termination_index(self) -> int | None:
        """Degree of the terminating series, or None if non-terminating."""
        best = None
        for p in (self.a, self.b):
            if _is_nonpositive_integer(p):
                n = -round(p)
                best = n if best is None else min(best, n)
        return None if best is None else int(best)


def _terminating_sum(a: float, b: float, c: float, z, n_terms: int):
    """Finite 2F1 series sum_{k<=n} (a)_k (b)_k / ((c)_k k!) z^k."""
    z = np.asarray(z, dtype=float)
    total = np.ones_like(z)
    term = np.ones_like(z)
    for k in range(n_terms):
        term = term * ((a + k) * (b + k) / ((c + k) * (k + 1))) * z
        total = total + term
    return total


def gauss_2f1(args: HypergeometricArgs) -> float:
    """Evaluate 2F1(a, b; c; z) on [0, 1).

    Terminating cases (a or b a non-positive integer) use the exact finite
    sum.  The transcendental case is delegated to scipy's hyp2f1, which
    applies the standard linear transformations near z = 1; a non-finite
    result raises Hyp2F1Error.
    """
    a, b, c, z = args.a, args.b, args.c, args.z
    n_term = args.termination_index()
    if z == 0.0:
        return 1.0
    if n_term is not None:
        return float(_terminating_sum(a, b, c, z, n_term))
    val = float(_scipy_hyp2f1(a, b, c, z))
    if not math.isfinite(val):
        raise Hyp2F1Error(f"hyp2f1({a}, {b}, {c}, {z}) did not converge to a finite value")
    return val


def hyp2f1_grid(a: float, b: float, c: float, z):
    """Vectorized 2F1 over an array of arguments z in [0, 1).

    Internal fast path for operator seed projections; semantics match
    gauss_2f1 applied elementwise.
    """
    z = np.asarray(z, dtype=float)
    probe = HypergeometricArgs(a, b, c, 0.0)
    n_term = probe.termination_index()
    if n_term is not None:
        return _terminating_sum(a, b, c, z, n_term)
    vals = _scipy_hyp2f1(a, b, c, z)
    if not np.all(np.isfinite(vals)):
        raise Hyp2F1Error(f"hyp2f1({a}, {b}, {c}, z) non-finite on the evaluation grid")
    return vals
