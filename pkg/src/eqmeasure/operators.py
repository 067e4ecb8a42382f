"""Power-law potential operators on radial Jacobi coefficient vectors.

An operator U maps the coefficients of a density expanded in the weighted
basis (1-r^2)^a P_n^(a,b)(2r^2-1) to the coefficients of its power-law
potential expanded in the unweighted basis with the same parameters.  When
the kernel power equals the power that defines the basis, the operator is
banded with exactly 2*ell + 1 bands; for even positive integer kernel powers
2p only the leading (p+1) rows and columns are nonzero; otherwise the
operator is dense with entries decaying away from a central band.

Columns 0 and 1 are seeded from the closed-form hypergeometric representation
of the potential; the remaining columns follow from a three-term recurrence
in the column index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .jacobi import BasisSpec, gauss_jacobi_rule, jacobi_norm, multiplication_operator, project, _poly_table
from .specfun import hyp2f1_grid, reciprocal_gamma, signed_ln_gamma

__all__ = [
    "PotentialOperator",
    "KernelRangeError",
    "DegenerateRecurrenceError",
    "diagonal_entry",
    "tridiagonal_column",
    "seed_column",
    "column_recurrence_coeffs",
    "build_operator",
    "build_count",
    "reset_build_count",
    "operator_metadata",
]

_LN_PI = math.log(math.pi)

# Number of extra rows/columns carried internally while marching the column
# recurrence; protects the returned block from truncation effects at the
# bottom rows.
_MARCH_PAD = 16

_build_count = 0


class KernelRangeError(ValueError):
    """Kernel power outside the validity range of the requested formula."""


class DegenerateRecurrenceError(ArithmeticError):
    """A recurrence denominator factor vanished."""


@dataclass(frozen=True)
class PotentialOperator:
    """Matrix of a power-law potential in a fixed radial Jacobi basis pair."""

    matrix: np.ndarray
    kernel_power: float
    basis: BasisSpec
    N: int
    declared_bandwidth: int | None
    storage: str

    def __post_init__(self) -> None:
        if self.matrix.shape != (self.N, self.N):
            raise ValueError("operator matrix shape disagrees with N")


def _gamma_product(num: list[float], den: list[float]) -> float:
    """prod Gamma(num) / prod Gamma(den) via signed log accumulation."""
    log_acc = 0.0
    sign = 1
    for x in num:
        lg, s = signed_ln_gamma(x)
        log_acc += lg
        sign *= s
    for x in den:
        lg, s = signed_ln_gamma(x)
        log_acc -= lg
        sign *= s
    return sign * math.exp(log_acc)


def diagonal_entry(alpha: float, d: int, n: int) -> float:
    """Eigenvalue of the alpha-potential on the n-th weighted basis element.

    Valid for alpha in (-d, 2-d), where the basis with ell = 0 renders the
    operator diagonal.
    """
    if not (-d < alpha < 2 - d):
        raise KernelRangeError(f"diagonal operator requires alpha in (-{d}, {2 - d}), got {alpha}")
    if n < 0:
        raise ValueError("n must be >= 0")
    val = _gamma_product(
        num=[(alpha + d) / 2, n - alpha / 2, 1 - (alpha + d) / 2 + n],
        den=[-alpha / 2, d / 2 + n, n + 1.0],
    )
    return math.exp((d / 2) * _LN_PI) * val


def tridiagonal_column(alpha: float, d: int, n: int) -> tuple[float, float, float]:
    """Column n of the banded alpha-operator for alpha in (2-d, 4-d).

    Returns (kappa_a, kappa_b, kappa_c), the coefficients multiplying the
    target-basis polynomials of degrees n-1, n, n+1.  kappa_a is 0 at n = 0.
    """
    if not (2 - d < alpha < 4 - d):
        raise KernelRangeError(f"tridiagonal operator requires alpha in ({2 - d}, {4 - d}), got {alpha}")
    if n < 0:
        raise ValueError("n must be >= 0")
    pref = math.exp((d / 2) * _LN_PI)
    if n == 0:
        kappa_a = 0.0
    else:
        kappa_a = -4 * pref * _gamma_product(
            num=[(alpha + d) / 2, n - alpha / 2, n - (alpha + d) / 2 + 2],
            den=[-alpha / 2, n + 1.0, d / 2 + n - 1],
        ) / ((alpha - 4 * n - 2) * (alpha - 4 * n))
    kappa_b = 8 * pref * _gamma_product(
        num=[(alpha + d) / 2, n - alpha / 2 + 1, n - (alpha + d) / 2 + 2],
        den=[-alpha / 2, n + 1.0, d / 2 + n],
    ) / ((alpha - 4 * n) * (alpha - 4 * (n + 1)))
    kappa_c = -4 * pref * _gamma_product(
        num=[(alpha + d) / 2, n - alpha / 2 + 2, n - (alpha + d) / 2 + 2],
        den=[-alpha / 2, n + 1.0, d / 2 + n + 1],
    ) / ((alpha - 4 * n - 2) * (alpha - 4 * (n + 1)))
    return kappa_a, kappa_b, kappa_c


def _seed_prefactor(beta: float, basis: BasisSpec, n: int) -> float:
    """Constant multiplying the hypergeometric seed of column n.

    The Gamma ratio Gamma(1 + beta/2) / Gamma(beta/2 - n + 1) is evaluated as
    a finite product so that even integer kernel powers produce exact zeros
    instead of pole/pole ambiguity.
    """
    a, d = basis.a, basis.d
    ratio = 1.0
    for j in range(1, n + 1):
        ratio *= beta / 2 + 1 - j
    if ratio == 0.0:
        return 0.0
    val = _gamma_product(
        num=[(beta + d) / 2, a + n + 1],
        den=[d / 2, n + 1.0, (beta + d) / 2 + a + n + 1],
    )
    return math.exp((d / 2) * _LN_PI) * ratio * val


def _termination_degree(a_upper: float, b_upper: float) -> int | None:
    best = None
    for p in (a_upper, b_upper):
        if abs(p - round(p)) < 1e-12 and round(p) <= 0:
            deg = -round(p)
            best = deg if best is None else min(best, deg)
    return None if best is None else int(best)


def _polynomial_column(a_upper: float, b_upper: float, c_lower: float, degree: int, basis: BasisSpec, N: int) -> np.ndarray:
    """Exact expansion of a terminating 2F1 of r^2 in the unweighted basis.

    The power series in z = r^2 is pushed through powers of the exact
    multiplication-by-r^2 operator; no quadrature enters, so banded operators
    come out banded to machine precision.
    """
    size = max(N, degree + 2)
    X = multiplication_operator(basis.unweighted(), size)
    acc = np.zeros(size)
    monomial = np.zeros(size)
    monomial[0] = 1.0
    acc += monomial
    term = 1.0
    for k in range(degree):
        term *= (a_upper + k) * (b_upper + k) / ((c_lower + k) * (k + 1))
        monomial = X @ monomial
        acc = acc + term * monomial
    return acc[:N]


def _mapped_jacobi_rule(lo: float, hi: float, rho_hi: float, rho_lo: float, n_nodes: int):
    """Nodes/weights for int_lo^hi (hi-t)^rho_hi (t-lo)^rho_lo f(t) dt."""
    rule = gauss_jacobi_rule(rho_hi, rho_lo, n_nodes)
    half = (hi - lo) / 2.0
    t = lo + half * (1.0 + rule.nodes)
    w = rule.weights * half ** (rho_hi + rho_lo + 1)
    return t, w


def _transcendental_column(pref: float, a_up: float, b_up: float, c_low: float, basis: BasisSpec, N: int, n_nodes: int | None) -> np.ndarray:
    """Expansion of pref * 2F1(a_up, b_up; c_low; r^2) in the unweighted basis.

    The hypergeometric behaves like smooth + (1-z)^sigma * smooth toward the
    boundary (sigma = c - a - b), which defeats a single Gauss-Jacobi rule.
    The projection integral is therefore split at t0: the interior piece is
    evaluated directly, while on [t0, 1] the function is separated by the
    z -> 1-z connection formula and each branch is integrated against a rule
    whose weight absorbs its exact endpoint exponent.
    """
    a, b, d = basis.a, basis.b, basis.d
    sigma = c_low - a_up - b_up
    if a + sigma <= -1 + 1e-9:
        raise KernelRangeError(
            f"potential expansion divergent: boundary exponent a+sigma={a + sigma:.3g} <= -1"
        )
    npts = n_nodes if n_nodes is not None else N + 72
    norms = np.array([jacobi_norm(a, b, k) for k in range(N)])

    if abs(sigma - round(sigma)) < 1e-8:
        # Degenerate (logarithmic) connection formula; fall back to a plain
        # rule, which converges adequately for the non-negative integer
        # exponents that occur here.
        def g(r):
            return pref * hyp2f1_grid(a_up, b_up, c_low, r * r)

        return project(g, basis.unweighted(), N, n_nodes=4 * npts).coeffs

    t0 = 0.8
    # Interior piece: absorb (1+t)^b, evaluate the 2F1 directly.
    t1, w1 = _mapped_jacobi_rule(-1.0, t0, 0.0, b, npts)
    f1 = (1.0 - t1) ** a * hyp2f1_grid(a_up, b_up, c_low, (1.0 + t1) / 2.0)
    acc = _poly_table(a, b, N, t1) @ (w1 * f1)

    # Boundary pieces via 2F1(a,b;c;z) = A F(.;1-z) + B (1-z)^sigma F(.;1-z).
    coef_A = _gamma_product(num=[c_low, sigma], den=[]) * reciprocal_gamma(c_low - a_up) * reciprocal_gamma(c_low - b_up)
    coef_B = _gamma_product(num=[c_low, -sigma], den=[]) * reciprocal_gamma(a_up) * reciprocal_gamma(b_up)
    if coef_A != 0.0:
        t2, w2 = _mapped_jacobi_rule(t0, 1.0, a, 0.0, npts)
        u2 = (1.0 - t2) / 2.0
        f2 = (1.0 + t2) ** b * hyp2f1_grid(a_up, b_up, a_up + b_up - c_low + 1.0, u2)
        acc = acc + coef_A * (_poly_table(a, b, N, t2) @ (w2 * f2))
    if coef_B != 0.0:
        t3, w3 = _mapped_jacobi_rule(t0, 1.0, a + sigma, 0.0, npts)
        u3 = (1.0 - t3) / 2.0
        f3 = (1.0 + t3) ** b * hyp2f1_grid(c_low - a_up, c_low - b_up, sigma + 1.0, u3)
        acc = acc + coef_B * 2.0 ** (-sigma) * (_poly_table(a, b, N, t3) @ (w3 * f3))
    return pref * acc / norms


def seed_column(beta: float, basis: BasisSpec, n: int, N: int, n_nodes: int | None = None) -> np.ndarray:
    """First N target-basis coefficients of the beta-potential of element n.

    The potential of the n-th weighted basis element is a prefactor times
    2F1(n - beta/2, -a - n - (beta+d)/2; d/2; r^2).  Terminating cases (the
    banded and even-integer kernels) are expanded exactly through the
    multiplication operator; the transcendental cases go through the split
    boundary-aware projection.  The operator builder consumes n in {0, 1};
    larger n serve as a direct cross-check of the recurrence marching.
    """
    if beta <= -basis.d:
        raise KernelRangeError(f"kernel power beta={beta} must exceed -d={-basis.d}")
    if n < 0:
        raise ValueError("n must be >= 0")
    pref = _seed_prefactor(beta, basis, n)
    if pref == 0.0:
        return np.zeros(N)
    a_upper = n - beta / 2
    b_upper = -basis.a - n - (beta + basis.d) / 2
    c_lower = basis.d / 2
    degree = _termination_degree(a_upper, b_upper)
    if degree is not None:
        return pref * _polynomial_column(a_upper, b_upper, c_lower, degree, basis, N)
    return _transcendental_column(pref, a_upper, b_upper, c_lower, basis, N, n_nodes)


def column_recurrence_coeffs(alpha: float, beta: float, d: int, m: int, n: int) -> tuple[float, float, float]:
    """Coefficients advancing the beta-potential columns in the alpha-basis.

    With X the multiplication-by-r^2 operator in the target basis,
    col_{n+1} = (c_a X + c_b I) col_n + c_c col_{n-1}, for n >= 1.
    """
    if n < 1:
        raise ValueError("column recurrence starts at n = 1")
    d1 = 2 * (n + 1)
    d2 = -alpha + 2 * m + 4 * n - 2
    d3 = -alpha + beta + 2 * m + 2 * n + 2
    d4 = -alpha + beta + d + 2 * m + 2 * n
    for name, factor in (("2(n+1)", d1), ("-a+2m+4n-2", d2), ("-a+b+2m+2n+2", d3), ("-a+b+d+2m+2n", d4)):
        if abs(factor) < 1e-13:
            raise DegenerateRecurrenceError(f"denominator factor {name} vanishes at n={n}")
    p1 = -alpha + 2 * m + 4 * n
    p2 = -alpha + 2 * m + 4 * n + 2
    q1 = alpha + d - 2 * (m + n + 1)
    q0 = alpha + d - 2 * (m + n)
    c_a = -p1 * p2 * q1 / (d1 * d3 * d4)
    c_b = -p1 * q1 * (d * (-alpha + 2 * beta + 2 * m + 2) - 2 * (2 * n - beta) * (-alpha + beta + 2 * m + 2 * n)) / (
        d1 * d2 * d3 * d4
    )
    c_c = (-beta + 2 * n - 2) * (beta + d - 2 * n) * p2 * q0 * q1 / (2 * n * d1 * d2 * d3 * d4)
    return c_a, c_b, c_c


def build_operator(kernel_power: float, basis: BasisSpec, N: int, n_nodes: int | None = None) -> PotentialOperator:
    """Assemble the N x N potential operator for a kernel power in a basis.

    Columns 0 and 1 come from seed_column; columns 2..N-1 are marched with
    column_recurrence_coeffs.  The march is carried on a padded block so the
    truncation of the multiplication operator cannot leak into the returned
    entries.
    """
    global _build_count
    if N < 3:
        raise ValueError("operator truncation needs N >= 3")
    if kernel_power <= -basis.d:
        raise KernelRangeError(f"kernel power {kernel_power} must exceed -d={-basis.d}")
    alpha = basis.alpha
    n_ext = N + basis.ell + _MARCH_PAD
    cols = np.zeros((n_ext, n_ext))
    cols[:, 0] = seed_column(kernel_power, basis, 0, n_ext, n_nodes=n_nodes)
    cols[:, 1] = seed_column(kernel_power, basis, 1, n_ext, n_nodes=n_nodes)
    X = multiplication_operator(basis.unweighted(), n_ext)
    for n in range(1, n_ext - 1):
        c_a, c_b, c_c = column_recurrence_coeffs(alpha, kernel_power, basis.d, basis.ell, n)
        cols[:, n + 1] = c_a * (X @ cols[:, n]) + c_b * cols[:, n] + c_c * cols[:, n - 1]
    banded = abs(kernel_power - alpha) < 1e-12
    _build_count += 1
    return PotentialOperator(
        matrix=cols[:N, :N].copy(),
        kernel_power=kernel_power,
        basis=basis,
        N=N,
        declared_bandwidth=2 * basis.ell + 1 if banded else None,
        storage="banded" if banded else "dense",
    )


def build_count() -> int:
    """Number of operator builds since the last reset (test instrumentation)."""
    return _build_count


def reset_build_count() -> None:
    global _build_count
    _build_count = 0


def operator_metadata(op: PotentialOperator) -> dict:
    """JSON-ready description of an operator, paired with its CSV dump."""
    return {
        "alpha": op.basis.alpha,
        "kernel_power": op.kernel_power,
        "d": op.basis.d,
        "ell": op.basis.ell,
        "a": op.basis.a,
        "b": op.basis.b,
        "N": op.N,
        "storage": op.storage,
        "declared_bandwidth": op.declared_bandwidth,
    }
