"""Radial Jacobi polynomial bases P_n^(a,b)(2r^2-1) on the unit ball.

The radial part of the generalized Zernike basis in dimension d is a shifted
Jacobi polynomial with second parameter b = (d-2)/2, orthogonal on r in [0,1]
against (1-r^2)^a r^(d-1) dr.  This module provides evaluation, the classical
three-term recurrence, the multiplication-by-r^2 operator, parameter-raising
conversion, Gauss-Jacobi quadrature, projection, and the total-mass
functional of a weighted expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .specfun import ln_gamma

__all__ = [
    "BasisSpec",
    "CoefficientVector",
    "QuadratureRule",
    "BasisDomainError",
    "IncompatibleSpecError",
    "choose_basis",
    "eval_radial",
    "evaluate_expansion",
    "multiplication_operator",
    "conversion_operator",
    "gauss_jacobi_rule",
    "jacobi_norm",
    "project",
    "mass_functional",
]

# Reject bases whose first Jacobi parameter sits within this distance of the
# degenerate endpoint a = -1 (kernel power within ~1e-8 of a sparsity-range
# endpoint); the operator constants lose all accuracy there.
_DEGENERACY_MARGIN = 5e-9


class BasisDomainError(ValueError):
    """Requested kernel power / dimension admits no valid radial basis."""


class IncompatibleSpecError(ValueError):
    """Operation received basis specs that cannot be combined."""


@dataclass(frozen=True)
class BasisSpec:
    """Identifies a radial Jacobi basis on the d-dimensional unit ball.

    Attributes
    ----------
    d : int
        Ambient dimension, >= 1.
    ell : int
        Weight ladder index; the associated kernel power is banded with
        2*ell + 1 bands in this basis.
    a : float
        First Jacobi parameter, ell - (alpha + d)/2 for the defining power.
    b : float
        Second Jacobi parameter, always (d - 2)/2.
    weighted : bool
        Whether expansions in this spec carry the (1-r^2)^a weight factor.
    """

    d: int
    ell: int
    a: float
    b: float
    weighted: bool = True

    def __post_init__(self) -> None:
        if self.d < 1:
            raise BasisDomainError(f"dimension d={self.d} must be >= 1")
        if self.ell < 0:
            raise BasisDomainError(f"ell={self.ell} must be >= 0")
        if self.a <= -1 or self.b <= -1:
            raise BasisDomainError(f"Jacobi parameters a={self.a}, b={self.b} must exceed -1")
        if abs(self.b - (self.d - 2) / 2) > 1e-12:
            raise BasisDomainError(f"b={self.b} must equal (d-2)/2 for d={self.d}")

    @property
    def alpha(self) -> float:
        """Kernel power whose potential operator is banded in this basis."""
        return 2 * (self.ell - self.a) - self.d

    def unweighted(self) -> "BasisSpec":
        return BasisSpec(self.d, self.ell, self.a, self.b, weighted=False)

    def as_weighted(self) -> "BasisSpec":
        return BasisSpec(self.d, self.ell, self.a, self.b, weighted=True)


@dataclass(frozen=True)
class CoefficientVector:
    """Expansion coefficients rho_0..rho_{N-1} in a radial Jacobi basis."""

    coeffs: np.ndarray
    basis: BasisSpec

    def __post_init__(self) -> None:
        arr = np.asarray(self.coeffs, dtype=float)
        if arr.ndim != 1:
            raise ValueError("coefficient vector must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficient vector contains non-finite entries")
        object.__setattr__(self, "coeffs", arr)

    def __len__(self) -> int:
        return self.coeffs.shape[0]


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Jacobi rule on (-1, 1) for the weight (1-t)^a (1+t)^b."""

    nodes: np.ndarray
    weights: np.ndarray
    exponents: tuple[float, float]

    @property
    def radial_nodes(self) -> np.ndarray:
        """Nodes mapped to r in (0,1) through t = 2 r^2 - 1."""
        return np.sqrt((1.0 + self.nodes) / 2.0)


def choose_basis(alpha: float, d: int) -> BasisSpec:
    """Pick the weighted radial basis in which the alpha-power operator is banded.

    ell = max(0, floor((alpha+d)/2)) and a = ell - (alpha+d)/2 in (-1, 0].
    Kernel powers within ~1e-8 of a sparsity-range endpoint (where a would
    degenerate toward -1, or sit just below 0 without reaching it) are
    rejected.
    """
    if alpha <= -d:
        raise BasisDomainError(f"kernel power alpha={alpha} must exceed -d={-d}")
    half = (alpha + d) / 2.0
    ell = max(0, math.floor(half))
    a = ell - half
    if a <= -1 + _DEGENERACY_MARGIN:
        raise BasisDomainError(
            f"alpha={alpha}, d={d} lies within 1e-8 of the sparsity-range endpoint "
            f"{2 * ell + 2 - d}; operator constants degenerate there"
        )
    if -_DEGENERACY_MARGIN < a < 0:
        raise BasisDomainError(
            f"alpha={alpha}, d={d} lies within 1e-8 of the sparsity-range endpoint "
            f"{2 * ell - d}; operator constants degenerate there"
        )
    return BasisSpec(d=d, ell=ell, a=a, b=(d - 2) / 2.0, weighted=True)


def _recurrence_abc(a: float, b: float, n: int) -> tuple[float, float, float]:
    """Coefficients of P_{n+1} = (A_n x + B_n) P_n - C_n P_{n-1}."""
    if n == 0:
        return (a + b + 2) / 2.0, (a - b) / 2.0, 0.0
    s = 2 * n + a + b
    A = (s + 1) * (s + 2) / (2 * (n + 1) * (n + a + b + 1))
    B = (a * a - b * b) * (s + 1) / (2 * (n + 1) * (n + a + b + 1) * s)
    C = (n + a) * (n + b) * (s + 2) / ((n + 1) * (n + a + b + 1) * s)
    return A, B, C


def _check_radius(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(r < -1e-12) or np.any(r > 1 + 1e-12):
        raise ValueError("radial argument outside [0, 1]")
    return np.clip(r, 0.0, 1.0)


def _poly_table(a: float, b: float, N: int, t: np.ndarray) -> np.ndarray:
    """Table P[k, i] = P_k^(a,b)(t_i) for k < N, by forward recurrence."""
    t = np.asarray(t, dtype=float)
    table = np.empty((N, t.shape[0]))
    table[0] = 1.0
    if N > 1:
        A0, B0, _ = _recurrence_abc(a, b, 0)
        table[1] = A0 * t + B0
    for n in range(1, N - 1):
        A, B, C = _recurrence_abc(a, b, n)
        table[n + 1] = (A * t + B) * table[n] - C * table[n - 1]
    return table


def eval_radial(spec: BasisSpec, n: int, r) -> float | np.ndarray:
    """P_n^(a,b)(2r^2-1), times (1-r^2)^a when the spec is weighted."""
    if n < 0:
        raise ValueError("polynomial degree must be >= 0")
    r = _check_radius(r)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    t = 2.0 * r * r - 1.0
    vals = _poly_table(spec.a, spec.b, n + 1, t)[n]
    if spec.weighted:
        vals = vals * np.power(1.0 - r * r, spec.a)
    return float(vals[0]) if scalar else vals


def evaluate_expansion(vec: CoefficientVector, r) -> float | np.ndarray:
    """Synthesize sum_n rho_n P_n (times the weight if applicable) at radii r."""
    r = _check_radius(r)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    t = 2.0 * r * r - 1.0
    table = _poly_table(vec.basis.a, vec.basis.b, len(vec), t)
    vals = vec.coeffs @ table
    if vec.basis.weighted:
        vals = vals * np.power(1.0 - r * r, vec.basis.a)
    return float(vals[0]) if scalar else vals


def multiplication_operator(spec: BasisSpec, N: int) -> np.ndarray:
    """Tridiagonal N x N matrix X with (X f) the coefficients of r^2 f(r).

    Derived by solving the classical recurrence for r^2 P_n; the matrix
    depends only on the Jacobi parameters, so it applies equally to weighted
    and unweighted expansions.
    """
    if N < 2:
        raise ValueError("multiplication operator needs N >= 2")
    X = np.zeros((N, N))
    for n in range(N):
        A, B, C = _recurrence_abc(spec.a, spec.b, n)
        if A == 0:
            raise ArithmeticError(f"degenerate recurrence at n={n} for spec {spec}")
        X[n, n] = (A - B) / (2 * A)
        if n >= 1:
            X[n - 1, n] = C / (2 * A)
        if n + 1 < N:
            X[n + 1, n] = 1.0 / (2 * A)
    return X


def conversion_operator(spec_from: BasisSpec, spec_to: BasisSpec, N: int) -> np.ndarray:
    """Matrix taking polynomial coefficients in the (a)-basis to the (a+k)-basis.

    Composed from the single-step raising relation; k = spec_to.a - spec_from.a
    must be a non-negative integer and the remaining parameters must agree.
    """
    if spec_from.d != spec_to.d or abs(spec_from.b - spec_to.b) > 1e-12:
        raise IncompatibleSpecError("conversion requires matching d and b")
    shift = spec_to.a - spec_from.a
    k = round(shift)
    if k < 0 or abs(shift - k) > 1e-10:
        raise IncompatibleSpecError(f"parameter shift {shift} is not a non-negative integer")
    out = np.eye(N)
    a, b = spec_from.a, spec_from.b
    for j in range(k):
        step = np.zeros((N, N))
        step[0, 0] = 1.0
        for n in range(1, N):
            den = 2 * n + a + b + 1
            step[n, n] = (n + a + b + 1) / den
            step[n - 1, n] = -(n + b) / den
        out = step @ out
        a += 1.0
    return out


def gauss_jacobi_rule(a: float, b: float, n_nodes: int) -> QuadratureRule:
    """Gauss-Jacobi rule, exact for degree <= 2*n_nodes - 1 against (1-t)^a (1+t)^b.

    Built by the Golub-Welsch eigendecomposition of the monic Jacobi matrix;
    this stays accurate even for exponents close to -1, where library rules
    were observed to lose several digits of orthogonality.
    """
    if n_nodes < 1:
        raise ValueError("need at least one node")
    if a <= -1 or b <= -1:
        raise ValueError("Jacobi exponents must exceed -1")
    apb = a + b
    diag = np.empty(n_nodes)
    diag[0] = (b - a) / (apb + 2)
    if n_nodes > 1:
        k = np.arange(1, n_nodes, dtype=float)
        diag[1:] = (b * b - a * a) / ((2 * k + apb) * (2 * k + apb + 2))
    if n_nodes > 1:
        k = np.arange(1, n_nodes, dtype=float)
        num = 4.0 * k * (k + a) * (k + b) * (k + apb)
        den = (2 * k + apb) ** 2 * (2 * k + apb + 1) * (2 * k + apb - 1)
        sq = num / den
        # k = 1 with a + b = -1 is 0/0; the (k+a+b)/(2k+a+b-1) pair cancels.
        if abs(apb + 1) < 1e-13:
            sq[0] = 4.0 * (1 + a) * (1 + b) / ((2 + apb) ** 2 * (3 + apb))
        offdiag = np.sqrt(sq)
    else:
        offdiag = np.empty(0)
    mu0 = math.exp((apb + 1) * math.log(2.0) + ln_gamma(a + 1) + ln_gamma(b + 1) - ln_gamma(apb + 2))
    if n_nodes == 1:
        return QuadratureRule(nodes=diag.copy(), weights=np.array([mu0]), exponents=(a, b))
    nodes, vecs = eigh_tridiagonal(diag, offdiag)
    weights = mu0 * vecs[0, :] ** 2
    return QuadratureRule(nodes=nodes, weights=weights, exponents=(a, b))


def jacobi_norm(a: float, b: float, n: int) -> float:
    """Squared norm of P_n^(a,b) against the Jacobi weight on (-1, 1)."""
    if n == 0:
        return math.exp(
            (a + b + 1) * math.log(2.0) + ln_gamma(a + 1) + ln_gamma(b + 1) - ln_gamma(a + b + 2)
        )
    return math.exp(
        (a + b + 1) * math.log(2.0)
        + ln_gamma(a + n + 1)
        + ln_gamma(b + n + 1)
        - ln_gamma(n + 1)
        - math.log(a + b + 2 * n + 1)
        - ln_gamma(a + b + n + 1)
    )


def project(f, spec: BasisSpec, N: int, n_nodes: int | None = None) -> CoefficientVector:
    """Expand a function on [0, 1] in the radial basis by Gauss-Jacobi quadrature.

    Parameters
    ----------
    f : callable
        Function of the physical radius r in [0, 1]; may be vectorized.
    spec : BasisSpec
        Target basis.  For a weighted spec the coefficients are those of
        f(r) = sum_n c_n (1-r^2)^a P_n(2r^2-1).
    N : int
        Number of coefficients.
    n_nodes : int, optional
        Quadrature size; defaults to 2*(N + 40), enough headroom to absorb
        smooth non-polynomial tails.
    """
    if n_nodes is None:
        n_nodes = 2 * (N + 40)
    rule = gauss_jacobi_rule(spec.a, spec.b, n_nodes)
    r = rule.radial_nodes
    try:
        fv = np.asarray(f(r), dtype=float)
        if fv.shape != r.shape:
            raise ValueError
    except Exception:
        fv = np.array([float(f(x)) for x in r])
    if spec.weighted:
        fv = fv / np.power((1.0 - rule.nodes) / 2.0, spec.a)
    table = _poly_table(spec.a, spec.b, N, rule.nodes)
    raw = table @ (rule.weights * fv)
    norms = np.array([jacobi_norm(spec.a, spec.b, n) for n in range(N)])
    return CoefficientVector(coeffs=raw / norms, basis=spec)


def mass_functional(rho: CoefficientVector, R: float) -> float:
    """Total mass of a weighted expansion supported on the ball of radius R.

    Only the 0-th coefficient carries mass: the unit-ball integral is
    pi^(d/2) Gamma(a+1) / Gamma(a + d/2 + 1) * rho_0, rescaled by R^d.
    """
    if not rho.basis.weighted:
        raise IncompatibleSpecError("mass functional requires a weighted basis")
    if R <= 0:
        raise ValueError("support radius must be positive")
    a, d = rho.basis.a, rho.basis.d
    const = math.exp(
        (d / 2.0) * math.log(math.pi) + ln_gamma(a + 1) - ln_gamma(a + d / 2.0 + 1)
    )
    return R**d * const * float(rho.coeffs[0])
