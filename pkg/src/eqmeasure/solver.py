"""Equilibrium measure solver: assemble, solve, normalize, and minimize in R.

For a fixed support radius R the problem is linear: the combined potential
operator F(R) applied to the coefficient vector of rho/E must equal the
constant function.  The Tikhonov-regularized normal equations give a unique
coefficient vector for each R; mass normalization then fixes both the density
and the Euler-Lagrange constant E.  The support radius itself is found by
minimizing E(R) over radii at which the density is nonnegative.

The energy landscape has a specific structure: E(R) is stationary at the
optimal radius, and the positivity of the density collapses immediately
beyond it.  The stationarity condition d*sigma_0 + R*sigma_0'(R) = 0 is
therefore solved with analytically computed derivatives (the operators are
R-independent, so F'(R) is exact), which localizes the radius far beyond the
precision attainable by comparing energy values in floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .jacobi import BasisSpec, CoefficientVector, choose_basis, evaluate_expansion, mass_functional
from .operators import PotentialOperator, build_operator

__all__ = [
    "ProblemParams",
    "SolverConfig",
    "Measure",
    "SolveReport",
    "SingularSystemError",
    "MassNormalizationError",
    "NoFeasibleMinimumError",
    "BracketLostError",
    "banded_power",
    "build_operator_pair",
    "assemble",
    "solve_fixed_radius",
    "evaluate_measure",
    "measure_min_ratio",
    "energy_scan",
    "minimize_radius",
    "gap_scan",
]

# Density ratio below which a radius cell is treated as collapsed (the
# boundary blow-up past the optimal radius), as opposed to merely failing
# the strict positivity tolerance.
_CRASH_RATIO = -0.5


class SingularSystemError(ArithmeticError):
    """Regularized normal matrix numerically singular."""


class MassNormalizationError(ArithmeticError):
    """Leading coefficient vanished; the measure cannot carry mass."""


class NoFeasibleMinimumError(RuntimeError):
    """No radius with an admissible nonnegative measure was found."""


class BracketLostError(RuntimeError):
    """Radius refinement left its bracket."""

    def __init__(self, lo: float, hi: float, message: str = "") -> None:
        super().__init__(f"refinement bracket ({lo}, {hi}) lost{': ' + message if message else ''}")
        self.lo = lo
        self.hi = hi


@dataclass(frozen=True)
class ProblemParams:
    """Attractive-repulsive power-law problem on a d-dimensional ball."""

    alpha: float
    beta: float
    d: int
    M: float = 1.0

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"dimension d={self.d} must be >= 1")
        if not (-self.d < self.beta < self.alpha):
            raise ValueError(f"powers must satisfy -d < beta < alpha, got beta={self.beta}, alpha={self.alpha}")
        if self.alpha == 0 or self.beta == 0:
            raise ValueError("kernel powers must be nonzero (the kernel carries 1/alpha, 1/beta)")
        if self.M <= 0:
            raise ValueError(f"total mass M={self.M} must be positive")


@dataclass(frozen=True)
class SolverConfig:
    N: int = 60
    s_rel: float = 1e-12
    r_bracket: tuple[float, float] = (0.05, 5.0)
    grid_points: int = 200
    r_tol: float = 1e-12
    positivity_tol: float = 1e-8
    eval_grid: int = 1001

    def __post_init__(self) -> None:
        lo, hi = self.r_bracket
        if not (0 < lo < hi):
            raise ValueError(f"invalid radius bracket {self.r_bracket}")
        if self.s_rel < 0 or self.r_tol <= 0 or self.positivity_tol <= 0:
            raise ValueError("tolerances must be positive (s_rel may be zero)")


@dataclass(frozen=True)
class Measure:
    """Equilibrium measure candidate: weighted coefficients, radius, EL constant."""

    rho: CoefficientVector
    R: float
    E: float


@dataclass
class SolveReport:
    energy_trace: list[tuple[float, float, bool]] = field(default_factory=list)
    chosen_R: float | None = None
    iterations: int = 0
    residual_norm: float = math.nan
    coeff_tail_ratio: float = math.nan
    min_density_ratio: float = math.nan
    refinement: str = ""
    feasible: bool = False


def _is_positive_even_integer(x: float) -> bool:
    return x > 0 and abs(x - round(x)) < 1e-12 and round(x) % 2 == 0


def banded_power(params: ProblemParams) -> float:
    """Power whose operator the basis renders banded.

    An even positive integer kernel power yields a finitely supported
    operator in any radial Jacobi basis, so when one of the two powers is
    such an integer the basis is spent on making the other power banded;
    otherwise the attractive power takes the banded role.
    """
    a_even = _is_positive_even_integer(params.alpha)
    b_even = _is_positive_even_integer(params.beta)
    if a_even and not b_even:
        return params.beta
    return params.alpha


def build_operator_pair(params: ProblemParams, config: SolverConfig) -> tuple[PotentialOperator, PotentialOperator]:
    """(attractive, repulsive) operators in the shared basis; R-independent."""
    basis = choose_basis(banded_power(params), params.d)
    u_attract = build_operator(params.alpha, basis, config.N)
    u_repel = build_operator(params.beta, basis, config.N)
    return u_attract, u_repel


def assemble(params: ProblemParams, R: float, ops: tuple[PotentialOperator, PotentialOperator]) -> np.ndarray:
    """F(R) = R^(alpha+d)/alpha * U_alpha - R^(beta+d)/beta * U_beta."""
    u_attract, u_repel = ops
    if u_attract.basis != u_repel.basis or u_attract.N != u_repel.N:
        raise ValueError("operator pair must share basis and truncation")
    if R <= 0:
        raise ValueError("radius must be positive")
    d = params.d
    return (R ** (params.alpha + d) / params.alpha) * u_attract.matrix - (
        R ** (params.beta + d) / params.beta
    ) * u_repel.matrix


class _RadiusSystem:
    """Shared machinery for repeated solves across R with fixed operators."""

    def __init__(self, params: ProblemParams, config: SolverConfig, ops: tuple[PotentialOperator, PotentialOperator]):
        self.params = params
        self.config = config
        self.ops = ops
        self.basis = ops[0].basis
        self.N = ops[0].N
        self.e1 = np.zeros(self.N)
        self.e1[0] = 1.0
        G = config.eval_grid
        self.grid = np.sin(np.pi * np.arange(G) / (2.0 * G))
        from .jacobi import _poly_table

        t = 2.0 * self.grid**2 - 1.0
        self._table = _poly_table(self.basis.a, self.basis.b, self.N, t)
        self._weight = np.power(1.0 - self.grid**2, self.basis.a)
        self.solve_count = 0

    def _f_and_derivs(self, R: float, order: int = 0):
        p, d = self.params, self.params.d
        ca = R ** (p.alpha + d) / p.alpha
        cb = R ** (p.beta + d) / p.beta
        Ua, Ub = self.ops[0].matrix, self.ops[1].matrix
        F = ca * Ua - cb * Ub
        if order == 0:
            return (F,)
        Fp = (p.alpha + d) / R * ca * Ua - (p.beta + d) / R * cb * Ub
        if order == 1:
            return F, Fp
        Fpp = (p.alpha + d) * (p.alpha + d - 1) / R**2 * ca * Ua - (p.beta + d) * (p.beta + d - 1) / R**2 * cb * Ub
        return F, Fp, Fpp

    def sigma(self, R: float, order: int = 0):
        """Regularized solution of F sigma = e1 and its first R-derivatives."""
        self.solve_count += 1
        mats = self._f_and_derivs(R, order)
        F = mats[0]
        A = F.T @ F
        s = self.config.s_rel * np.linalg.norm(A, "fro")
        As = A + s * np.eye(self.N)
        try:
            sig = np.linalg.solve(As, F.T @ self.e1)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(f"normal matrix singular at R={R}") from exc
        if not np.all(np.isfinite(sig)):
            raise SingularSystemError(f"non-finite solution at R={R}")
        if order == 0:
            return sig
        Fp = mats[1]
        sigp = np.linalg.solve(As, Fp.T @ self.e1 - (Fp.T @ F + F.T @ Fp) @ sig)
        if order == 1:
            return sig, sigp
        Fpp = mats[2]
        rhs = (
            Fpp.T @ self.e1
            - (Fpp.T @ F + 2 * Fp.T @ Fp + F.T @ Fpp) @ sig
            - 2 * (Fp.T @ F + F.T @ Fp) @ sigp
        )
        sigpp = np.linalg.solve(As, rhs)
        return sig, sigp, sigpp

    def normalize(self, sig: np.ndarray, R: float) -> tuple[np.ndarray, float]:
        if abs(sig[0]) < 1e-300:
            raise MassNormalizationError("leading coefficient vanished; no mass can be assigned")
        unit_mass = mass_functional(CoefficientVector(coeffs=np.eye(self.N)[0], basis=self.basis), R)
        lam = self.params.M / (unit_mass * sig[0])
        return lam * sig, lam

    def density_ratio(self, rho: np.ndarray) -> float:
        """min/max density ratio on the interior cosine grid."""
        dens = self._weight * (rho @ self._table)
        peak = np.abs(dens).max()
        if peak == 0 or not np.isfinite(peak):
            return -math.inf
        return float(dens.min() / peak)

    def stationarity(self, R: float) -> float:
        """g(R) = d sigma_0 + R sigma_0'; zero exactly when E'(R) = 0."""
        sig, sigp = self.sigma(R, order=1)
        return self.params.d * sig[0] + R * sigp[0]

    def stationarity_slope(self, R: float) -> float:
        sig, sigp, sigpp = self.sigma(R, order=2)
        return (self.params.d + 1) * sigp[0] + R * sigpp[0]

    def measure_at(self, R: float) -> tuple[Measure, float, float]:
        sig = self.sigma(R)
        rho, lam = self.normalize(sig, R)
        F = self._f_and_derivs(R)[0]
        resid = float(np.abs(F @ sig - self.e1).max())
        ratio = self.density_ratio(rho)
        meas = Measure(rho=CoefficientVector(coeffs=rho, basis=self.basis), R=R, E=lam)
        return meas, ratio, resid


def solve_fixed_radius(
    params: ProblemParams, R: float, config: SolverConfig, ops: tuple[PotentialOperator, PotentialOperator]
) -> Measure:
    """Mass-normalized measure with constant potential on the ball of radius R.

    Solves the Tikhonov-regularized normal equations
    (s I + F^T F) sigma = F^T e_1 with s = s_rel * ||F^T F||_F, then rescales
    so the total mass is M; the scale factor is the Euler-Lagrange constant E.
    """
    system = _RadiusSystem(params, config, ops)
    meas, _, _ = system.measure_at(R)
    return meas


def evaluate_measure(measure: Measure, r_phys) -> float | np.ndarray:
    """Density at physical radius r in [0, R]."""
    r = np.asarray(r_phys, dtype=float)
    if np.any(r < 0) or np.any(r > measure.R * (1 + 1e-12)):
        raise ValueError(f"radius outside [0, {measure.R}]")
    return evaluate_expansion(measure.rho, np.minimum(r / measure.R, 1.0))


def measure_min_ratio(measure: Measure, config: SolverConfig | None = None) -> float:
    """min/max density ratio of a measure on the interior cosine grid."""
    G = (config or SolverConfig()).eval_grid
    rr = np.sin(np.pi * np.arange(G) / (2.0 * G))
    dens = evaluate_expansion(measure.rho, rr)
    peak = np.abs(dens).max()
    return float(dens.min() / peak) if peak > 0 else -math.inf


def energy_scan(
    params: ProblemParams, config: SolverConfig, ops: tuple[PotentialOperator, PotentialOperator]
) -> SolveReport:
    """E(R) and feasibility over the radius grid.

    A cell is feasible when the normalized density stays above
    -positivity_tol times its peak on the evaluation grid.  The report's
    chosen_R is the feasible cell of least energy whose energy is locally
    minimal within its feasible run (ties toward smaller R).
    """
    system = _RadiusSystem(params, config, ops)
    lo, hi = config.r_bracket
    radii = np.linspace(lo, hi, config.grid_points)
    report = SolveReport()
    ratios = []
    for R in radii:
        try:
            meas, ratio, _ = system.measure_at(float(R))
            E = meas.E
        except (SingularSystemError, MassNormalizationError):
            E, ratio = math.nan, -math.inf
        feasible = ratio >= -config.positivity_tol
        report.energy_trace.append((float(R), E, bool(feasible)))
        ratios.append(ratio)
    report.iterations = system.solve_count
    # feasible local minimum on the grid
    best = None
    trace = report.energy_trace
    for i, (R, E, ok) in enumerate(trace):
        if not ok or math.isnan(E):
            continue
        left = trace[i - 1][1] if i > 0 and trace[i - 1][2] else math.inf
        right = trace[i + 1][1] if i + 1 < len(trace) and trace[i + 1][2] else math.inf
        if E <= left and E <= right:
            if best is None or E < best[1] - 0.0:
                best = (R, E)
    if best is not None:
        report.chosen_R = best[0]
        report.feasible = True
    report.min_density_ratio = max(r for r in ratios) if ratios else -math.inf
    report._ratios = ratios  # internal: reused by minimize_radius
    report._radii = radii
    return report


def _stationary_candidates(system: _RadiusSystem, lo: float, hi: float, r_tol: float) -> list[tuple[float, str]]:
    """Stationary radii of E inside [lo, hi], tagged by their character.

    The sign of E' is opposite to the sign of g = d sigma_0 + R sigma_0', so
    a +/- crossing of g is a local minimum of E ("min-root"), a -/+ crossing
    a local maximum ("max-root").  If g never crosses zero, the degenerate
    shelf case (a double root of g, E monotone with a flat inflection) is
    resolved through the root of the slope of g and tagged by the
    surrounding sign of g ("shelf-desc" for E decreasing through it).
    """
    fine = np.linspace(lo, hi, 96)
    gvals = np.array([system.stationarity(float(R)) for R in fine])
    out: list[tuple[float, str]] = []
    for i in range(len(fine) - 1):
        if np.isfinite(gvals[i]) and np.isfinite(gvals[i + 1]) and gvals[i] * gvals[i + 1] < 0:
            root = brentq(system.stationarity, fine[i], fine[i + 1], xtol=r_tol, rtol=8.9e-16)
            out.append((float(root), "min-root" if gvals[i] > 0 else "max-root"))
    if out:
        return out
    j = int(np.argmin(np.abs(gvals)))
    wlo = float(fine[max(0, j - 2)])
    whi = float(fine[min(len(fine) - 1, j + 2)])
    if system.stationarity_slope(wlo) * system.stationarity_slope(whi) < 0:
        root = brentq(system.stationarity_slope, wlo, whi, xtol=r_tol, rtol=8.9e-16)
        side = gvals[min(j + 2, len(gvals) - 1)] + gvals[max(j - 2, 0)]
        out.append((float(root), "shelf-desc" if side > 0 else "shelf-asc"))
    return out


def minimize_radius(
    params: ProblemParams, config: SolverConfig, ops: tuple[PotentialOperator, PotentialOperator]
) -> tuple[Measure, SolveReport]:
    """Optimal support radius and measure.

    The coarse grid locates the window where the density collapses (the
    positivity cliff; energies beyond it are lower but belong to signed
    measures).  Stationary radii of E inside that window are found from the
    analytically differentiated regularized solution, and the one that is a
    local minimum of E over admissible radii is kept.  If the winning
    measure still violates the positivity tolerance the problem is in the
    gap regime and NoFeasibleMinimumError is raised.
    """
    report = energy_scan(params, config, ops)
    system = _RadiusSystem(params, config, ops)
    radii, ratios = report._radii, report._ratios
    crash = None
    for i in range(1, len(radii)):
        if ratios[i] < _CRASH_RATIO and ratios[i - 1] >= _CRASH_RATIO:
            crash = i
            break
    if crash is not None:
        anchor = crash
    elif report.chosen_R is not None:
        anchor = int(np.argmin(np.abs(radii - report.chosen_R)))
    else:
        anchor = int(np.argmax(ratios))
    margin = 12
    accepted: list[tuple[float, float, str, float]] = []
    for attempt in range(3):
        lo = float(radii[max(0, anchor - margin)])
        hi = float(radii[min(len(radii) - 1, anchor + 2)])
        for R_hat, how in _stationary_candidates(system, lo, hi, config.r_tol):
            if how == "max-root" or how == "shelf-asc":
                continue
            try:
                meas, ratio, _ = system.measure_at(R_hat)
            except (SingularSystemError, MassNormalizationError):
                continue
            if ratio < -config.positivity_tol:
                continue
            if how == "shelf-desc":
                # E decreases through the shelf; it is a constrained minimum
                # only if positivity collapses immediately beyond it.
                try:
                    _, ratio_hi, _ = system.measure_at(R_hat * (1 + 1e-3))
                except (SingularSystemError, MassNormalizationError):
                    ratio_hi = -math.inf
                if ratio_hi >= -config.positivity_tol:
                    continue
            accepted.append((meas.E, R_hat, how, ratio))
        if accepted:
            break
        margin *= 3
    if not accepted:
        best_ratio = max(ratios) if len(ratios) else -math.inf
        raise NoFeasibleMinimumError(
            f"no admissible single-ball measure found on bracket {config.r_bracket} "
            f"(best min/max density ratio {best_ratio:.3e}); gap regime or bracket too narrow"
        )
    accepted.sort(key=lambda t: (t[0], t[1]))
    E_best, R_hat, how, ratio = accepted[0]
    meas, ratio, resid = system.measure_at(R_hat)
    report.chosen_R = R_hat
    report.refinement = how
    report.iterations += system.solve_count
    report.residual_norm = resid
    report.min_density_ratio = ratio
    coeffs = np.abs(meas.rho.coeffs)
    tail = coeffs[3 * len(coeffs) // 4 :]
    report.coeff_tail_ratio = float(tail.max() / coeffs.max()) if coeffs.max() > 0 else math.nan
    report.feasible = True
    return meas, report


@dataclass(frozen=True)
class GapCell:
    alpha: float
    beta: float
    feasible: bool
    reason: str = ""


def gap_scan(
    alpha_range: tuple[float, float],
    beta_range: tuple[float, float],
    step: float,
    d: int,
    config: SolverConfig,
) -> list[GapCell]:
    """Feasibility of the single-ball ansatz over an (alpha, beta) grid.

    Each cell runs the full pipeline; cells whose parameters violate the
    model ordering, or whose minimizing measure goes negative, are recorded
    infeasible with a reason.
    """
    cells: list[GapCell] = []
    alphas = np.arange(alpha_range[0], alpha_range[1] + step / 2, step)
    betas = np.arange(beta_range[0], beta_range[1] + step / 2, step)
    for alpha in alphas:
        for beta in betas:
            try:
                params = ProblemParams(alpha=float(alpha), beta=float(beta), d=d)
            except ValueError as exc:
                cells.append(GapCell(float(alpha), float(beta), False, f"invalid: {exc}"))
                continue
            try:
                ops = build_operator_pair(params, config)
                minimize_radius(params, config, ops)
                cells.append(GapCell(float(alpha), float(beta), True))
            except NoFeasibleMinimumError:
                cells.append(GapCell(float(alpha), float(beta), False, "negative density"))
            except Exception as exc:  # pragma: no cover - per-cell robustness
                cells.append(GapCell(float(alpha), float(beta), False, f"error: {exc}"))
    return cells
