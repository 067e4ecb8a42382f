"""Independent slow oracles: direct potential quadrature and particle flow.

The quadrature oracle evaluates power-law potentials of weighted radial
basis elements by reducing the ball integral to a radial-angular form and
integrating with composite Gauss panels.  Endpoint algebraic factors are
absorbed into matched Gauss-Jacobi weights and the kernel kink at the
evaluation radius is resolved by geometrically graded panels, keeping the
oracle trustworthy to roughly 1e-9 absolute for kernel powers with
beta + d >= 0.5 or so.  Nothing here shares code with the operator
recurrences beyond basis evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .jacobi import BasisSpec, eval_radial, gauss_jacobi_rule
from .solver import Measure, ProblemParams

__all__ = [
    "QuadratureToleranceError",
    "ParticleBlowupError",
    "ParticleConfig",
    "ParticleState",
    "potential_quadrature",
    "combined_potential",
    "particle_simulate",
    "radial_histogram",
]

_GRADE_RATIO = 0.5
_GRADE_LEVELS = 60


class QuadratureToleranceError(ArithmeticError):
    """Two-resolution quadrature estimates disagree beyond tolerance."""


class ParticleBlowupError(RuntimeError):
    """Particle positions escaped the sanity radius."""


@lru_cache(maxsize=32)
def _leg_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _graded_edges(lo: float, hi: float, toward_lo: bool, levels: int = _GRADE_LEVELS) -> np.ndarray:
    """Panel edges of [lo, hi] geometrically refined toward one endpoint."""
    length = hi - lo
    offsets = length * _GRADE_RATIO ** np.arange(levels, -1, -1, dtype=float)
    edges = np.concatenate(([0.0], offsets))
    if toward_lo:
        return lo + edges
    return hi - edges[::-1]


def _panel_nodes(edges: np.ndarray, n_gauss: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = _leg_nodes(n_gauss)
    los, his = edges[:-1], edges[1:]
    half = (his - los) / 2.0
    mid = (his + los) / 2.0
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _angular_rule(d: int, n_gauss: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for int_0^pi f(theta) sin^(d-2)(theta) dtheta, graded at 0."""
    edges = np.concatenate(
        [_graded_edges(0.0, math.pi / 2, True, levels=_GRADE_LEVELS + 20), [math.pi]]
    )
    theta, w = _panel_nodes(edges, n_gauss)
    return theta, w * np.sin(theta) ** (d - 2)


def _sphere_area(k: int) -> float:
    """Surface area of the unit sphere S^k in R^(k+1)."""
    return 2 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)


def _potential_once(beta: float, basis: BasisSpec, n: int, x_r: float, n_gauss: int) -> float:
    a, d = basis.a, basis.d
    x = float(x_r)

    def weighted_elem(s: np.ndarray) -> np.ndarray:
        return (1.0 - s * s) ** a * eval_radial(basis.unweighted(), n, s)

    total = 0.0
    s_hi = (1.0 + max(x, 0.35)) / 2.0

    if d == 1:
        # Kernel |x-s|^beta + (x+s)^beta; the |x-s|^beta factor is absorbed
        # into a Jacobi weight on the panels flanking s = x.
        def smooth_part(s):
            return weighted_elem(s) * (x + s) ** beta

        segments = []
        if x > 0:
            segments.append((0.0, x, "right"))
        segments.append((x, s_hi, "left"))
        for lo, hi, side in segments:
            if hi - lo < 1e-300:
                continue
            rule = gauss_jacobi_rule(beta if side == "right" else 0.0, beta if side == "left" else 0.0, n_gauss)
            half = (hi - lo) / 2.0
            s = lo + half * (1.0 + rule.nodes)
            scale = half ** (beta + 1)
            total += scale * float(np.dot(rule.weights, weighted_elem(s)))
            nodes, w = _panel_nodes(_graded_edges(lo, hi, side == "left"), n_gauss)
            total += float(np.dot(w, smooth_part(nodes)))
        # tail [s_hi, 1]: absorb (1-s)^a
        rule = gauss_jacobi_rule(a, 0.0, n_gauss)
        half = (1.0 - s_hi) / 2.0
        s = s_hi + half * (1.0 + rule.nodes)
        fs = (1.0 + s) ** a * eval_radial(basis.unweighted(), n, s) * (np.abs(x - s) ** beta + (x + s) ** beta)
        total += half ** (a + 1) * float(np.dot(rule.weights, fs))
        return total

    theta, w_theta = _angular_rule(d, max(12, n_gauss - 8))
    sin_half_sq = np.sin(theta / 2.0) ** 2
    area = _sphere_area(d - 2)

    def inner(s: np.ndarray) -> np.ndarray:
        # |x - y|^2 at angle theta, in the cancellation-free form
        ker = ((x - s[:, None]) ** 2 + 4.0 * x * s[:, None] * sin_half_sq[None, :]) ** (beta / 2)
        return area * (ker @ w_theta)

    def integrand(s: np.ndarray) -> np.ndarray:
        return s ** (d - 1) * weighted_elem(s) * inner(s)

    if x > 0:
        nodes, w = _panel_nodes(_graded_edges(0.0, x, False), n_gauss)
        total += float(np.dot(w, integrand(nodes)))
    nodes, w = _panel_nodes(_graded_edges(max(x, 0.0), s_hi, True), n_gauss)
    total += float(np.dot(w, integrand(nodes)))
    # tail [s_hi, 1]: absorb the (1-s)^a factor of the basis weight
    rule = gauss_jacobi_rule(a, 0.0, n_gauss)
    half = (1.0 - s_hi) / 2.0
    s = s_hi + half * (1.0 + rule.nodes)
    fs = (1.0 + s) ** a * s ** (d - 1) * eval_radial(basis.unweighted(), n, s) * inner(s)
    total += half ** (a + 1) * float(np.dot(rule.weights, fs))
    return total


def potential_quadrature(beta: float, basis: BasisSpec, n: int, x_r: float, tol: float = 1e-8) -> float:
    """Power-law potential of the n-th weighted basis element at radius x_r.

    Evaluated at two panel orders; disagreement beyond tol (scaled by the
    result magnitude) raises QuadratureToleranceError.
    """
    if not 0.0 <= x_r < 1.0:
        raise ValueError("evaluation radius must lie in [0, 1)")
    if beta <= -basis.d:
        raise ValueError(f"kernel power beta={beta} must exceed -d={-basis.d}")
    coarse = _potential_once(beta, basis, n, x_r, 20)
    fine = _potential_once(beta, basis, n, x_r, 28)
    if abs(fine - coarse) > tol * max(1.0, abs(fine)):
        raise QuadratureToleranceError(
            f"quadrature not converged: {coarse!r} vs {fine!r} for beta={beta}, n={n}, x_r={x_r}"
        )
    return fine


def combined_potential(measure: Measure, x_r: float, params: ProblemParams) -> float:
    """Attractive-minus-repulsive potential of a measure at physical radius x_r.

    Computed entirely through the quadrature oracle: each coefficient
    contributes its unit-ball potentials for both kernel powers, rescaled to
    the physical radius.
    """
    basis = measure.rho.basis
    R, d = measure.R, params.d
    u = x_r / R
    acc = 0.0
    for n, c in enumerate(measure.rho.coeffs):
        if c == 0.0:
            continue
        pa = potential_quadrature(params.alpha, basis, n, u)
        pb = potential_quadrature(params.beta, basis, n, u)
        acc += c * (R ** (params.alpha + d) / params.alpha * pa - R ** (params.beta + d) / params.beta * pb)
    return acc


@dataclass
class ParticleConfig:
    max_steps: int = 200_000
    stop_speed: float = 1e-8
    dt_init: float = 0.02
    dt_max: float = 0.1
    blowup_radius: float = 1e3


@dataclass
class ParticleState:
    positions: np.ndarray
    step: float
    iterations: int
    mass: float


def _pairwise_velocity(pos: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    diff = pos[:, None, :] - pos[None, :, :]
    dist2 = np.sum(diff * diff, axis=-1)
    np.fill_diagonal(dist2, 1.0)
    mag = dist2 ** ((alpha - 2) / 2) - dist2 ** ((beta - 2) / 2)
    np.fill_diagonal(mag, 0.0)
    return -(mag[:, :, None] * diff).sum(axis=1) / pos.shape[0]


def particle_simulate(params: ProblemParams, n_particles: int, seed: int, config: ParticleConfig | None = None) -> ParticleState:
    """First-order gradient flow of the pairwise interaction to steady state.

    Particles start uniformly distributed in the unit ball and follow
    dx_i/dt = -(1/N) sum_j (r_ij^(alpha-2) - r_ij^(beta-2)) (x_i - x_j)
    with adaptive explicit steps until the maximum speed drops below the
    stop threshold.  Deterministic for a fixed seed.
    """
    if n_particles < 1:
        raise ValueError("need at least one particle")
    cfg = config or ParticleConfig()
    rng = np.random.Generator(np.random.PCG64(seed))
    d = params.d
    direction = rng.normal(size=(n_particles, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = rng.random(n_particles) ** (1.0 / d)
    pos = direction * radius[:, None]
    dt = cfg.dt_init
    it = 0
    if n_particles == 1:
        return ParticleState(positions=pos, step=dt, iterations=0, mass=params.M)
    for it in range(1, cfg.max_steps + 1):
        vel = _pairwise_velocity(pos, params.alpha, params.beta)
        speed = np.linalg.norm(vel, axis=1).max()
        if speed < cfg.stop_speed:
            break
        diff = pos[:, None, :] - pos[None, :, :]
        dist2 = np.sum(diff * diff, axis=-1)
        np.fill_diagonal(dist2, np.inf)
        min_dist = math.sqrt(dist2.min())
        dt = min(cfg.dt_max, max(1e-6, 0.2 * min_dist / speed))
        trial = pos + dt * vel
        # reject steps that collapse a pair
        for _ in range(40):
            tdiff = trial[:, None, :] - trial[None, :, :]
            tdist2 = np.sum(tdiff * tdiff, axis=-1)
            np.fill_diagonal(tdist2, np.inf)
            if tdist2.min() >= 0.25 * min_dist * min_dist:
                break
            dt *= 0.5
            trial = pos + dt * vel
        pos = trial
        if np.linalg.norm(pos, axis=1).max() > cfg.blowup_radius:
            raise ParticleBlowupError(f"positions exceeded radius {cfg.blowup_radius} at step {it}")
    return ParticleState(positions=pos, step=dt, iterations=it, mass=params.M)


def radial_histogram(state: ParticleState, bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Shell-volume-normalized radial density estimate.

    Each particle carries mass M/N; the estimate integrates back to M.
    """
    radii = np.linalg.norm(state.positions, axis=1)
    d = state.positions.shape[1]
    r_max = radii.max() * (1 + 1e-12)
    edges = np.linspace(0.0, r_max, bins + 1)
    counts, _ = np.histogram(radii, bins=edges)
    ball = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
    shell = ball * (edges[1:] ** d - edges[:-1] ** d)
    centers = (edges[1:] + edges[:-1]) / 2
    dens = counts * (state.mass / state.positions.shape[0]) / shell
    return centers, dens
