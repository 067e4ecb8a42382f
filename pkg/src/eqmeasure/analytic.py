"""Closed-form equilibrium measures for quadratic and quartic attraction.

These serve as ground-truth oracles for the spectral solver.  Both families
have densities of the form (R^2 - r^2)^(1 - (beta+d)/2) times a low-degree
polynomial, which is why the matched weighted basis resolves them with one
or two coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .specfun import GammaPoleError, beta as beta_fn, signed_ln_gamma

__all__ = [
    "AnalyticSolution",
    "AnalyticPoleError",
    "alpha2_solution",
    "alpha4_solution",
    "gap_onset_beta",
]


class AnalyticPoleError(ValueError):
    """Closed-form constants hit a pole for these parameters."""


@dataclass(frozen=True)
class AnalyticSolution:
    """Support radius and radial density r -> rho(r) on [0, R]."""

    R: float
    density: Callable[[np.ndarray], np.ndarray]
    valid: bool
    E: float | None = None


def _signed_gamma(x: float) -> float:
    lg, s = signed_ln_gamma(x)
    return s * math.exp(lg)


def gap_onset_beta(d: int) -> float:
    """Repulsion power above which the quartic-attraction ball density turns
    negative at the origin."""
    return (2 + 2 * d - d * d) / (d + 1)


def alpha2_solution(beta: float, d: int, M: float) -> AnalyticSolution:
    """Equilibrium measure for quadratic attraction.

    R = (pi Gamma(2-beta/2) / (sin(pi(beta+d)/2) Gamma(d/2+1) Gamma(1-(beta+d)/2)))^(1/(2-beta)),
    rho(r) = -M d Gamma(d/2) sin(pi(beta+d)/2) / ((beta+d-2) pi^((d+2)/2)) * (R^2-r^2)^(1-(beta+d)/2).
    """
    if beta >= 2:
        raise AnalyticPoleError("quadratic-attraction closed form requires beta < 2")
    s = math.sin(math.pi * (beta + d) / 2)
    if abs(s) < 1e-13 or abs(beta + d - 2) < 1e-13:
        raise AnalyticPoleError(f"degenerate beta={beta} for d={d}")
    try:
        g1 = _signed_gamma(2 - beta / 2)
        g2 = _signed_gamma(1 - d / 2 - beta / 2)
    except GammaPoleError as exc:
        raise AnalyticPoleError(str(exc)) from exc
    base = math.pi * g1 / (s * math.gamma(d / 2 + 1) * g2)
    if base <= 0:
        return AnalyticSolution(R=math.nan, density=lambda r: np.full_like(np.asarray(r, float), math.nan), valid=False)
    R = base ** (1.0 / (2 - beta))
    c = -M * d * math.gamma(d / 2) * s / ((beta + d - 2) * math.pi ** ((d + 2) / 2))
    expo = 1 - (beta + d) / 2

    def density(r):
        r = np.asarray(r, dtype=float)
        return c * np.power(np.maximum(R * R - r * r, 0.0), expo)

    integrable = expo > -1
    valid = integrable and c >= 0
    return AnalyticSolution(R=R, density=density, valid=valid)


def alpha4_solution(beta: float, d: int, M: float) -> AnalyticSolution:
    """Equilibrium measure for quartic attraction.

    rho(r) = (R^2-r^2)^(1-(beta+d)/2) (A1 R^2 + A2 (R^2-r^2)).  The A2
    constant is proportional to M; the source transcription carries a stray
    mass factor in its denominator that would make the density
    M-independent, contradicting the mass condition, so the corrected
    constant is used here (verified against the mass integral and the
    constant-potential property).
    """
    if beta >= 2:
        raise AnalyticPoleError("quartic-attraction closed form requires beta < 2")
    rad = (2 - beta) * (6 - beta)
    if rad <= 0 or abs(4 - beta) < 1e-13:
        raise AnalyticPoleError(f"degenerate beta={beta}")
    try:
        b1 = beta_fn((beta + d) / 2, 2 - (beta + d) / 2)
        b2 = beta_fn((beta + d) / 2, 3 - (beta + d) / 2)
        gbd = _signed_gamma((beta + d) / 2)
    except GammaPoleError as exc:
        raise AnalyticPoleError(str(exc)) from exc
    if b1 == 0 or b2 == 0 or gbd == 0:
        raise AnalyticPoleError(f"Beta-function pole at beta={beta}, d={d}")
    inner = 1.0 / (4 - beta) + 1.0 / math.sqrt(rad)
    base = d * (d + 2) * math.gamma(d / 2) / (2 * gbd * math.gamma(2 - beta / 2)) * inner
    if base <= 0:
        return AnalyticSolution(R=math.nan, density=lambda r: np.full_like(np.asarray(r, float), math.nan), valid=False)
    R = base ** (-1.0 / (4 - beta))
    pref = math.gamma(d / 2) / math.pi ** (d / 2) * d * (d + 2) * M
    A1 = pref / (2 * b1) * (1.0 / math.sqrt(rad) + 1.0 / (2 - beta))
    A2 = pref / (4 * (beta - 2) * b2)
    expo = 1 - (beta + d) / 2

    def density(r):
        r = np.asarray(r, dtype=float)
        w = np.maximum(R * R - r * r, 0.0)
        return np.power(w, expo) * (A1 * R * R + A2 * w)

    integrable = expo > -1
    valid = integrable and float(density(np.array(0.0))) >= 0
    return AnalyticSolution(R=R, density=density, valid=valid)
