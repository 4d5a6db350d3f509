"""Prism-microscope measurement chain and Monte Carlo state reconstruction.

Compton kinematics (non-relativistic particle, photon probe)::

    h ν0 + ½ m c² β0²        = h ν + ½ m c² β²
    h ν0 - m β0 c²           = h ν cos θ + m β c² cos φ
    h ν sin θ - m β c² sin φ = 0

With φ fixed, β follows from the energy equation and θ from the two
momentum equations, leaving a single equation F(ν, β0) = 0.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .errors import NonPositiveDefiniteError, NoRootError, RegimeError
from .fermi import EllipseCoeffs, ellipse_area
from .state import Moments, PhysicalConstants

log = logging.getLogger(__name__)

BETA_LIMIT = 0.05
EXPERIMENTS = ("position", "momentum", "prism")


@dataclass(frozen=True)
class ComptonConfig:
    nu0: float = 0.02
    phi: float = 0.2
    mass: float = 1.0
    speed_of_light: float = 1.0
    planck_h: float = 1.0

    def __post_init__(self):
        if not self.nu0 > 0:
            raise ValueError("nu0 must be positive")
        if not 0.0 < self.phi < np.pi:
            raise ValueError("phi must lie in (0, pi)")
        if not (self.mass > 0 and self.speed_of_light > 0 and self.planck_h > 0):
            raise ValueError("mass, speed_of_light and planck_h must be positive")

    @property
    def rest_energy(self) -> float:
        return self.mass * self.speed_of_light**2


class ComptonSolution(NamedTuple):
    nu: float
    beta: float
    theta: float


class LinearizedCompton(NamedTuple):
    A: float
    B: float
    max_residual: float


@dataclass(frozen=True)
class PrismConstants:
    """Screen map ξ = q + C p + D (qp + pq)."""

    c_lin: float = 0.5
    d_quad: float = 5.0

    def __post_init__(self):
        if not (np.isfinite(self.c_lin) and np.isfinite(self.d_quad)):
            raise ValueError("prism constants must be finite")


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    n: int
    estimates: Moments
    standard_errors: Moments
    uncertainty_excess: float
    violates_uncertainty: bool
    samples: dict[str, np.ndarray] = field(default_factory=dict, repr=False)


def _check_regime(beta0: float) -> None:
    if not abs(beta0) < BETA_LIMIT:
        raise RegimeError(f"|beta0| = {abs(beta0):g} is outside the non-relativistic regime (< {BETA_LIMIT})")


def _kinematics(config: ComptonConfig, beta0: float):
    """Return (ν_max, κ, residual function of u) with β = κu and ν = ν_max - u²."""
    h, mc2 = config.planck_h, config.rest_energy
    nu_max = config.nu0 + mc2 * beta0**2 / (2.0 * h)
    kappa = np.sqrt(2.0 * h / mc2)
    P = h * config.nu0 - mc2 * beta0
    cphi, sphi = np.cos(config.phi), np.sin(config.phi)

    def F(u):
        nu = nu_max - u * u
        beta = kappa * u
        return ((h * nu) ** 2 - (P - mc2 * beta * cphi) ** 2 - (mc2 * beta * sphi) ** 2) / (h * config.nu0) ** 2

    return nu_max, kappa, F


def _all_roots(config: ComptonConfig, beta0: float, n_scan: int = 4096) -> list[float]:
    """All frequencies in (0, ν_max] solving F(ν, β0) = 0, by scan and bracketed bisection."""
    nu_max, _, F = _kinematics(config, beta0)
    nu_cap = min(nu_max, config.nu0 * (1.0 + 10.0 * abs(beta0)) + 1e-12 * config.nu0)
    u_lo = np.sqrt(max(nu_max - nu_cap, 0.0))
    u = np.linspace(u_lo, np.sqrt(nu_max), n_scan)
    f = F(u)
    roots = []
    for i in range(n_scan - 1):
        if f[i] == 0.0:
            roots.append(u[i])
        elif f[i] * f[i + 1] < 0.0:
            roots.append(brentq(F, u[i], u[i + 1], xtol=1e-300, rtol=4 * np.finfo(float).eps,
                                maxiter=500))
    if f[-1] == 0.0:
        roots.append(u[-1])
    return sorted(nu_max - r * r for r in roots if nu_max - r * r > 0.0)


def _solution(config: ComptonConfig, beta0: float, nu: float) -> ComptonSolution:
    h, mc2 = config.planck_h, config.rest_energy
    beta = np.sqrt(max(beta0**2 + 2.0 * h * (config.nu0 - nu) / mc2, 0.0))
    P = h * config.nu0 - mc2 * beta0
    theta = np.arctan2(mc2 * beta * np.sin(config.phi), P - mc2 * beta * np.cos(config.phi))
    return ComptonSolution(float(nu), float(beta), float(theta))


def _scattered_root_at_rest(config: ComptonConfig) -> float:
    roots = [r for r in _all_roots(config, 0.0) if abs(r - config.nu0) > 1e-12 * config.nu0]
    if not roots:
        raise NoRootError(
            f"no scattered solution for a particle at rest with phi = {config.phi:g} "
            "(the recoil must point forward, phi < pi/2)"
        )
    return max(roots)


def compton_solve(config: ComptonConfig, beta0: float) -> ComptonSolution:
    """Scattered-photon frequency, particle speed and photon angle for fixed φ.

    For β0 = 0 the no-interaction root (ν = ν0, β = 0) is discarded; for
    other β0 the root continuously connected to the β0 = 0 scattered root is
    returned.
    """
    _check_regime(beta0)
    reference = _scattered_root_at_rest(config)
    if beta0 == 0.0:
        return _solution(config, 0.0, reference)
    roots = _all_roots(config, beta0)
    if not roots:
        raise NoRootError(f"F(nu, beta0={beta0:g}) has no root in the bracket")
    nu = min(roots, key=lambda r: abs(r - reference))
    return _solution(config, beta0, nu)


def compton_residuals(config: ComptonConfig, beta0: float, sol: ComptonSolution) -> np.ndarray:
    """Residuals of the three conservation equations, relative to h ν0."""
    h, mc2 = config.planck_h, config.rest_energy
    nu, beta, theta = sol
    scale = h * config.nu0
    return np.array([
        h * config.nu0 + 0.5 * mc2 * beta0**2 - h * nu - 0.5 * mc2 * beta**2,
        h * config.nu0 - mc2 * beta0 - h * nu * np.cos(theta) - mc2 * beta * np.cos(config.phi),
        h * nu * np.sin(theta) - mc2 * beta * np.sin(config.phi),
    ]) / scale


def compton_linearize(config: ComptonConfig, beta0_mean: float,
                      beta0_halfwidth: float) -> LinearizedCompton:
    """ν ≈ A + B (β0 - ⟨β0⟩) around ``beta0_mean``.

    B is a central difference with step halfwidth/10; ``max_residual`` is the
    largest deviation of the exact ν from the line over ±halfwidth.
    """
    if not beta0_halfwidth > 0:
        raise ValueError("beta0_halfwidth must be positive")
    for b in (beta0_mean - beta0_halfwidth, beta0_mean + beta0_halfwidth):
        _check_regime(b)
    step = beta0_halfwidth / 10.0
    A = compton_solve(config, beta0_mean).nu
    B = (compton_solve(config, beta0_mean + step).nu
         - compton_solve(config, beta0_mean - step).nu) / (2.0 * step)
    scan = np.linspace(beta0_mean - beta0_halfwidth, beta0_mean + beta0_halfwidth, 21)
    resid = max(abs(compton_solve(config, b).nu - (A + B * (b - beta0_mean))) for b in scan)
    return LinearizedCompton(float(A), float(B), float(resid))


def screen_position(q, p, prism: PrismConstants):
    """Screen coordinate ξ = q + C p + 2 D q p for commuting sample values."""
    return q + prism.c_lin * p + 2.0 * prism.d_quad * q * p


def _covariance(m: Moments) -> np.ndarray:
    return np.array([[m.var_q, m.correlation_k], [m.correlation_k, m.var_p]])


def sample_gaussian_state(m: Moments, n: int, seed: int | np.random.Generator) -> np.ndarray:
    """n draws of (q, p) from the bivariate normal with the state's moments, shape (n, 2)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    try:
        chol = np.linalg.cholesky(_covariance(m))
    except np.linalg.LinAlgError as exc:
        raise NonPositiveDefiniteError(f"covariance of {m} is not positive definite") from exc
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    z = rng.standard_normal((n, 2))
    return z @ chol.T + np.array([m.mean_q, m.mean_p])


def experiment_seeds(seed: int, count: int = 3) -> list[np.random.Generator]:
    """Independent generators for the three experiments, from one user seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def reconstruct_ellipse_experiment(
    true_state: Moments,
    prism: PrismConstants,
    n: int,
    seed: int,
    constants: PhysicalConstants | None = None,
    keep_samples: bool = False,
) -> tuple[EllipseCoeffs, MeasurementRecord]:
    """Estimate the g_F = 0 ellipse from three independent simulated experiments.

    (i) position records give ⟨q⟩ and Δq², (ii) momentum records give ⟨p⟩
    and Δp², (iii) prism screen records ξ give K through
    ⟨ξ⟩ = ⟨q⟩ + C⟨p⟩ + 2D(K + ⟨q⟩⟨p⟩).

    Finite samples of a pure state fall below the uncertainty bound about
    half the time, so a violation is recorded on the record rather than raised.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if prism.d_quad == 0:
        raise ValueError("d_quad = 0 gives a linear prism, which cannot see K")
    constants = constants or PhysicalConstants()
    hbar = constants.hbar
    rng_q, rng_p, rng_x = experiment_seeds(seed)

    q = sample_gaussian_state(true_state, n, rng_q)[:, 0]
    p = sample_gaussian_state(true_state, n, rng_p)[:, 1]
    both = sample_gaussian_state(true_state, n, rng_x)
    xi = screen_position(both[:, 0], both[:, 1], prism)

    mq, vq = float(q.mean()), float(q.var(ddof=1))
    mp, vp = float(p.mean()), float(p.var(ddof=1))
    mx, vx = float(xi.mean()), float(xi.var(ddof=1))
    two_d = 2.0 * prism.d_quad
    k_hat = (mx - mq - prism.c_lin * mp) / two_d - mq * mp

    se_k = np.sqrt(vx / (n * two_d**2)
                   + (1.0 / two_d + mp) ** 2 * vq / n
                   + (prism.c_lin / two_d + mq) ** 2 * vp / n)
    estimates = Moments(mq, mp, vq, vp, float(k_hat))
    errors = Moments(
        mean_q=float(np.sqrt(vq / n)),
        mean_p=float(np.sqrt(vp / n)),
        var_q=float(vq * np.sqrt(2.0 / (n - 1))),
        var_p=float(vp * np.sqrt(2.0 / (n - 1))),
        correlation_k=float(se_k),
    )
    excess = estimates.uncertainty_excess(hbar)
    # combined standard error of Δq²Δp² - K² (first order, independent terms)
    se_det = np.sqrt((vp * errors.var_q) ** 2 + (vq * errors.var_p) ** 2
                     + (2.0 * k_hat * se_k) ** 2)
    violates = bool(excess < -3.0 * se_det)
    if excess < 0:
        log.info("estimated moments sit %.3g below the uncertainty bound", -excess)

    h2 = hbar**2
    coeffs = EllipseCoeffs(a=2.0 * vp / h2, b=2.0 * vq / h2, c=-2.0 * k_hat / h2,
                           center_q=mq, center_p=mp)
    ellipse_area(coeffs)  # raises on a degenerate conic
    samples = {"position": q, "momentum": p, "prism": xi} if keep_samples else {}
    record = MeasurementRecord(n, estimates, errors, float(excess), violates, samples)
    return coeffs, record
