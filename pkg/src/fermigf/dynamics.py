"""Closed-form Gaussian solutions for V = 0, V = -F0 q and V = m ω0² q² / 2.

Everything here is dimensional; pass unit constants to work in the
dimensionless variables q/δ, δp/ħ and τ = ħt/(mδ²).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Union

import numpy as np

from .errors import PacketOutOfBoxError, ZeroForceError
from .fermi import EllipseCoeffs
from .state import (
    SUPPORT_WIDTHS,
    GaussianParams,
    Grid,
    Moments,
    PhysicalConstants,
    WaveFunction,
)


@dataclass(frozen=True)
class SystemSpec:
    kind: Literal["free", "uniform_force", "harmonic"] = "free"
    F0: float = 0.0
    omega0: float = 0.0

    def __post_init__(self):
        if self.kind not in ("free", "uniform_force", "harmonic"):
            raise ValueError(f"unknown system kind {self.kind!r}")
        if self.kind == "harmonic" and not self.omega0 > 0:
            raise ValueError("harmonic system needs omega0 > 0")

    @classmethod
    def free(cls) -> "SystemSpec":
        return cls("free")

    @classmethod
    def uniform_force(cls, F0: float) -> "SystemSpec":
        return cls("uniform_force", F0=F0)

    @classmethod
    def harmonic(cls, omega0: float) -> "SystemSpec":
        return cls("harmonic", omega0=omega0)

    def potential(self, q: np.ndarray, constants: PhysicalConstants) -> np.ndarray:
        if self.kind == "free":
            return np.zeros_like(q)
        if self.kind == "uniform_force":
            return -self.F0 * q
        return 0.5 * constants.mass * self.omega0**2 * q**2


@dataclass(frozen=True)
class HarmonicGaussianParams:
    alpha: float
    Q0: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    def B(self, omega0: float, constants: PhysicalConstants) -> float:
        return (constants.hbar * self.alpha**2 / (constants.mass * omega0)) ** 2

    @classmethod
    def from_B(cls, B: float, omega0: float, constants: PhysicalConstants,
               Q0: float = 0.0, phi: float = 0.0) -> "HarmonicGaussianParams":
        """Parameters with squeezing B = ħ²α⁴/(m²ω0²); B = 1 is a coherent state."""
        if not B > 0:
            raise ValueError("B must be positive")
        alpha = (B * constants.mass**2 * omega0**2 / constants.hbar**2) ** 0.25
        return cls(alpha=alpha, Q0=Q0, phi=phi)


StateParams = Union[GaussianParams, HarmonicGaussianParams]


def _tau(params: GaussianParams, t: float, constants: PhysicalConstants) -> float:
    return constants.hbar * t / (constants.mass * params.delta**2)


def _accelerated_packet(params, F0, t, grid, constants) -> WaveFunction:
    hbar, m = constants.hbar, constants.mass
    q0, p0, d = params.q0, params.p0, params.delta
    tau = _tau(params, t, constants)
    qc = q0 + p0 * t / m + F0 * t**2 / (2.0 * m)
    half = SUPPORT_WIDTHS * d * np.sqrt(1.0 + tau**2)
    if not grid.contains(qc - half, qc + half):
        raise PacketOutOfBoxError(
            f"packet at t={t:g} spans [{qc - half:g}, {qc + half:g}], outside "
            f"[{grid.q_min:g}, {grid.q_max:g}]"
        )
    q = grid.q
    z = 1.0 + 1j * tau
    phase = (p0 * (q - q0) - p0**2 * t / (2.0 * m)
             + F0 * q * t - F0 * p0 * t**2 / (2.0 * m) - F0**2 * t**3 / (6.0 * m))
    amps = (np.sqrt(np.pi) * z * d) ** -0.5 * np.exp(
        -((q - qc) ** 2) / (2.0 * d**2 * z) + 1j * phase / hbar
    )
    return WaveFunction(grid, constants, amps).normalized()


def evolve_free(params: GaussianParams, t: float, grid: Grid | None = None,
                constants: PhysicalConstants | None = None) -> WaveFunction:
    """Freely spread minimum-uncertainty packet at time t (negative t allowed)."""
    return _accelerated_packet(params, 0.0, t, grid or Grid(), constants or PhysicalConstants())


def evolve_uniform_force(params: GaussianParams, F0: float, t: float, grid: Grid | None = None,
                         constants: PhysicalConstants | None = None) -> WaveFunction:
    """Packet under V = -F0 q, including the cubic-in-t phase."""
    return _accelerated_packet(params, F0, t, grid or Grid(), constants or PhysicalConstants())


def _harmonic_parts(params: HarmonicGaussianParams, omega0: float, t: float,
                    constants: PhysicalConstants):
    hbar, m = constants.hbar, constants.mass
    B = params.B(omega0, constants)
    angle = omega0 * t + params.phi
    C, S = np.cos(angle), np.sin(angle)
    den = hbar * (C**2 + B * S**2)
    a_r = m * omega0 * np.sqrt(B) / den
    a_i = m * omega0 * (1.0 - B) * C * S / den
    return B, angle, C, S, a_r, a_i


def harmonic_state(params: HarmonicGaussianParams, omega0: float, t: float,
                   grid: Grid | None = None,
                   constants: PhysicalConstants | None = None) -> WaveFunction:
    """Gaussian solution N(t) exp(-A(t)(q - Q(t))²/2 + iχ(q, t)) of the oscillator.

    The square root in N(t) follows C + i√B S continuously in time, so the
    state picks up the zero-point phase instead of jumping sign at ω0t + φ = π.
    """
    grid = grid or Grid()
    constants = constants or PhysicalConstants()
    hbar, m = constants.hbar, constants.mass
    B, angle, C, S, a_r, a_i = _harmonic_parts(params, omega0, t, constants)

    widest = np.sqrt(hbar * max(1.0, B) / (m * omega0 * np.sqrt(B)))
    reach = abs(params.Q0) + SUPPORT_WIDTHS * widest
    if not grid.contains(-reach, reach):
        raise PacketOutOfBoxError(
            f"oscillating packet reaches |q| = {reach:g}, outside [{grid.q_min:g}, {grid.q_max:g}]"
        )

    z = C + 1j * np.sqrt(B) * S
    arg = angle + np.angle(z * np.exp(-1j * angle))
    sqrt_z = np.sqrt(abs(z)) * np.exp(0.5j * arg)
    norm = np.sqrt(params.alpha / np.sqrt(np.pi)) / sqrt_z

    q = grid.q
    Q = params.Q0 * C
    chi = (-omega0 * m / hbar * params.Q0 * q * S
           + m * omega0 / (2.0 * hbar) * params.Q0**2 * C * S)
    amps = norm * np.exp(-0.5 * (a_r + 1j * a_i) * (q - Q) ** 2 + 1j * chi)
    return WaveFunction(grid, constants, amps).normalized()


def closed_form_state(system: SystemSpec, params: StateParams, t: float,
                      grid: Grid, constants: PhysicalConstants) -> WaveFunction:
    if system.kind == "harmonic":
        if not isinstance(params, HarmonicGaussianParams):
            raise TypeError("harmonic system needs HarmonicGaussianParams")
        return harmonic_state(params, system.omega0, t, grid, constants)
    if not isinstance(params, GaussianParams):
        raise TypeError(f"{system.kind} system needs GaussianParams")
    return _accelerated_packet(params, system.F0 if system.kind == "uniform_force" else 0.0,
                               t, grid, constants)


def analytic_ellipse(system: SystemSpec, params: StateParams, t: float,
                     constants: PhysicalConstants | None = None) -> EllipseCoeffs:
    constants = constants or PhysicalConstants()
    hbar, m = constants.hbar, constants.mass
    if system.kind == "harmonic":
        _, _, C, S, a_r, a_i = _harmonic_parts(params, system.omega0, t, constants)
        return EllipseCoeffs(
            a=(a_r**2 + a_i**2) / a_r,
            b=1.0 / (hbar**2 * a_r),
            c=a_i / (hbar * a_r),
            center_q=params.Q0 * C,
            center_p=-m * system.omega0 * params.Q0 * S,
        )
    F0 = system.F0 if system.kind == "uniform_force" else 0.0
    d = params.delta
    tau = _tau(params, t, constants)
    return EllipseCoeffs(
        a=1.0 / d**2,
        b=d**2 / hbar**2 * (1.0 + tau**2),
        c=-t / (m * d**2),
        center_q=params.q0 + params.p0 * t / m + F0 * t**2 / (2.0 * m),
        center_p=params.p0 + F0 * t,
    )


def analytic_moments(system: SystemSpec, params: StateParams, t: float,
                     constants: PhysicalConstants | None = None) -> Moments:
    constants = constants or PhysicalConstants()
    hbar, m = constants.hbar, constants.mass
    ell = analytic_ellipse(system, params, t, constants)
    if system.kind == "harmonic":
        B, _, C, S, a_r, a_i = _harmonic_parts(params, system.omega0, t, constants)
        return Moments(
            mean_q=ell.center_q,
            mean_p=ell.center_p,
            var_q=1.0 / (2.0 * a_r),
            var_p=hbar**2 * (a_r**2 + a_i**2) / (2.0 * a_r),
            correlation_k=-hbar * (1.0 - B) * C * S / (2.0 * np.sqrt(B)),
        )
    d = params.delta
    tau = _tau(params, t, constants)
    return Moments(
        mean_q=ell.center_q,
        mean_p=ell.center_p,
        var_q=0.5 * d**2 * (1.0 + tau**2),
        var_p=hbar**2 / (2.0 * d**2),
        correlation_k=hbar**2 * t / (2.0 * m * d**2),
    )


def center_parabola(params: GaussianParams, F0: float,
                    constants: PhysicalConstants | None,
                    p_samples) -> np.ndarray:
    """Points (q, p) on the parabola traced by the ellipse centre under force F0."""
    if F0 == 0:
        raise ZeroForceError("the centre only moves on a parabola for F0 != 0")
    m = (constants or PhysicalConstants()).mass
    p = np.asarray(p_samples, dtype=float)
    dp = p - params.p0
    q = params.q0 + params.p0 * dp / (m * F0) + dp**2 / (2.0 * m * F0)
    return np.column_stack([q, p])
