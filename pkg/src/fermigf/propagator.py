"""Strang-split spectral propagator for iħ∂tψ = [-ħ²/2m ∂qq + V(q)]ψ.

Used as an independent check on the closed-form solutions and to evolve
states (superpositions) that have no closed form in this package.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import SystemSpec
from .errors import AliasingWarning
from .state import Grid, PhysicalConstants, WaveFunction

log = logging.getLogger(__name__)

TAIL_MASS_LIMIT = 1e-8


@dataclass(frozen=True)
class PropagationPlan:
    system: SystemSpec
    dt: float
    n_steps: int

    def __post_init__(self):
        if self.dt == 0:
            raise ValueError("dt must be non-zero")
        if self.n_steps < 0:
            raise ValueError("n_steps must be >= 0")

    def recommended_step(self, grid: Grid, constants: PhysicalConstants) -> float:
        return 0.01 * constants.mass * grid.dq**2 / constants.hbar

    def exceeds_recommended_step(self, grid: Grid, constants: PhysicalConstants) -> bool:
        return abs(self.dt) > self.recommended_step(grid, constants)


def momentum_tail_mass(psi: WaveFunction) -> float:
    """Probability carried by |k| beyond half the Nyquist wavenumber."""
    k = psi.grid.wavenumbers
    _, w = psi.momentum_density()
    return float(w[np.abs(k) > 0.5 * np.abs(k).max()].sum())


def _warn_aliasing(psi: WaveFunction, where: str) -> None:
    tail = momentum_tail_mass(psi)
    if tail > TAIL_MASS_LIMIT:
        warnings.warn(
            f"{where}: momentum tail mass {tail:.3g} exceeds {TAIL_MASS_LIMIT:g}; "
            "the grid under-resolves this state",
            AliasingWarning,
            stacklevel=3,
        )


def propagate(psi0: WaveFunction, plan: PropagationPlan) -> WaveFunction:
    """Apply ``plan.n_steps`` Strang steps exp(-iVdt/2ħ) exp(-iTdt/ħ) exp(-iVdt/2ħ)."""
    if plan.n_steps == 0:
        return psi0
    grid, const = psi0.grid, psi0.constants
    if plan.exceeds_recommended_step(grid, const):
        log.info("dt=%g is above the recommended %g", plan.dt,
                 plan.recommended_step(grid, const))
    _warn_aliasing(psi0, "initial state")

    hbar, m, dt = const.hbar, const.mass, plan.dt
    v = plan.system.potential(grid.q, const)
    half_v = np.exp(-0.5j * v * dt / hbar)
    full_v = half_v * half_v
    kinetic = np.exp(-0.5j * hbar * grid.wavenumbers**2 * dt / m)

    psi = psi0.amplitudes * half_v
    for step in range(plan.n_steps):
        psi = np.fft.ifft(kinetic * np.fft.fft(psi))
        psi *= half_v if step == plan.n_steps - 1 else full_v

    out = psi0.with_amplitudes(psi)
    _warn_aliasing(out, "propagated state")
    return out.check_in_box()


def propagate_to_times(psi0: WaveFunction, system: SystemSpec, times, max_dt: float,
                       t0: float = 0.0) -> list[WaveFunction]:
    """States at each of ``times`` starting from ``psi0`` at ``t0``.

    Later times are reached by chaining forward from t0 and earlier ones by
    chaining backward with a negated step, so each result is independent of
    how the time list is ordered.
    """
    times = [float(t) for t in times]
    out: dict[float, WaveFunction] = {}
    for direction in (1.0, -1.0):
        targets = sorted({t for t in times if (t - t0) * direction >= 0},
                         key=lambda t: direction * (t - t0))
        psi, now = psi0, t0
        for t in targets:
            span = t - now
            if span != 0:
                n = max(1, math.ceil(abs(span) / max_dt))
                psi = propagate(psi, PropagationPlan(system, span / n, n))
                now = t
            out[t] = psi
    return [out[t] for t in times]


def energy(psi: WaveFunction, system: SystemSpec) -> float:
    """⟨H⟩ with the kinetic part evaluated in momentum space."""
    hbar, m = psi.constants.hbar, psi.constants.mass
    k = psi.grid.wavenumbers
    _, w = psi.momentum_density()
    dens = np.abs(psi.amplitudes) ** 2
    dens = dens / (dens.sum() * psi.grid.dq)
    kin = float(np.sum(hbar**2 * k**2 / (2.0 * m) * w))
    pot = float(np.sum(system.potential(psi.q, psi.constants) * dens) * psi.grid.dq)
    return kin + pot
