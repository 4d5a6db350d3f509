"""Wave functions on a uniform periodic position grid.

A :class:`WaveFunction` carries complex amplitudes sampled at
``q_i = q_min + i * dq`` (``i = 0 .. n_points - 1``) together with the
physical constants that the rest of the package needs (ħ and m).  The grid
is treated as periodic so that derivatives and momentum-space quadrature can
be done with FFTs; packets are required to sit well inside the box.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import GridMismatchError, PacketOutOfBoxError, ZeroVectorError

EDGE_FRACTION = 1e-8
SUPPORT_WIDTHS = 8.0


@dataclass(frozen=True)
class Grid:
    q_min: float = -20.0
    q_max: float = 20.0
    n_points: int = 2048

    def __post_init__(self):
        n = self.n_points
        if n < 16 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 16, got {n}")
        if not self.q_max > self.q_min:
            raise ValueError("q_max must exceed q_min")

    @property
    def dq(self) -> float:
        return (self.q_max - self.q_min) / self.n_points

    @cached_property
    def q(self) -> np.ndarray:
        q = self.q_min + self.dq * np.arange(self.n_points)
        q.setflags(write=False)
        return q

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers in FFT order (multiply by ħ for momenta)."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.n_points, self.dq)
        k.setflags(write=False)
        return k

    def contains(self, lo: float, hi: float) -> bool:
        return self.q_min <= lo and hi <= self.q_max - self.dq


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.mass > 0):
            raise ValueError("hbar and mass must be strictly positive")


@dataclass(frozen=True)
class GaussianParams:
    """Minimum-uncertainty packet centred at (q0, p0) with width delta."""

    q0: float = 0.0
    p0: float = 0.0
    delta: float = 1.0

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")


@dataclass(frozen=True)
class Moments:
    mean_q: float
    mean_p: float
    var_q: float
    var_p: float
    correlation_k: float

    def uncertainty_excess(self, hbar: float) -> float:
        """Δq²Δp² − K² − ħ²/4; zero for pure Gaussian states."""
        return self.var_q * self.var_p - self.correlation_k**2 - 0.25 * hbar**2

    def as_dict(self) -> dict[str, float]:
        return {
            "mean_q": self.mean_q,
            "mean_p": self.mean_p,
            "var_q": self.var_q,
            "var_p": self.var_p,
            "correlation_k": self.correlation_k,
        }


@dataclass(frozen=True, eq=False)
class WaveFunction:
    grid: Grid
    constants: PhysicalConstants
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.grid.n_points,):
            raise ValueError(
                f"expected {self.grid.n_points} amplitudes, got shape {amps.shape}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def q(self) -> np.ndarray:
        return self.grid.q

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dq))

    def normalized(self) -> "WaveFunction":
        n = self.norm()
        if n < 1e-12:
            raise ZeroVectorError("cannot normalize a (numerically) zero wave function")
        return self.with_amplitudes(self.amplitudes / n)

    def with_amplitudes(self, amplitudes: np.ndarray) -> "WaveFunction":
        return WaveFunction(self.grid, self.constants, amplitudes)

    def edge_ratio(self) -> float:
        """Largest edge magnitude relative to the peak magnitude."""
        mag = np.abs(self.amplitudes)
        return float(max(mag[0], mag[-1]) / mag.max())

    def check_in_box(self) -> "WaveFunction":
        if self.edge_ratio() >= EDGE_FRACTION:
            raise PacketOutOfBoxError(
                f"edge amplitude is {self.edge_ratio():.3g} of the peak "
                f"(limit {EDGE_FRACTION:g}); enlarge the grid"
            )
        return self

    def same_space(self, other: "WaveFunction") -> bool:
        return self.grid == other.grid and self.constants == other.constants

    def momentum_density(self) -> tuple[np.ndarray, np.ndarray]:
        """Momenta (FFT order) and normalized momentum-space probability weights."""
        phi = np.fft.fft(self.amplitudes)
        w = np.abs(phi) ** 2
        return self.constants.hbar * self.grid.wavenumbers, w / w.sum()


@dataclass(frozen=True, eq=False)
class PolarFields:
    rho: np.ndarray
    theta: np.ndarray
    valid_mask: np.ndarray

    def rebuild(self) -> np.ndarray:
        return np.where(self.valid_mask, self.rho * np.exp(1j * self.theta), 0.0)


def contiguous_runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open index ranges [start, stop) of the True runs in ``mask``."""
    m = np.concatenate([[False], np.asarray(mask, dtype=bool), [False]])
    edges = np.flatnonzero(np.diff(m.astype(np.int8)))
    return [(int(a), int(b)) for a, b in zip(edges[::2], edges[1::2])]


def spectral_derivatives(amplitudes: np.ndarray, dq: float) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivatives on the periodic grid via FFT."""
    n = amplitudes.size
    k = 2.0 * np.pi * np.fft.fftfreq(n, dq)
    f = np.fft.fft(amplitudes)
    k1 = k.copy()
    k1[n // 2] = 0.0  # Nyquist mode has no odd derivative
    return np.fft.ifft(1j * k1 * f), np.fft.ifft(-(k**2) * f)


def fd4_derivatives(amplitudes: np.ndarray, dq: float) -> tuple[np.ndarray, np.ndarray]:
    """Fourth-order central differences (periodic wrap)."""
    f = amplitudes
    fp1, fm1 = np.roll(f, -1), np.roll(f, 1)
    fp2, fm2 = np.roll(f, -2), np.roll(f, 2)
    d1 = (8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * dq)
    d2 = (-fp2 + 16.0 * fp1 - 30.0 * f + 16.0 * fm1 - fm2) / (12.0 * dq**2)
    return d1, d2


def gaussian_packet(
    params: GaussianParams,
    grid: Grid | None = None,
    constants: PhysicalConstants | None = None,
) -> WaveFunction:
    """Minimum-uncertainty Gaussian packet at t = 0.

    ``psi(q) = (sqrt(pi) delta)^(-1/2) exp(-(q-q0)^2 / (2 delta^2) + i p0 (q-q0) / hbar)``
    """
    grid = grid or Grid()
    constants = constants or PhysicalConstants()
    q0, p0, d = params.q0, params.p0, params.delta
    if not grid.contains(q0 - SUPPORT_WIDTHS * d, q0 + SUPPORT_WIDTHS * d):
        raise PacketOutOfBoxError(
            f"packet support [{q0 - SUPPORT_WIDTHS * d:g}, {q0 + SUPPORT_WIDTHS * d:g}] "
            f"leaves the grid [{grid.q_min:g}, {grid.q_max:g}]"
        )
    x = grid.q - q0
    amps = (np.sqrt(np.pi) * d) ** -0.5 * np.exp(
        -(x**2) / (2.0 * d**2) + 1j * p0 * x / constants.hbar
    )
    return WaveFunction(grid, constants, amps).normalized()


def superpose(
    psi1: WaveFunction, psi2: WaveFunction, w1: complex = 1.0, w2: complex = 1.0
) -> WaveFunction:
    """Normalized ``w1 * psi1 + w2 * psi2``."""
    if not psi1.same_space(psi2):
        raise GridMismatchError("wave functions live on different grids or constants")
    out = psi1.with_amplitudes(w1 * psi1.amplitudes + w2 * psi2.amplitudes)
    if out.norm() < 1e-12:
        raise ZeroVectorError("superposition cancels to zero")
    return out.normalized()


def polar_decompose(psi: WaveFunction, rho_floor_fraction: float = 1e-6) -> PolarFields:
    """Split psi into modulus and unwrapped phase.

    Points with ``rho < rho_floor_fraction * max(rho)`` are masked out; the
    phase is unwrapped independently on every contiguous valid run and set
    to zero elsewhere.
    """
    if not 0.0 < rho_floor_fraction <= 0.1:
        raise ValueError("rho_floor_fraction must lie in (0, 0.1]")
    rho = np.abs(psi.amplitudes)
    mask = (rho >= rho_floor_fraction * rho.max()) & (rho > 0)
    wrapped = np.angle(psi.amplitudes)
    theta = np.zeros_like(rho)
    for a, b in contiguous_runs(mask):
        theta[a:b] = np.unwrap(wrapped[a:b])
    return PolarFields(rho=rho, theta=theta, valid_mask=mask)


def probability_current(psi: WaveFunction) -> np.ndarray:
    """``rho^2 d(theta)/dq`` evaluated as ``Im(conj(psi) psi')`` (no unwrapping needed)."""
    d1, _ = spectral_derivatives(psi.amplitudes, psi.grid.dq)
    return np.imag(np.conj(psi.amplitudes) * d1)


def mean_momentum_spectral(psi: WaveFunction) -> float:
    p, w = psi.momentum_density()
    return float(np.sum(p * w))


def moments(psi: WaveFunction) -> Moments:
    """First and second moments of q and p plus the symmetrized correlation K."""
    dq, q, hbar = psi.grid.dq, psi.q, psi.constants.hbar
    dens = np.abs(psi.amplitudes) ** 2
    total = dens.sum() * dq
    dens = dens / total
    mean_q = float(np.sum(q * dens) * dq)
    var_q = float(np.sum((q - mean_q) ** 2 * dens) * dq)

    current = probability_current(psi) / total
    mean_p = float(hbar * np.sum(current) * dq)
    k_corr = float(hbar * np.sum(q * current) * dq - mean_q * mean_p)

    p, w = psi.momentum_density()
    var_p = float(np.sum((p - mean_p) ** 2 * w))
    return Moments(mean_q, mean_p, var_q, var_p, k_corr)
