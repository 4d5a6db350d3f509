"""Wigner distribution of a gridded wave function and level-set comparison tools."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from skimage import measure

from .errors import AliasingWarning, EmptyContourError, EmptySetError
from .state import WaveFunction


@dataclass(frozen=True, eq=False)
class PhaseSpaceField:
    q: np.ndarray
    p: np.ndarray
    values: np.ndarray  # shape (len(q), len(p))

    @property
    def dq(self) -> float:
        return float(self.q[1] - self.q[0])

    @property
    def dp(self) -> float:
        return float(self.p[1] - self.p[0])

    @property
    def cell_diagonal(self) -> float:
        return float(np.hypot(self.dq, self.dp))

    def total(self) -> float:
        return float(self.values.sum() * self.dq * self.dp)

    def q_marginal(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.dp

    def p_marginal(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.dq


def wigner_transform(psi: WaveFunction, n_p: int, n_q: int | None = None) -> PhaseSpaceField:
    """ρ_W(q, p) = (1/πħ) ∫ ψ*(q + y) ψ(q - y) e^{2ipy/ħ} dy on the grid.

    The y integral runs over every grid shift with ψ taken as zero outside
    the box (no periodic wrap, which would alias the packet onto the
    antipodal rows), so the natural momentum spacing is πħ/(N dq).  Of that spectrum, ``n_p`` contiguous
    columns centred on ⟨p⟩ are returned.  Rows are ``n_q`` evenly strided
    grid positions spanning the whole box (all of them by default).
    """
    grid = psi.grid
    n = grid.n_points
    if n_p < 2 or n_p & (n_p - 1) or n_p > n:
        raise ValueError(f"n_p must be a power of two between 2 and {n}")
    n_q = n if n_q is None else n_q
    if n_q < 2 or n % n_q:
        raise ValueError(f"n_q must divide the grid size {n}")
    hbar, dq = psi.constants.hbar, grid.dq

    amps = psi.normalized().amplitudes
    phi = np.fft.fft(amps)
    w = np.abs(phi) ** 2
    k = grid.wavenumbers
    tail = w[np.abs(k) > 0.5 * np.abs(k).max()].sum() / w.sum()
    if tail > 1e-8:
        warnings.warn(
            f"momentum tail mass {tail:.3g} beyond half the Nyquist limit aliases "
            "the Wigner transform",
            AliasingWarning,
            stacklevel=2,
        )

    rows = np.arange(0, n, n // n_q)
    shifts = np.fft.ifftshift(np.arange(-n // 2, n // 2))  # FFT order: 0, 1, ..., -1
    fwd = rows[:, None] + shifts
    bwd = rows[:, None] - shifts
    inside = (fwd >= 0) & (fwd < n) & (bwd >= 0) & (bwd < n)
    corr = np.where(inside, np.conj(amps[fwd % n]) * amps[bwd % n], 0.0)
    # sum_j f_j exp(2πi k j / n) = n * ifft(f)[k]
    spec = np.fft.fftshift(np.fft.ifft(corr, axis=1), axes=1) * n * dq / (np.pi * hbar)
    imag_residue = np.abs(spec.imag).max()
    if imag_residue > 1e-10:
        raise AssertionError(f"Wigner transform not real: residue {imag_residue:.3g}")

    dp = np.pi * hbar / (n * dq)
    p_all = dp * np.arange(-n // 2, n // 2)
    mean_p = float(np.sum(hbar * k * w) / w.sum())
    centre = int(np.clip(round(mean_p / dp) + n // 2, n_p // 2, n - n_p // 2))
    cols = slice(centre - n_p // 2, centre + n_p // 2)
    return PhaseSpaceField(q=grid.q[rows].copy(), p=p_all[cols].copy(),
                           values=np.ascontiguousarray(spec.real[:, cols]))


def contour_fraction(field: PhaseSpaceField, fraction: float) -> list[np.ndarray]:
    """Level set ``values = fraction * max(values)`` via marching squares.

    Returns one (n, 2) array of (q, p) points per connected component,
    ordered along the component.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    level = fraction * field.values.max()
    raw = measure.find_contours(field.values, level)
    comps = []
    for c in raw:
        qi, pj = c[:, 0], c[:, 1]
        comps.append(np.column_stack([field.q[0] + qi * field.dq, field.p[0] + pj * field.dp]))
    if not comps:
        raise EmptyContourError(f"no contour at level {level:.6g}")
    return comps


def hausdorff_distance(set_a, set_b, chunk: int = 2048) -> float:
    """Symmetric Hausdorff distance between two finite point sets (brute force)."""
    a = np.asarray(set_a, dtype=float).reshape(-1, 2)
    b = np.asarray(set_b, dtype=float).reshape(-1, 2)
    if a.size == 0 or b.size == 0:
        raise EmptySetError("Hausdorff distance needs two non-empty point sets")

    def directed(x, y):
        worst = 0.0
        for i in range(0, len(x), chunk):
            d2 = ((x[i:i + chunk, None, :] - y[None, :, :]) ** 2).sum(axis=-1)
            worst = max(worst, float(d2.min(axis=1).max()))
        return np.sqrt(worst)

    return float(max(directed(a, b), directed(b, a)))
