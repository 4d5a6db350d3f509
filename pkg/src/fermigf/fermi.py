"""The Fermi function g_F(q, p) = [p - ħθ'(q)]² + ħ²ρ''(q)/ρ(q) and its zero set.

For every valid grid point the zero set consists of two momenta

    p± = ħθ' ± sqrt(-ħ²ρ''/ρ),

real where ρ'' ≤ 0 and complex conjugate otherwise.  The real part of the
curve is a closed loop (an ellipse of area πħ for Gaussian states); the
complex part still carries information and lets ψ be rebuilt.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.integrate import IntegrationWarning, cumulative_simpson, quad
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .errors import (
    AllMaskedError,
    DegenerateEllipseError,
    MaskedPointError,
    NoRealBandError,
    ReconstructionError,
    UncertaintyViolationError,
)
from .state import (
    Grid,
    Moments,
    PhysicalConstants,
    WaveFunction,
    contiguous_runs,
    fd4_derivatives,
    polar_decompose,
    spectral_derivatives,
)

DerivativeScheme = Literal["spectral", "finite_difference_4th"]


@dataclass(frozen=True, eq=False)
class FermiCurve:
    grid: Grid
    constants: PhysicalConstants
    phase_gradient: np.ndarray  # ħ dθ/dq
    curvature_term: np.ndarray  # ħ² ρ''/ρ
    p_plus: np.ndarray
    p_minus: np.ndarray
    real_branch: np.ndarray
    valid: np.ndarray

    @property
    def q(self) -> np.ndarray:
        return self.grid.q

    def bands(self) -> list[tuple[int, int]]:
        """Index ranges [start, stop) of contiguous real-branch runs."""
        return contiguous_runs(self.real_branch & self.valid)

    def evaluate(self, q, p):
        """g_F(q, p), with the fields linearly interpolated between grid points."""
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        pos = (q - self.grid.q_min) / self.grid.dq
        i0 = np.floor(pos).astype(int)
        frac = pos - i0
        on_grid = np.isclose(frac, 0.0, atol=1e-9) | np.isclose(frac, 1.0, atol=1e-9)
        i0 = np.where(np.isclose(frac, 1.0, atol=1e-9), i0 + 1, i0)
        frac = np.where(on_grid, 0.0, frac)
        i1 = np.where(on_grid, i0, i0 + 1)
        n = self.grid.n_points
        inside = (i0 >= 0) & (i1 < n)
        if not np.all(inside):
            raise MaskedPointError("q lies outside the grid")
        if not np.all(self.valid[i0] & self.valid[i1]):
            raise MaskedPointError("q lies outside the valid (unmasked) region")
        pg = (1 - frac) * self.phase_gradient[i0] + frac * self.phase_gradient[i1]
        ct = (1 - frac) * self.curvature_term[i0] + frac * self.curvature_term[i1]
        out = (p - pg) ** 2 + ct
        return float(out) if out.ndim == 0 else out

    def band_edges(self) -> list[tuple[float, float]]:
        """Sub-grid (q_left, q_right) where the real branch closes, one pair per band."""
        return [(lo, hi) for _, _, _, lo, hi in _band_splines(self)]

    def real_points(self, include_edges: bool = False) -> np.ndarray:
        """(q, p) samples of the real curve, shape (n, 2).

        With ``include_edges`` the interpolated band tips, where p+ = p-, are
        appended so the point set closes the loop.
        """
        sel = self.real_branch & self.valid
        q = self.q[sel]
        pts = [np.column_stack([q, self.p_plus[sel].real]),
               np.column_stack([q, self.p_minus[sel].real])]
        if include_edges:
            valid_idx = np.flatnonzero(self.valid)
            pg = self.phase_gradient
            for lo, hi in self.band_edges():
                tips = [(x, np.interp(x, self.q[valid_idx], pg[valid_idx])) for x in (lo, hi)]
                pts.append(np.array(tips))
        return np.vstack(pts)


@dataclass(frozen=True)
class EllipseCoeffs:
    """a q̃² + b p̃² + 2c q̃ p̃ = 1 with q̃ = q - center_q, p̃ = p - center_p."""

    a: float
    b: float
    c: float
    center_q: float = 0.0
    center_p: float = 0.0

    @property
    def determinant(self) -> float:
        return self.a * self.b - self.c**2

    def as_dict(self) -> dict[str, float]:
        return {"a": self.a, "b": self.b, "c": self.c,
                "center_q": self.center_q, "center_p": self.center_p}

    def boundary(self, n: int = 720) -> np.ndarray:
        """n points on the ellipse boundary, shape (n, 2)."""
        if self.determinant <= 0:
            raise DegenerateEllipseError("ab - c^2 must be positive")
        mat = np.array([[self.a, self.c], [self.c, self.b]])
        vals, vecs = np.linalg.eigh(mat)
        t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        unit = np.stack([np.cos(t) / np.sqrt(vals[0]), np.sin(t) / np.sqrt(vals[1])])
        pts = (vecs @ unit).T
        return pts + np.array([self.center_q, self.center_p])


def _derivatives(psi: WaveFunction, scheme: DerivativeScheme):
    if scheme == "spectral":
        return spectral_derivatives(psi.amplitudes, psi.grid.dq)
    if scheme == "finite_difference_4th":
        return fd4_derivatives(psi.amplitudes, psi.grid.dq)
    raise ValueError(f"unknown derivative scheme {scheme!r}")


def fermi_branches(
    psi: WaveFunction,
    rho_floor_fraction: float = 1e-6,
    derivative_scheme: DerivativeScheme = "spectral",
) -> FermiCurve:
    """Both momentum branches p±(q) of g_F = 0 on the valid part of the grid.

    Derivatives are taken of ψ itself, which stays smooth through nodes and
    through the ρ floor, and then split into modulus and phase parts:
    ψ'/ψ = ρ'/ρ + iθ' and Re(ψ''/ψ) = ρ''/ρ - θ'².
    """
    hbar = psi.constants.hbar
    mask = polar_decompose(psi, rho_floor_fraction).valid_mask
    if not mask.any():
        raise AllMaskedError("no grid point survives the rho floor")
    d1, d2 = _derivatives(psi, derivative_scheme)

    n = psi.grid.n_points
    pg = np.full(n, np.nan)
    ct = np.full(n, np.nan)
    amps = psi.amplitudes[mask]
    r1 = d1[mask] / amps
    r2 = d2[mask] / amps
    theta_prime = r1.imag
    pg[mask] = hbar * theta_prime
    ct[mask] = hbar**2 * (r2.real + theta_prime**2)

    real = mask & (ct <= 0.0)
    root = np.sqrt(np.abs(np.where(mask, ct, 0.0)))
    shift = np.where(real, root, 1j * root).astype(complex)
    masked = complex(np.nan, np.nan)
    p_plus = np.where(mask, pg + shift, masked)
    p_minus = np.where(mask, pg - shift, masked)
    return FermiCurve(psi.grid, psi.constants, pg, ct, p_plus, p_minus, real, mask)


def fermi_value(psi: WaveFunction, q, p, *, curve: FermiCurve | None = None):
    """g_F(q, p) for psi; pass ``curve`` to reuse an existing extraction."""
    if curve is None:
        curve = fermi_branches(psi)
    return curve.evaluate(q, p)


def fermi_operator_residual(psi: WaveFunction, curve: FermiCurve) -> float:
    """‖g_F(q, -iħ∂q) ψ‖ / ‖ψ‖ over the interior of the valid mask.

    The operator is applied with the curve's stored fields; the derivative of
    the phase-gradient field is taken by finite differences on the curve data,
    independently of how the fields were produced.
    """
    hbar = psi.constants.hbar
    dq = psi.grid.dq
    d1, d2 = spectral_derivatives(psi.amplitudes, dq)
    f = curve.phase_gradient
    total = 0.0
    for a, b in contiguous_runs(curve.valid):
        if b - a < 5:
            continue
        seg = slice(a + 2, b - 2)
        fs = f[a:b]
        f_prime = (8.0 * (fs[3:-1] - fs[1:-3]) - (fs[4:] - fs[:-4])) / (12.0 * dq)
        psi_s = psi.amplitudes[seg]
        out = (-hbar**2 * d2[seg] + 1j * hbar * (f_prime * psi_s + 2.0 * f[seg] * d1[seg])
               + f[seg] ** 2 * psi_s + curve.curvature_term[seg] * psi_s)
        total += np.sum(np.abs(out) ** 2) * dq
    return float(np.sqrt(total) / psi.norm())


def _band_splines(curve: FermiCurve):
    """Yield (start, stop, spline of -curvature_term, q_left, q_right) per real band."""
    q = curve.q
    width2 = -curve.curvature_term
    runs = contiguous_runs(curve.valid)
    for a, b in curve.bands():
        va, vb = next((r for r in runs if r[0] <= a and b <= r[1]))
        lo, hi = max(va, a - 3), min(vb, b + 3)
        xs, ys = q[lo:hi], width2[lo:hi]
        if xs.size < 2:
            # a lone valid point; no usable neighbourhood
            yield a, b, None, q[a], q[b - 1]
            continue
        spline = CubicSpline(xs, ys)
        left = brentq(spline, q[a - 1], q[a]) if a > va else q[a]
        right = brentq(spline, q[b - 1], q[b]) if b < vb else q[b - 1]
        yield a, b, spline, float(left), float(right)


def band_areas(curve: FermiCurve) -> list[float]:
    """∫ (p+ - p-) dq over each real band.

    The squared half-width -ħ²ρ''/ρ is smooth across the band edges, so it is
    interpolated with a local cubic spline, its zero crossings located inside
    the bracketing cells, and 2·sqrt(width²) integrated adaptively between
    them.  This keeps the square-root edge behaviour from degrading the
    quadrature to O(dq^1.5).
    """
    areas = []
    for a, b, spline, left, right in _band_splines(curve):
        if spline is None or right <= left:
            areas.append(0.0)
            continue
        with warnings.catch_warnings():
            # propagated states carry roundoff in ρ''/ρ; quad's best estimate is still wanted
            warnings.simplefilter("ignore", IntegrationWarning)
            val, _ = quad(lambda x: 2.0 * np.sqrt(max(float(spline(x)), 0.0)),
                          left, right, limit=400, epsabs=1e-13, epsrel=1e-11)
        areas.append(float(val))
    return areas


def enclosed_area(curve: FermiCurve) -> float:
    """Total phase-space area inside the real part of the g_F = 0 curve."""
    bands = curve.bands()
    if not any(b - a >= 4 for a, b in bands):
        raise NoRealBandError("no real band with at least 4 grid points")
    return float(sum(band_areas(curve)))


def fit_ellipse(curve: FermiCurve) -> tuple[EllipseCoeffs, float]:
    """Least-squares ellipse through the real branch points.

    The centre comes first: the band's squared half-width is quadratic in q
    for an ellipse (vertex at the centre q) and the branch midpoint is linear
    in q (passing through the centre p).  With the centre fixed, (a, b, c) is
    a linear least-squares problem.  Returns the coefficients and the RMS of
    ``a q̃² + b p̃² + 2c q̃p̃ - 1`` over the points used.
    """
    bands = [(a, b) for a, b in curve.bands() if b - a >= 2]
    if len(bands) != 1:
        raise NoRealBandError(f"expected exactly one real band, found {len(bands)}")
    a, b = bands[0]
    if b - a < 8:
        raise NoRealBandError(f"real band has {b - a} points; at least 8 are needed")
    q = curve.q[a:b]
    half_width2 = -curve.curvature_term[a:b]
    mid = curve.phase_gradient[a:b]

    # scaled abscissa keeps the Vandermonde systems well conditioned
    q_ref, q_scale = q.mean(), np.ptp(q) / 2.0
    x = (q - q_ref) / q_scale
    c2, c1, _ = np.polyfit(x, half_width2, 2)
    if c2 >= 0:
        raise DegenerateEllipseError("band width is not concave; curve is not an ellipse")
    xc = -c1 / (2.0 * c2)
    center_q = q_ref + q_scale * xc
    center_p = float(np.polyval(np.polyfit(x, mid, 1), xc))

    qt = np.concatenate([q, q]) - center_q
    pt = np.concatenate([curve.p_plus[a:b].real, curve.p_minus[a:b].real]) - center_p
    design = np.column_stack([qt**2, pt**2, 2.0 * qt * pt])
    scale = np.linalg.norm(design, axis=0)
    sol, *_ = np.linalg.lstsq(design / scale, np.ones(qt.size), rcond=None)
    ca, cb, cc = sol / scale
    coeffs = EllipseCoeffs(float(ca), float(cb), float(cc), float(center_q), center_p)
    if coeffs.determinant <= 0 or ca <= 0 or cb <= 0:
        raise DegenerateEllipseError(f"fitted conic is not an ellipse: {coeffs}")
    rms = float(np.sqrt(np.mean((design @ np.array([ca, cb, cc]) - 1.0) ** 2)))
    return coeffs, rms


def ellipse_area(coeffs: EllipseCoeffs) -> float:
    det = coeffs.determinant
    if det <= 0 or coeffs.a <= 0 or coeffs.b <= 0:
        raise DegenerateEllipseError(f"(a, b, ab - c^2) = ({coeffs.a}, {coeffs.b}, {det}) "
                                     "is not a real ellipse")
    return float(np.pi / np.sqrt(det))


def ellipse_from_moments(m: Moments, constants: PhysicalConstants) -> EllipseCoeffs:
    """Ellipse coefficients implied by the first and second moments.

    a = 2Δp²/ħ², b = 2Δq²/ħ², c = -2K/ħ², centred at (⟨q⟩, ⟨p⟩).  The minus
    sign on c holds for the free, uniformly accelerated and harmonic cases
    alike (it follows from c = -t/mδ² and K = ħ²t/2mδ² for the free packet).
    """
    h2 = constants.hbar**2
    det = m.var_q * m.var_p - m.correlation_k**2
    if det < 0.25 * h2 * (1.0 - 1e-6):
        raise UncertaintyViolationError(
            f"Δq²Δp² - K² = {det:.6g} is below ħ²/4 = {0.25 * h2:.6g}"
        )
    return EllipseCoeffs(
        a=2.0 * m.var_p / h2,
        b=2.0 * m.var_q / h2,
        c=-2.0 * m.correlation_k / h2,
        center_q=m.mean_q,
        center_p=m.mean_p,
    )


def _numerov_bvp(s: np.ndarray, rho0: float, h: float) -> np.ndarray:
    """Solve ρ'' = sρ on s's support with ρ[0] = rho0 and ρ = 0 one step past the end."""
    n = s.size
    if n == 1:
        return np.array([rho0])
    g = 1.0 - h * h * s / 12.0
    diag = -2.0 * (1.0 + 5.0 * h * h * s / 12.0)
    m = n - 1
    ab = np.zeros((3, m))
    ab[1] = diag[1:]
    ab[0, 1:] = g[2:]
    ab[2, :-1] = g[1:-1]
    rhs = np.zeros(m)
    rhs[0] = -g[0] * rho0
    return np.concatenate([[rho0], solve_banded((1, 1), ab, rhs)])


def _numerov_march(s: np.ndarray, rho0: float, drho0: float, h: float, limit: float) -> np.ndarray:
    """March ρ'' = sρ outward with a fourth-order Taylor start."""
    n = s.size
    out = np.empty(n)
    out[0] = rho0
    if n == 1:
        return out
    sp = (s[1] - s[0]) / h if n > 1 else 0.0
    out[1] = (rho0 + h * drho0 + 0.5 * h**2 * s[0] * rho0
              + h**3 / 6.0 * (sp * rho0 + s[0] * drho0)
              + h**4 / 24.0 * (2.0 * sp * drho0 + s[0] ** 2 * rho0))
    g = 1.0 - h * h * s / 12.0
    for i in range(1, n - 1):
        out[i + 1] = (2.0 * (1.0 + 5.0 * h * h * s[i] / 12.0) * out[i] - g[i - 1] * out[i - 1]) / g[i + 1]
        if abs(out[i + 1]) > limit:
            raise ReconstructionError(
                "rho grew past 1e6 x anchor_rho: the anchor data selects the growing solution"
            )
    return out


def reconstruct_wavefunction(
    curve: FermiCurve,
    anchor_q: float,
    anchor_rho: float,
    anchor_drho: float,
    anchor_theta: float,
    method: Literal["bvp", "shooting"] = "bvp",
) -> WaveFunction:
    """Rebuild ψ = ρ e^{iθ} from both (possibly complex) branches.

    ħθ' = (p+ + p-)/2 and ρ''/ρ = -((p+ - p-)/2)²/ħ².  θ is integrated from
    the anchor.  ρ is obtained on each side of the anchor with a Numerov
    discretisation; the default ``"bvp"`` solves the two-point problem with
    ρ fixed at the anchor and zero just beyond the valid run, which keeps the
    decaying solution.  ``"shooting"`` marches outward from (ρ, ρ') at the
    anchor and is only accurate while the growing mode stays small.
    """
    hbar = curve.constants.hbar
    h = curve.grid.dq
    idx = int(round((anchor_q - curve.grid.q_min) / h))
    if not (0 <= idx < curve.grid.n_points and curve.valid[idx]):
        raise MaskedPointError("anchor lies outside the valid region")
    lo, hi = next((a, b) for a, b in contiguous_runs(curve.valid) if a <= idx < b)

    half_diff = 0.5 * (curve.p_plus[lo:hi] - curve.p_minus[lo:hi])
    s = (-(half_diff**2)).real / hbar**2
    theta_prime = (0.5 * (curve.p_plus[lo:hi] + curve.p_minus[lo:hi])).real / hbar
    k = idx - lo

    rho = np.zeros(hi - lo)
    if method == "bvp":
        rho[k:] = _numerov_bvp(s[k:], anchor_rho, h)
        rho[: k + 1] = _numerov_bvp(s[: k + 1][::-1], anchor_rho, h)[::-1]
        if 0 < k < hi - lo - 1:
            slope = (rho[k + 1] - rho[k - 1]) / (2.0 * h)
            scale = max(abs(anchor_drho), anchor_rho * np.sqrt(np.max(np.abs(s))))
            if abs(slope - anchor_drho) > 0.05 * scale:
                raise ReconstructionError(
                    f"anchor slope {anchor_drho:.6g} is inconsistent with the decaying "
                    f"solution (slope {slope:.6g})"
                )
    elif method == "shooting":
        limit = 1e6 * anchor_rho
        rho[k:] = _numerov_march(s[k:], anchor_rho, anchor_drho, h, limit)
        rho[: k + 1] = _numerov_march(s[: k + 1][::-1], anchor_rho, -anchor_drho, h, limit)[::-1]
    else:
        raise ValueError(f"unknown method {method!r}")

    n = hi - lo
    theta = np.zeros(n)
    if n - k > 1:
        theta[k:] = cumulative_simpson(theta_prime[k:], dx=h, initial=0.0)
    if k > 0:
        theta[: k + 1] = -cumulative_simpson(theta_prime[: k + 1][::-1], dx=h, initial=0.0)[::-1]
    theta += anchor_theta

    amps = np.zeros(curve.grid.n_points, dtype=complex)
    amps[lo:hi] = rho * np.exp(1j * theta)
    return WaveFunction(curve.grid, curve.constants, amps).normalized()


def phase_aligned_distance(psi: WaveFunction, ref: WaveFunction) -> float:
    """L² distance after removing the optimal global phase."""
    overlap = np.vdot(psi.amplitudes, ref.amplitudes)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    diff = psi.amplitudes * phase - ref.amplitudes
    return float(np.sqrt(np.sum(np.abs(diff) ** 2) * psi.grid.dq))
