"""Per-state computations shared by the command-line front end and the verification suite."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import AliasingWarning, FermiGFError
from .fermi import (
    EllipseCoeffs,
    FermiCurve,
    ellipse_area,
    enclosed_area,
    fit_ellipse,
    reconstruct_wavefunction,
    phase_aligned_distance,
)
from .measurement import (
    MeasurementRecord,
    compton_linearize,
    compton_residuals,
    compton_solve,
    reconstruct_ellipse_experiment,
)
from .state import Moments, PhysicalConstants, WaveFunction, spectral_derivatives
from .wigner import PhaseSpaceField, contour_fraction, hausdorff_distance, wigner_transform


def coeff_errors(fit: EllipseCoeffs, ref: EllipseCoeffs) -> dict[str, float]:
    """Relative errors of (a, b, c); c is measured against max(|c|, sqrt(ab))
    so that a vanishing correlation term does not blow the ratio up."""
    scale_c = max(abs(ref.c), np.sqrt(ref.a * ref.b))
    return {
        "a": abs(fit.a - ref.a) / abs(ref.a),
        "b": abs(fit.b - ref.b) / abs(ref.b),
        "c": abs(fit.c - ref.c) / scale_c,
    }


def curve_summary(curve: FermiCurve, analytic: EllipseCoeffs | None = None) -> dict:
    """Area, band count and (when the curve is a single loop) the fitted ellipse."""
    hbar = curve.constants.hbar
    out: dict = {"n_bands": len(curve.bands()), "n_valid": int(curve.valid.sum())}
    try:
        out["enclosed_area"] = enclosed_area(curve)
        out["area_over_pi_hbar"] = out["enclosed_area"] / (np.pi * hbar)
    except FermiGFError as exc:
        out["enclosed_area"] = None
        out["area_error"] = str(exc)
    try:
        fit, rms = fit_ellipse(curve)
        out["fit"] = fit.as_dict()
        out["fit_rms"] = rms
        out["fit_area"] = ellipse_area(fit)
    except FermiGFError as exc:
        fit = None
        out["fit"] = None
        out["fit_error"] = str(exc)
    if analytic is not None:
        out["analytic"] = analytic.as_dict()
        out["analytic_area"] = ellipse_area(analytic)
        if fit is not None:
            out["fit_relative_error"] = coeff_errors(fit, analytic)
    return out


def centred(m: Moments) -> Moments:
    return replace(m, mean_q=0.0, mean_p=0.0)


def measure_moments(m: Moments, prism, n: int, seed: int, constants: PhysicalConstants,
                    keep_samples: bool = False) -> tuple[EllipseCoeffs, MeasurementRecord]:
    """Three-experiment reconstruction in a frame centred on the known packet centre.

    K is translation invariant, but the prism estimator's noise grows with
    the packet's distance from the optical axis; centring the apparatus on
    (⟨q⟩, ⟨p⟩) removes that term.  The returned ellipse, the mean estimates
    and any kept position/momentum samples are shifted back to the lab
    frame; prism samples stay as read on the aligned screen.
    """
    coeffs, record = reconstruct_ellipse_experiment(centred(m), prism, n, seed, constants,
                                                    keep_samples=keep_samples)
    coeffs = replace(coeffs, center_q=coeffs.center_q + m.mean_q,
                     center_p=coeffs.center_p + m.mean_p)
    est = replace(record.estimates, mean_q=record.estimates.mean_q + m.mean_q,
                  mean_p=record.estimates.mean_p + m.mean_p)
    samples = dict(record.samples)
    if samples:
        samples["position"] = samples["position"] + m.mean_q
        samples["momentum"] = samples["momentum"] + m.mean_p
    return coeffs, replace(record, estimates=est, samples=samples)


def compton_summary(config, halfwidth: float) -> dict:
    """Solve at the centre and the ends of ±halfwidth, plus the linearisation quality."""
    worst = 0.0
    sols = {}
    for b in (-halfwidth, 0.0, halfwidth):
        sol = compton_solve(config, b)
        worst = max(worst, float(np.abs(compton_residuals(config, b, sol)).max()))
        sols[f"{b:+.3e}"] = sol._asdict()
    lin = compton_linearize(config, 0.0, halfwidth)
    return {
        "solutions": sols,
        "max_relative_residual": worst,
        "A": lin.A,
        "B": lin.B,
        "linearization_residual": lin.max_residual,
        "linearization_residual_fraction": lin.max_residual / abs(lin.B * halfwidth),
    }


@dataclass(frozen=True, eq=False)
class WignerComparison:
    field: PhaseSpaceField
    contours: list[np.ndarray]
    hausdorff: float

    @property
    def cells(self) -> float:
        return self.hausdorff / self.field.cell_diagonal


def wigner_comparison(psi: WaveFunction, curve: FermiCurve, n_p: int, n_q: int,
                      fraction: float) -> WignerComparison:
    """Wigner field, its level set at ``fraction`` of the maximum and the
    Hausdorff distance from that level set to the real g_F = 0 points."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AliasingWarning)
        field = wigner_transform(psi, n_p, n_q)
    contours = contour_fraction(field, fraction)
    dist = hausdorff_distance(np.vstack(contours), curve.real_points(include_edges=True))
    return WignerComparison(field, contours, dist)


def reconstruct_round_trip(psi: WaveFunction, curve: FermiCurve) -> tuple[WaveFunction, float, float]:
    """Rebuild ψ from both branches, anchored at the density peak.

    Returns the rebuilt state, the phase-aligned L² error and the anchor q.
    """
    rho = np.abs(psi.amplitudes)
    idx = int(np.argmax(np.where(curve.valid, rho, -1.0)))
    d1, _ = spectral_derivatives(psi.amplitudes, psi.grid.dq)
    drho = float((d1[idx] / psi.amplitudes[idx]).real * rho[idx])
    q0 = float(psi.q[idx])
    rebuilt = reconstruct_wavefunction(curve, q0, float(rho[idx]), drho,
                                       float(np.angle(psi.amplitudes[idx])))
    return rebuilt, phase_aligned_distance(rebuilt, psi), q0
