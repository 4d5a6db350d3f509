"""Fermi g_F phase-space representation of 1D wave packets.

g_F(q, p) = [p - ħθ'(q)]² + ħ²ρ''(q)/ρ(q) for ψ = ρ e^{iθ}.  Its zero set is
an ellipse of area πħ for every Gaussian state; this package extracts it
from gridded wave functions, evolves it in closed form for free, uniformly
accelerated and harmonic dynamics, checks it against a split-step
propagator and the Wigner function, and simulates its measurement.
"""
from .dynamics import (
    HarmonicGaussianParams,
    SystemSpec,
    analytic_ellipse,
    analytic_moments,
    center_parabola,
    closed_form_state,
    evolve_free,
    evolve_uniform_force,
    harmonic_state,
)
from .errors import AliasingWarning, FermiGFError
from .fermi import (
    EllipseCoeffs,
    FermiCurve,
    ellipse_area,
    ellipse_from_moments,
    enclosed_area,
    fermi_branches,
    fermi_value,
    fit_ellipse,
    reconstruct_wavefunction,
)
from .measurement import (
    ComptonConfig,
    MeasurementRecord,
    PrismConstants,
    compton_linearize,
    compton_solve,
    reconstruct_ellipse_experiment,
    sample_gaussian_state,
    screen_position,
)
from .propagator import PropagationPlan, propagate
from .state import (
    GaussianParams,
    Grid,
    Moments,
    PhysicalConstants,
    PolarFields,
    WaveFunction,
    gaussian_packet,
    moments,
    polar_decompose,
    superpose,
)
from .wigner import PhaseSpaceField, contour_fraction, hausdorff_distance, wigner_transform

__version__ = "0.1.0"
