"""Closed-form evolution of the free, uniformly accelerated and harmonic Gaussians.

Oracles: grid moments of the closed-form states, the split-step propagator
and the coefficient formulas evaluated independently in each test.
"""
import numpy as np
import pytest

from fermigf import (
    GaussianParams,
    Grid,
    HarmonicGaussianParams,
    PhysicalConstants,
    SystemSpec,
    analytic_ellipse,
    analytic_moments,
    center_parabola,
    evolve_free,
    evolve_uniform_force,
    fermi_branches,
    fit_ellipse,
    gaussian_packet,
    harmonic_state,
    moments,
)
from fermigf.dynamics import closed_form_state
from fermigf.errors import PacketOutOfBoxError, ZeroForceError
from fermigf.fermi import phase_aligned_distance
from fermigf.propagator import propagate_to_times

from conftest import l2

UNIT = PhysicalConstants()
FIG3 = HarmonicGaussianParams.from_B(0.1, 1.0, UNIT, Q0=np.sqrt(20.0))
COHERENT = HarmonicGaussianParams.from_B(1.0, 1.0, UNIT, Q0=np.sqrt(20.0))


def test_system_validation():
    with pytest.raises(ValueError):
        SystemSpec("magnetic")
    with pytest.raises(ValueError):
        SystemSpec.harmonic(0.0)
    with pytest.raises(ValueError):
        HarmonicGaussianParams(alpha=-1.0)
    with pytest.raises(ValueError):
        HarmonicGaussianParams.from_B(0.0, 1.0, UNIT)


def test_B_round_trip():
    c = PhysicalConstants(hbar=0.5, mass=3.0)
    p = HarmonicGaussianParams.from_B(0.3, 2.0, c)
    assert p.B(2.0, c) == pytest.approx(0.3, rel=1e-14)


# ---------------------------------------------------------------- free

def test_free_t0_is_initial_packet(grid):
    params = GaussianParams(0.5, 2.0, 1.0)
    np.testing.assert_allclose(evolve_free(params, 0.0, grid).amplitudes,
                               gaussian_packet(params, grid).amplitudes, atol=1e-15)


def test_free_tau1_width(grid):
    assert moments(evolve_free(GaussianParams(), 1.0, grid)).var_q == pytest.approx(1.0, abs=1e-10)


def test_free_backward_then_forward(wide_grid):
    params = GaussianParams(0.0, 0.5, 1.0)
    start = evolve_free(params, -2.0, wide_grid)
    end = propagate_to_times(start, SystemSpec.free(), [4.0], 1e-3)[0]
    assert l2(end, evolve_free(params, 2.0, wide_grid)) < 1e-6


def test_free_out_of_box(grid):
    with pytest.raises(PacketOutOfBoxError):
        evolve_free(GaussianParams(0.0, 5.0, 1.0), 4.0, grid)


# ---------------------------------------------------------------- uniform force

def test_zero_force_is_free(grid):
    params = GaussianParams(0.3, -1.0, 0.9)
    np.testing.assert_array_equal(evolve_uniform_force(params, 0.0, 1.3, grid).amplitudes,
                                  evolve_free(params, 1.3, grid).amplitudes)


def test_fig2_centre(grid):
    m = moments(evolve_uniform_force(GaussianParams(), 1.5, 1.0, grid))
    # [PAPER] q = F0t²/2m = 0.75δ, ⟨p⟩ = F0t = 1.5ħ/δ
    assert m.mean_q == pytest.approx(0.75, abs=1e-8)
    assert m.mean_p == pytest.approx(1.5, abs=1e-8)


@pytest.mark.parametrize("F0,t", [(1.5, 1.0), (-0.7, 2.0), (3.0, -1.5)])
def test_uniform_moments_equal_free(F0, t, wide_grid):
    params = GaussianParams(0.0, 0.5, 1.0)
    a = moments(evolve_uniform_force(params, F0, t, wide_grid))
    b = moments(evolve_free(params, t, wide_grid))
    assert a.var_q == pytest.approx(b.var_q, abs=1e-9)
    assert a.var_p == pytest.approx(b.var_p, abs=1e-9)
    assert a.correlation_k == pytest.approx(b.correlation_k, abs=1e-9)


def test_uniform_force_shape_equals_free_exactly():
    params = GaussianParams(1.0, -0.5, 1.3)
    for t in np.linspace(-3, 3, 13):
        f = analytic_ellipse(SystemSpec.free(), params, t)
        u = analytic_ellipse(SystemSpec.uniform_force(1.5), params, t)
        assert (f.a, f.b, f.c) == (u.a, u.b, u.c)


# ---------------------------------------------------------------- harmonic

def test_coherent_state_translates_rigidly(grid):
    widths = []
    for t in np.linspace(0.0, 2 * np.pi, 9):
        psi = harmonic_state(COHERENT, 1.0, t, grid)
        m = moments(psi)
        widths.append(m.var_q)
        shifted = gaussian_packet(GaussianParams(np.sqrt(20.0) * np.cos(t), 0.0, 1.0), grid)
        np.testing.assert_allclose(np.abs(psi.amplitudes) ** 2, np.abs(shifted.amplitudes) ** 2,
                                   atol=1e-12)
    assert np.ptp(widths) < 1e-10


def test_squeezed_width_at_phase0(grid):
    m = moments(harmonic_state(FIG3, 1.0, 0.0, grid))
    a_r = np.sqrt(0.1)  # mω0√B/ħ
    assert m.var_q == pytest.approx(1.0 / (2 * a_r), rel=1e-10)


def test_harmonic_normalized(grid):
    for t in np.linspace(0, 7, 15):
        assert abs(harmonic_state(FIG3, 1.0, t, grid).norm() - 1.0) < 1e-10


@pytest.mark.parametrize("t", [0.0, 0.4, 2.0])
def test_harmonic_period(t, grid):
    a = harmonic_state(FIG3, 1.0, t, grid)
    b = harmonic_state(FIG3, 1.0, t + 2 * np.pi, grid)
    assert phase_aligned_distance(b, a) < 1e-8


def test_harmonic_phase_is_continuous(grid):
    """The normalisation root follows C + i√B S, so nearby times stay close."""
    ts = np.linspace(0.0, 2 * np.pi, 400)
    prev = harmonic_state(FIG3, 1.0, ts[0], grid)
    for t in ts[1:]:
        cur = harmonic_state(FIG3, 1.0, t, grid)
        assert l2(cur, prev) < 0.5
        prev = cur


def test_harmonic_out_of_box():
    with pytest.raises(PacketOutOfBoxError):
        harmonic_state(HarmonicGaussianParams.from_B(0.1, 1.0, UNIT, Q0=12.0), 1.0, 0.0, Grid())


def test_closed_form_state_type_checks(grid):
    with pytest.raises(TypeError):
        closed_form_state(SystemSpec.harmonic(1.0), GaussianParams(), 0.0, grid, UNIT)
    with pytest.raises(TypeError):
        closed_form_state(SystemSpec.free(), FIG3, 0.0, grid, UNIT)


# ---------------------------------------------------------------- analytic_ellipse

def test_fig1_ellipses_have_unit_determinant():
    for tau in range(-3, 4):
        e = analytic_ellipse(SystemSpec.free(), GaussianParams(0.0, 2.0, 1.0), float(tau))
        assert e.determinant == pytest.approx(1.0, abs=1e-12)
        assert (e.center_q, e.center_p) == (2.0 * tau, 2.0)


def test_harmonic_ellipse_at_quarter_phase():
    e = analytic_ellipse(SystemSpec.harmonic(1.0), FIG3, np.pi / 4)
    B, C, S = 0.1, np.sqrt(0.5), np.sqrt(0.5)
    den = C * C + B * S * S
    a_r, a_i = np.sqrt(B) / den, (1 - B) * C * S / den
    assert e.a == pytest.approx((a_r**2 + a_i**2) / a_r, rel=1e-12)
    assert e.b == pytest.approx(1 / a_r, rel=1e-12)
    assert e.c == pytest.approx(a_i / a_r, rel=1e-12)
    assert e.center_q == pytest.approx(np.sqrt(20.0) * C)
    assert e.center_p == pytest.approx(-np.sqrt(20.0) * S)


def test_harmonic_determinant_16_phases():
    c = PhysicalConstants(hbar=0.8, mass=1.7)
    params = HarmonicGaussianParams.from_B(0.1, 1.3, c, Q0=1.0, phi=0.2)
    for k in range(16):
        e = analytic_ellipse(SystemSpec.harmonic(1.3), params, k * np.pi / 8 / 1.3, c)
        assert abs(e.determinant - 1.0 / c.hbar**2) < 1e-12 / c.hbar**2


def test_coherent_circle():
    c = PhysicalConstants(hbar=1.0, mass=2.0)
    omega = 0.5
    params = HarmonicGaussianParams.from_B(1.0, omega, c, Q0=2.0)
    for t in np.linspace(0, 2 * np.pi / omega, 9):
        e = analytic_ellipse(SystemSpec.harmonic(omega), params, t, c)
        # in (q, p/mω0) both semi-axes are √(ħ/mω0)
        mw = c.mass * omega
        assert 1 / np.sqrt(e.a) == pytest.approx(np.sqrt(c.hbar / mw), rel=1e-12)
        assert 1 / np.sqrt(e.b) / mw == pytest.approx(np.sqrt(c.hbar / mw), rel=1e-12)
        assert e.c == pytest.approx(0.0, abs=1e-15)


# ---------------------------------------------------------------- center_parabola

def test_parabola_vertex():
    params = GaussianParams(1.0, 0.5, 1.0)
    np.testing.assert_allclose(center_parabola(params, 2.0, UNIT, [0.5]), [[1.0, 0.5]])


def test_parabola_direct_formula():
    np.testing.assert_allclose(center_parabola(GaussianParams(), 1.0, UNIT, [2.0]), [[2.0, 2.0]])


def test_parabola_matches_centres():
    params = GaussianParams(0.3, -0.4, 1.0)
    F0 = 1.5
    for t in (1.0, 2.0, 3.0):
        e = analytic_ellipse(SystemSpec.uniform_force(F0), params, t)
        q, p = center_parabola(params, F0, UNIT, [params.p0 + F0 * t])[0]
        assert (q, p) == pytest.approx((e.center_q, e.center_p), abs=1e-12)


def test_parabola_zero_force():
    with pytest.raises(ZeroForceError):
        center_parabola(GaussianParams(), 0.0, UNIT, [1.0])


# ---------------------------------------------------------------- analytic_moments

def test_free_tau1_analytic_moments():
    m = analytic_moments(SystemSpec.free(), GaussianParams(), 1.0)
    assert (m.var_q, m.var_p, m.correlation_k) == pytest.approx((1.0, 0.5, 0.5))


def test_coherent_K_vanishes():
    for t in np.linspace(0, 6, 13):
        assert analytic_moments(SystemSpec.harmonic(1.0), COHERENT, t).correlation_k == 0.0


def test_squeezed_K_quarter_phase(grid):
    m = analytic_moments(SystemSpec.harmonic(1.0), FIG3, np.pi / 4)
    expected = -0.9 / (4 * np.sqrt(0.1))
    assert m.correlation_k == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(-0.7115, abs=1e-4)
    assert moments(harmonic_state(FIG3, 1.0, np.pi / 4, grid)).correlation_k == pytest.approx(
        expected, abs=1e-8)


CASES = [
    (SystemSpec.free(), GaussianParams(0.0, 2.0, 1.0), np.arange(-3.0, 4.0)),
    (SystemSpec.uniform_force(1.5), GaussianParams(0.0, 0.0, 1.0), np.arange(-3.0, 4.0)),
    (SystemSpec.harmonic(1.0), FIG3, np.arange(8) * np.pi / 4),
]


@pytest.mark.parametrize("system,params,times", CASES, ids=["free", "uniform", "harmonic"])
def test_grid_moments_match_analytic(system, params, times, wide_grid):
    for t in times:
        psi = closed_form_state(system, params, float(t), wide_grid, UNIT)
        got, ref = moments(psi), analytic_moments(system, params, float(t))
        for f in ("mean_q", "mean_p", "var_q", "var_p", "correlation_k"):
            assert getattr(got, f) == pytest.approx(getattr(ref, f), abs=1e-7)
        assert abs(ref.uncertainty_excess(1.0)) < 1e-12
        assert abs(got.uncertainty_excess(1.0)) < 1e-8


@pytest.mark.parametrize("system,params,times", CASES, ids=["free", "uniform", "harmonic"])
def test_fit_matches_analytic(system, params, times, wide_grid):
    for t in times[::2]:
        fit, _ = fit_ellipse(fermi_branches(closed_form_state(system, params, float(t), wide_grid, UNIT)))
        ref = analytic_ellipse(system, params, float(t))
        scale = np.sqrt(ref.a * ref.b)
        assert abs(fit.a - ref.a) / ref.a < 1e-5
        assert abs(fit.b - ref.b) / ref.b < 1e-5
        assert abs(fit.c - ref.c) / scale < 1e-5
