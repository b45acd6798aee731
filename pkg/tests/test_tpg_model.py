import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.constants import c, epsilon_0

from tpgsim import units
from tpgsim.errors import DomainError, RegimeError, ValidationError, WindowCollapse
from tpgsim.tpg_model import (
    Regime,
    analytic_flux,
    classify_regime,
    coupling_C3,
    coupling_f3,
    delta_k_eff,
    flux_density,
    flux_density_mode3,
    flux_spectrum,
    gain_term,
    gain_term_dimension,
    integrate_flux,
    lobe_edges,
    miller_chi3,
    polarization_yield,
    propagation_factor,
    regime_map,
    regime_threshold,
    sin2_branch,
    sinh2_branch,
)

CHI3_REF = 14.6e-22
REF_PROCESS = [539e-9, 1617e-9, 1617e-9, 1617e-9]


def target_process(anchor):
    return [anchor.lambda_p, anchor.lambda_1, anchor.lambda_2, anchor.lambda_3]


# -- Miller's rule ---------------------------------------------------------

def test_miller_identity(anchor):
    t = target_process(anchor)
    assert miller_chi3(CHI3_REF, t, t) == CHI3_REF


def test_miller_inverse(anchor):
    t = target_process(anchor)
    fwd = miller_chi3(1.0, REF_PROCESS, t)
    back = miller_chi3(1.0, t, REF_PROCESS)
    assert fwd * back == pytest.approx(1.0, rel=1e-12)


def test_miller_frozen(anchor):
    # regression pin for the shipped coefficients and the THG reference process
    got = miller_chi3(CHI3_REF, REF_PROCESS, target_process(anchor))
    assert got == pytest.approx(14.668987e-22, rel=1e-6)


# -- coupling constants ----------------------------------------------------

def test_f3_hand_evaluation(anchor):
    w = anchor.omega_degenerate
    wp, w1, _, _ = anchor.omegas
    n = [float(anchor.index(i, lam)) for i, lam in
         enumerate([anchor.lambda_p, anchor.lambda_1, anchor.lambda_2, anchor.lambda_3])]
    hand = w * (wp - w1 - w) / ((8 * math.pi * c**2 * epsilon_0) ** 2 * n[0] * n[1] * n[2] * n[3])
    assert float(coupling_f3(w, anchor)) == pytest.approx(hand, rel=1e-12)


def test_f3_positive_and_mirror(anchor, disp_inputs):
    edges = lobe_edges(disp_inputs, 50)
    w = np.linspace(edges[0], edges[-1], 301)
    f = coupling_f3(w, anchor)
    assert np.all(f > 0)
    wp, w1, _, _ = anchor.omegas
    mirrored = coupling_f3(wp - w1 - w, anchor.swapped_23())
    assert np.allclose(mirrored, f, rtol=1e-12)


def test_gain_term_is_inverse_area():
    assert gain_term_dimension() == units.INV_AREA


def test_four_frequency_numerator_fails_the_audit():
    omega = 1.0 / units.s
    f3 = omega**4 / (8 * math.pi * units.c**2 * units.epsilon_0) ** 2
    g = (units.W / units.m**2) ** 2 * f3 * (units.m**2 / units.V**2) ** 2
    assert g.dim == (-2, -2, 0, 0)


def test_C3_without_stimulation(disp_inputs):
    inp = disp_inputs.with_(I_10=0.0)
    w = np.linspace(*lobe_edges(inp, 10)[[0, -1]], 51)
    C = coupling_C3(w, inp)
    assert np.allclose(C, -delta_k_eff(w, inp) ** 2 / 4, rtol=1e-15)
    assert np.all(C <= 0)


def test_C3_at_zero_mismatch(lin, operating_inputs):
    w0 = lin.omega_zero
    assert float(coupling_C3(w0, operating_inputs)) > 0
    assert float(coupling_C3(w0, operating_inputs.with_(I_p0=0.0))) == pytest.approx(0.0, abs=1e-9)


def test_C3_negative_across_window_at_operating_point(operating_inputs):
    w = np.linspace(*lobe_edges(operating_inputs, 50)[[0, -1]], 20001)
    assert np.all(coupling_C3(w, operating_inputs) < 0)


def test_operating_point_has_no_strong_sample(operating_inputs):
    # band 1/L^2: Strong means sqrt(C)*L > 1
    edges = lobe_edges(operating_inputs, 50)
    w = np.append(np.linspace(edges[0], edges[-1], 20001), operating_inputs.linearization.omega_zero)
    C = coupling_C3(w, operating_inputs)
    assert not np.any(classify_regime(C, 1 / operating_inputs.L**2) == Regime.STRONG)
    assert np.sqrt(np.max(C)) * operating_inputs.L < 0.1


def test_coupling_rejects_bad_dimension(operating_inputs):
    with pytest.raises(units.DimensionError):
        coupling_C3(1e15 * units.m, operating_inputs)


@pytest.mark.parametrize("C,band,want", [(-10.0, 1e-3, Regime.WEAK), (10.0, 1e-3, Regime.STRONG),
                                         (0.0, 1e-3, Regime.BOUNDARY), (0.0, None, Regime.BOUNDARY)])
def test_classify(C, band, want):
    assert classify_regime(C, band) == want


def test_classify_rejects_negative_band():
    with pytest.raises(ValidationError):
        classify_regime(1.0, -1.0)


# -- kernel ----------------------------------------------------------------

@pytest.mark.parametrize("u", [1e-4, 1e-6, 1e-8, 1e-10, 1e-12])
def test_branches_approach_z2_limit(u):
    Z = 0.01
    C = u / Z**2
    weak = sin2_branch(-C, Z) / Z**2
    strong = sinh2_branch(C, Z) / Z**2
    # S(u) = 1 + u/3 + O(u^2)
    assert abs(weak - 1) == pytest.approx(u / 3, rel=1e-3, abs=1e-15)
    assert abs(strong - 1) == pytest.approx(u / 3, rel=1e-3, abs=1e-15)
    if u <= 1e-6:
        assert abs(weak - 1) <= 1e-6 and abs(strong - 1) <= 1e-6


@given(st.floats(-50.0, 50.0).filter(lambda u: abs(u) > 1e-6))
def test_propagation_factor_matches_branches(u):
    Z = 0.02
    C = u / Z**2
    ref = sinh2_branch(C, Z) if C > 0 else sin2_branch(C, Z)
    assert float(propagation_factor(C, Z)) == pytest.approx(float(ref), rel=1e-12)


def test_propagation_factor_continuous_at_series_switch():
    Z = 1.0
    u = np.array([-1.0000001e-8, -0.9999999e-8, 0.9999999e-8, 1.0000001e-8])
    s = propagation_factor(u, Z)
    assert np.allclose(s, 1 + u / 3, rtol=1e-15, atol=0)


@given(st.floats(0.1, 10.0), st.floats(-1e3, 1e3), st.floats(1e-3, 0.05))
def test_scaling_consistency(k, C, Z):
    gain = 7.0
    a = gain * propagation_factor(C, Z)
    b = gain / k**2 * propagation_factor(C / k**2, k * Z)
    assert float(b) == pytest.approx(float(a), rel=1e-9)


@given(st.floats(1.0, 1e6), st.floats(1e-4, 0.05))
def test_strong_monotone_in_length(C, Z):
    assert propagation_factor(C, Z * 1.01) > propagation_factor(C, Z)


# -- spectral density ------------------------------------------------------

def test_zero_chi3(disp_inputs):
    w = np.linspace(*lobe_edges(disp_inputs, 10)[[0, -1]], 11)
    assert np.all(flux_density(w, disp_inputs.with_(chi3=0.0)) == 0)
    assert integrate_flux(disp_inputs.with_(chi3=0.0)).value == 0


@settings(max_examples=30, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(0.0, 40.0), st.floats(1e-3, 1.0))
def test_density_nonnegative_and_bounded(x, scale, delta):
    from tpgsim.experiment import load_experiment_config

    inp = load_experiment_config().template()
    inp = inp.with_(delta=delta, I_10=inp.I_10 * scale)
    edges = lobe_edges(inp, 20)
    w = 0.5 * (edges[0] + edges[-1]) + 0.5 * x * (edges[-1] - edges[0])
    n2 = float(flux_density(w, inp))
    assert n2 >= 0
    C = float(coupling_C3(w, inp))
    if C < 0:
        assert n2 <= float(gain_term(w, inp)) / (2 * math.pi) / abs(C) * (1 + 1e-12)


def test_mode3_mirror(disp_inputs):
    wp, w1, _, _ = disp_inputs.anchor.omegas
    w = np.linspace(*lobe_edges(disp_inputs, 5)[[0, -1]], 41)
    assert np.array_equal(flux_density_mode3(wp - w1 - w, disp_inputs), flux_density(w, disp_inputs))


def test_mirror_integrals(disp_inputs):
    wp, w1, _, _ = disp_inputs.anchor.omegas
    edges = lobe_edges(disp_inputs, 50)
    w = np.linspace(edges[0], edges[-1], 400_001)
    n2 = np.trapezoid(flux_density(w, disp_inputs), w)
    wm = (wp - w1 - w)[::-1]
    n3 = np.trapezoid(flux_density_mode3(wm, disp_inputs), wm)
    assert n3 == pytest.approx(n2, rel=1e-9)


def test_spectrum_and_mirror(disp_inputs):
    spec = flux_spectrum(disp_inputs, n_lobes=3)
    assert np.all(spec.density >= 0)
    assert len(spec.omega) == len(spec.regime) == 2 * 3 * 16 + 1
    back = spec.mirror(disp_inputs).mirror(disp_inputs)
    assert np.allclose(back.omega, spec.omega, rtol=1e-15)


# -- integration -----------------------------------------------------------

def test_truncation_estimate_small(operating_inputs, disp_inputs):
    for inp in (operating_inputs, disp_inputs):
        res = integrate_flux(inp)
        assert res.error_estimate <= 0.01 * res.value


def test_truncation_estimate_bounds_lobe_doubling(operating_inputs):
    # the straight-line model can take 100 lobes at any delta
    r50 = integrate_flux(operating_inputs, n_lobes=50)
    r100 = integrate_flux(operating_inputs, n_lobes=100)
    assert abs(r100.value - r50.value) < r50.error_estimate


def test_dispersion_window_limit(disp_inputs):
    with pytest.raises(WindowCollapse):
        integrate_flux(disp_inputs.with_(delta=0.01))


def test_quadrature_density_convergence(disp_inputs):
    a = integrate_flux(disp_inputs, points_per_lobe=16).value
    b = integrate_flux(disp_inputs, points_per_lobe=32).value
    assert abs(a - b) < 1e-3 * b


def test_too_few_points_rejected(disp_inputs):
    with pytest.raises(ValidationError):
        integrate_flux(disp_inputs, points_per_lobe=8)


def test_bilinear_in_intensities(disp_inputs):
    a = integrate_flux(disp_inputs).value
    b = integrate_flux(disp_inputs.with_(I_p0=2 * disp_inputs.I_p0, I_10=2 * disp_inputs.I_10)).value
    assert b / a == pytest.approx(4.0, rel=5e-3)


def test_integration_deterministic(disp_inputs):
    assert integrate_flux(disp_inputs).value == integrate_flux(disp_inputs).value


def test_physical_window_flag(operating_inputs, disp_inputs):
    assert integrate_flux(disp_inputs).physical_window
    assert not integrate_flux(operating_inputs).physical_window


# -- closed form -----------------------------------------------------------

@pytest.mark.parametrize("model", ["linear", "dispersion"])
def test_analytic_matches_quadrature(model, operating_inputs):
    inp = operating_inputs if model == "linear" else operating_inputs.with_(delta=1.0, spectral_model=model)
    assert analytic_flux(inp) == pytest.approx(integrate_flux(inp).value, rel=0.05)


def test_analytic_linear_in_length(operating_inputs):
    assert analytic_flux(operating_inputs.with_(L=0.02)) == 2 * analytic_flux(operating_inputs)


@pytest.mark.parametrize("k", [0.003, 0.1, 0.5])
def test_analytic_linear_in_stimulation(operating_inputs, k):
    a = analytic_flux(operating_inputs.with_(I_10=k * operating_inputs.I_10))
    assert a / analytic_flux(operating_inputs) == pytest.approx(k, rel=1e-12)


def test_analytic_rejects_strong(operating_inputs):
    with pytest.raises(RegimeError):
        analytic_flux(operating_inputs.with_(I_10=operating_inputs.I_10 * 1e6))


# -- regime maps -----------------------------------------------------------

def test_regime_threshold_bisection(operating_inputs):
    star = regime_threshold(operating_inputs)
    w = operating_inputs.anchor.omega_degenerate
    rows = regime_map(operating_inputs, star * np.array([1 - 1e-6, 1 + 1e-6]), boundary_band=0.0)
    assert [r[2] for r in rows] == [Regime.WEAK, Regime.STRONG]
    at = operating_inputs.with_(I_p0=1.0, I_10=star)
    assert float(coupling_C3(w, at)) == pytest.approx(0.0, abs=1e-9 * float(delta_k_eff(w, at)) ** 2)


def test_regime_map_flips_once(operating_inputs):
    star = regime_threshold(operating_inputs)
    rows = regime_map(operating_inputs, star * np.logspace(-2, 2, 40))
    labels = [r[2] for r in rows]
    flips = sum(1 for a, b in zip(labels, labels[1:]) if a != b)
    assert flips == 1


# -- polarization ----------------------------------------------------------

def test_polarization_examples():
    assert polarization_yield(0.0, 0.0) == 1.0
    assert polarization_yield(math.pi / 2, 0.3) == pytest.approx(0.0, abs=1e-30)
    assert polarization_yield(math.pi / 4, math.pi / 4) == pytest.approx(0.25, abs=1e-15)


@given(st.floats(0.0, math.pi), st.floats(0.0, math.pi))
def test_polarization_law(a, b):
    got = polarization_yield(a, b)
    assert abs(got - math.cos(a) ** 2 * math.cos(b) ** 2) <= 1e-12
    assert 0.0 <= got <= 1.0


def test_polarization_domain():
    with pytest.raises(DomainError):
        polarization_yield(-0.5, 0.0)
    with pytest.raises(DomainError):
        polarization_yield(0.0, 3.5)
