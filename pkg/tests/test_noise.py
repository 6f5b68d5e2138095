import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import simpson

import oracles
from conftest import null_control
from memsim.dynamics import build_propagator
from memsim.noise import (NoiseBudget, added_noise_variance, compute_budget,
                          compute_projections, cross_quadrature_covariance, depletion_metric,
                          fwm_noise_power, memory_channel_noise_power, noise_covariances,
                          output_quadrature_variance, signal_spin_covariance,
                          spin_noise_budget, spin_quadrature_variance)
from memsim.params import derive_rates
from memsim.signal import make_target_mode


def _integral(f, t):
    return simpson(f.real, x=t) + 1j * simpson(f.imag, x=t)


@pytest.fixture(scope="module")
def null_setup(params):
    m = make_target_mode(12 / (2 * params.kappa), params.kappa, 2048)
    c = null_control(m.t)
    tab = build_propagator(params, c, m.grid)
    return m, c, tab


def test_covariances_perfectly_correlated(params, solved):
    _, c, _, _, _ = solved(12.0)
    cov = noise_covariances(c, params)
    np.testing.assert_allclose(np.abs(cov.a_es) ** 2, cov.a_ee * cov.a_ss, rtol=1e-12)


def test_projection_endpoints(solved):
    m, c, tab, match, _ = solved(12.0)
    pr = compute_projections(tab, m)
    assert pr.p_de[-1] == 0 and pr.p_ds[-1] == 0
    assert pr.p_ds[0] == pytest.approx(match.projection, rel=1e-6)


def test_projections_null_control(params, null_setup):
    m, c, tab = null_setup
    pr = compute_projections(tab, m)
    assert np.all(pr.p_ds == 0)
    k_eff = derive_rates(params).kappa_eff
    for k in (0, 500, 1500):
        t = m.t[k:]
        ref = 2 * params.kappa * simpson(m.samples[k:] * np.exp(-k_eff * (t - t[0])), x=t)
        assert pr.p_de[k] == pytest.approx(ref, rel=1e-6, abs=1e-12)


def test_projections_against_adjoint_ode(params, solved):
    m, c, tab, _, _ = solved(12.0)
    pr = compute_projections(tab, m)
    idx = np.r_[0:len(m.t) - 1:8, len(m.t) - 1]
    p_de, p_ds = oracles.adjoint_projections(params, c.t, c.control, m.t, m.samples,
                                             params.kappa, m.t[idx])
    assert np.abs(pr.p_de[idx] - p_de).max() < 1e-6
    assert np.abs(pr.p_ds[idx] - p_ds).max() < 1e-6


def test_fwm_power_independent_kernels(params, solved):
    # kernels from the adjoint ODE at twice the resolution, integrand assembled by hand
    m, c, tab, _, budget = solved(12.0)
    m2, c2, _, _, _ = solved(12.0, 8192)
    p_de, p_ds = oracles.adjoint_projections(params, c2.t, c2.control, m2.t, m2.samples,
                                             params.kappa, m2.t)
    om = c2.control
    g = params.gamma_perp
    d2 = params.delta ** 2
    pref = params.g2n / (2 * params.omega_sg * params.delta) ** 2
    integrand = np.abs(om) ** 2 * (
        np.abs(p_de) ** 2 * 2 * g * np.abs(om) ** 2 / d2
        + 2 * np.real(p_de * np.conj(p_ds) * 2 * g * params.g_sqrt_n * om / d2)
        + np.abs(p_ds) ** 2 * (2 * g * params.g2n / d2 + 2 * params.kappa))
    ref = pref * simpson(integrand, x=m2.t)
    assert budget.g_dminus_sq == pytest.approx(ref, rel=1e-5)


def test_fwm_null_control(params, null_setup):
    m, c, tab = null_setup
    pr = compute_projections(tab, m)
    assert fwm_noise_power(pr, c, params) == 0.0


def test_fwm_quarter_under_doubled_splitting(params, solved):
    m, c, tab, _, _ = solved(12.0)
    pr = compute_projections(tab, m)
    a = fwm_noise_power(pr, c, params)
    b = fwm_noise_power(pr, c, params.scaled(omega_sg=2 * params.omega_sg))
    assert b / a == pytest.approx(0.25, rel=1e-12)


def test_fwm_integrand_positive_semidefinite(params, solved):
    m, c, tab, _, _ = solved(8.0)
    cov = noise_covariances(c, params)
    # covariance of (F_S^dag, F_E^dag + sqrt(2 kappa) E_in^dag)
    B = np.empty((len(m.t), 2, 2), dtype=complex)
    B[:, 0, 0] = cov.a_ss
    B[:, 0, 1] = cov.a_es
    B[:, 1, 0] = np.conj(cov.a_es)
    B[:, 1, 1] = cov.a_ee + 2 * params.kappa
    np.testing.assert_allclose(np.linalg.det(B).real, 2 * params.kappa * cov.a_ss,
                               rtol=1e-9, atol=1e-6 * params.kappa * cov.a_ss.max())
    assert np.linalg.eigvalsh(B).min() >= -1e-9 * np.abs(B).max()


def test_memory_channel_reflection_only(params, null_setup):
    p = params.scaled(gamma_perp=0.0)
    m, c, _ = null_setup
    tab = build_propagator(p, c, m.grid)
    pr = compute_projections(tab, m)
    ref = simpson(2 * p.kappa * np.abs(pr.p_de - m.samples) ** 2, x=m.t)
    plus = memory_channel_noise_power(pr, c, p, m)
    assert plus == pytest.approx(ref, rel=1e-12)
    # free decay: closure is exact
    assert abs(pr.p_de[0]) ** 2 + plus == pytest.approx(1.0, abs=1e-8)


def test_memory_channel_perfect_matching_vanishes(params, null_setup):
    from memsim.noise import Projections
    p = params.scaled(gamma_perp=0.0)
    m, c, _ = null_setup
    pr = Projections(m.samples.astype(complex), np.zeros_like(m.samples, dtype=complex))
    assert memory_channel_noise_power(pr, c, p, m) == 0.0


def test_added_variance_limits():
    assert added_noise_variance(1.0, 0.0) == 0.0
    assert added_noise_variance(0.0, 0.0) == 0.25


@given(st.floats(1e-6, 1.0), st.floats(0.0, 10.0))
def test_added_variance_nonnegative(eta, gm):
    v = added_noise_variance(eta, gm)
    assert v >= 0
    assert 4 * v == pytest.approx(1 - eta + 2 * gm, abs=1e-12)


def _budget(**kw):
    base = dict(eta=1.0, eta_green=1.0, theta_R=0.0, g_de_sq=0.0, g_dplus_sq=0.0,
                g_dminus_sq=0.0, added_var_x4=0.0, sum_rule_d=0.0, sum_rule_s=0.0,
                comm_ds=0j, spin_gminus_sq=0.0, spin_var_x4=1.0, covariance_param=0j,
                depletion=0.0, depletion_integral=0.0)
    base.update(kw)
    return NoiseBudget(**base)


def test_output_variance_cases(solved):
    assert output_quadrature_variance(_budget(eta=0.7), 0.0) == 0.25
    assert output_quadrature_variance(_budget(), -1.0) == 0.0
    with pytest.raises(ValueError):
        output_quadrature_variance(_budget(), -1.5)
    b = solved(12.0)[4]
    assert output_quadrature_variance(b, 0.0) == pytest.approx(0.25 * (1 + 2 * b.g_dminus_sq))


def test_spin_noise_null_control(params, null_setup):
    m, c, tab = null_setup
    s = spin_noise_budget(tab, c, params)
    assert s.g_sminus_sq == 0.0
    assert s.sum_rule_s == pytest.approx(0.0, abs=1e-14)
    assert spin_quadrature_variance(s.g_ss, s.g_sminus_sq) == 0.25


def test_spin_sum_rule_lossless_limit(params, solved):
    m, c, _, _, _ = solved(12.0)
    p = params.scaled(gamma_perp=0.0, omega_sg=params.omega_sg * 1e8)
    tab = build_propagator(p, c, m.grid)
    assert abs(spin_noise_budget(tab, c, p).sum_rule_s) < 1e-7


def test_covariance_null_and_scaling(params, null_setup, solved):
    m, c, tab = null_setup
    assert signal_spin_covariance(compute_projections(tab, m), tab, c, params) == 0
    m, c, tab, _, _ = solved(12.0)
    pr = compute_projections(tab, m)
    a = signal_spin_covariance(pr, tab, c, params)
    b = signal_spin_covariance(pr, tab, c, params.scaled(omega_sg=2 * params.omega_sg))
    assert abs(b / a - 0.25) < 1e-12


def test_cross_covariance_real_part():
    K = 0.2 + 0.1j
    assert cross_quadrature_covariance(K, 0.0, 0.0) == pytest.approx(0.1)
    assert cross_quadrature_covariance(K, math.pi / 2, 0.0) == pytest.approx(0.05)


def test_depletion_metric(params, solved):
    m, c, _, _, _ = solved(20.0)
    D, integral = depletion_metric(c, params, m.T)
    assert integral < D
    twice = type(c)(c.t, c.omega_s_product, c.spin_pop, c.spin_phase, c.spin,
                    2 * c.control, c.eta, c.residual, c.floor)
    assert depletion_metric(twice, params, m.T)[0] == pytest.approx(4 * D, rel=1e-12)
    assert depletion_metric(null_control(m.t), params, m.T) == (0.0, 0.0)


@pytest.mark.parametrize("tau", [4.0, 12.0, 20.0])
def test_sum_rule_residuals_equal_leak(params, solved, tau):
    """The residuals are exactly the uncompensated ground-state leak plus the pair terms."""
    m, c, tab, _, b = solved(tau)
    pr = compute_projections(tab, m)
    leak = noise_covariances(c, params).a_ss
    G = tab.to_end()
    g_se, g_ss = G[:, 1, 0], G[:, 1, 1]
    assert b.sum_rule_d == pytest.approx(
        -simpson(leak * np.abs(pr.p_ds) ** 2, x=m.t) - b.g_dminus_sq, abs=1e-10)
    assert b.sum_rule_s == pytest.approx(
        -simpson(leak * np.abs(g_ss) ** 2, x=m.t) - b.spin_gminus_sq, abs=1e-10)
    expected = -_integral(leak * pr.p_ds * np.conj(g_ss), m.t) - b.covariance_param
    assert abs(b.comm_ds - expected) < 1e-10


@pytest.mark.parametrize("tau", [4.0, 8.0, 12.0, 16.0, 20.0])
def test_budget_invariants(solved, tau):
    b = solved(tau)[4]
    assert b.added_var_x4 >= 0 and 0 < b.eta <= 1
    for v in (b.g_de_sq, b.g_dplus_sq, b.g_dminus_sq, b.spin_gminus_sq):
        assert v >= 0
    assert b.sum_rules_closed(2.0)
    assert b.added_var_x4 == (1 - b.eta) + 2 * b.g_dminus_sq
    assert b.spin_var_x4 == pytest.approx(1 + 2 * b.spin_gminus_sq)
    assert b.one_minus_eta == 1 - b.eta


def test_budget_as_dict_flat(solved):
    d = solved(12.0)[4].as_dict()
    assert "comm_ds_re" in d and "covariance_param_im" in d
    assert all(isinstance(v, float) for v in d.values())
