"""Second-moment noise budget of the retrieved signal and residual spin.

All Langevin sources are vacuum and delta-correlated, so every noise power
is a time integral of a quadratic form in Green-function projections. The
negative-frequency (luminescence, four-wave-mixing) part carries the
prefactor g^2 N / (2 omega_sg Delta)^2 |Omega|^2; the positive-frequency
(memory channel) part carries the cavity input and the correlated atomic
pair F_E, F_S.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .control import ControlSolution, refined_extremum
from .dynamics import PropagatorTable
from .params import PhysicalParams
from .signal import SignalMode

SUM_RULE_FACTOR = 2.0


@dataclass(frozen=True, eq=False)
class NoiseCovariances:
    """Source powers [F_n(t), F_m^dag(t')] = A_nm(t) delta(t - t')."""

    a_ee: float
    a_ss: np.ndarray
    a_es: np.ndarray
    lum_prefactor: np.ndarray


def noise_covariances(c: ControlSolution, p: PhysicalParams) -> NoiseCovariances:
    d2 = p.delta ** 2
    return NoiseCovariances(
        a_ee=2.0 * p.gamma_perp * p.g2n / d2,
        a_ss=2.0 * p.gamma_perp * np.abs(c.control) ** 2 / d2,
        a_es=2.0 * p.gamma_perp * p.g_sqrt_n * c.control / d2,
        lum_prefactor=p.g_sqrt_n / (2.0 * p.omega_sg * p.delta) * c.control,
    )


@dataclass(frozen=True, eq=False)
class Projections:
    """P_dE(T, t_k), P_dS(T, t_k): Green kernels projected on the output mode."""

    p_de: np.ndarray
    p_ds: np.ndarray


def _cumulative_complex(y, t):
    # scipy's cumulative_simpson silently drops imaginary parts
    re = cumulative_simpson(y.real, x=t, axis=0, initial=0.0)
    im = cumulative_simpson(y.imag, x=t, axis=0, initial=0.0)
    return re + 1j * im


def compute_projections(tab: PropagatorTable, m: SignalMode) -> Projections:
    """Projections for every grid time from one backward cumulative pass.

    P(T, t) = 2 kappa [int_t^T E0(t') M(t') dt'] M(t)^-1, first row.
    """
    row = m.samples[:, None] * tab.M[:, 0, :]
    cum = _cumulative_complex(row, m.t)
    tail = cum[-1] - cum
    tail[-1] = 0.0
    proj = 2.0 * m.kappa * np.einsum("kj,kji->ki", tail, tab.M_inv)
    return Projections(proj[:, 0], proj[:, 1])


def _minus_form(x_e, x_s, y_e, y_s, cov: NoiseCovariances, p: PhysicalParams):
    """Integrand of the luminescence pair sum sum_nm x_n y_m^* B_nm.

    The negative-frequency sources are F_S^dag (coefficient of x_e) and
    F_E^dag + sqrt(2 kappa) E_in^dag (coefficient of x_s).
    """
    return (np.abs(cov.lum_prefactor) ** 2 * (
        x_e * np.conj(y_e) * cov.a_ss
        + x_e * np.conj(y_s) * cov.a_es
        + x_s * np.conj(y_e) * np.conj(cov.a_es)
        + x_s * np.conj(y_s) * (cov.a_ee + 2.0 * p.kappa)))


def _plus_form(x_e, x_s, y_e, y_s, direct_x, direct_y, c, p):
    """Memory-channel pair sum integrand: cavity input plus atomic F_E, F_S."""
    gn = p.g_sqrt_n
    atomic = (2.0 * p.gamma_perp / p.delta ** 2) * (
        (gn * x_e + np.conj(c.control) * x_s) * np.conj(gn * y_e + np.conj(c.control) * y_s))
    return 2.0 * p.kappa * (x_e - direct_x) * np.conj(y_e - direct_y) + atomic


def fwm_noise_power(pr: Projections, c: ControlSolution, p: PhysicalParams) -> float:
    """|G_d-|^2, the four-wave-mixing power in the detected mode."""
    cov = noise_covariances(c, p)
    val = simpson(_minus_form(pr.p_de, pr.p_ds, pr.p_de, pr.p_ds, cov, p).real, x=c.t)
    if val < -1e-12:
        raise ArithmeticError(f"negative four-wave-mixing power {val}")
    return max(float(val), 0.0)


def memory_channel_noise_power(pr: Projections, c: ControlSolution, p: PhysicalParams,
                               m: SignalMode) -> float:
    """|G_d+|^2, including the directly reflected input field."""
    f = _plus_form(pr.p_de, pr.p_ds, pr.p_de, pr.p_ds, m.samples, m.samples, c, p)
    val = simpson(f.real, x=c.t)
    if val < -1e-12:
        raise ArithmeticError(f"negative memory-channel power {val}")
    return max(float(val), 0.0)


def added_noise_variance(eta: float, g_dminus_sq: float) -> float:
    """Added quadrature variance 1/4 (1 - eta + 2 |G_d-|^2)."""
    return 0.25 * (1.0 - eta + 2.0 * g_dminus_sq)


def output_quadrature_variance(budget: "NoiseBudget", spin_excess: float,
                               theta_diff: float = 0.0) -> float:
    """Output quadrature variance for an initial spin with given normal-ordered excess.

    ``spin_excess`` is <:[e^{i theta} dS(0) + h.c.]^2:> evaluated by the caller
    at theta = ``theta_diff`` = theta_R - theta_h; 0 for coherent states.
    The excess is weighted by the Green-function transfer, which is what the
    dynamics actually deliver (a null control transfers nothing).
    """
    if spin_excess < -1.0:
        raise ValueError("normal-ordered quadrature excess cannot be below -1")
    return 0.25 * (1.0 + budget.eta_green * spin_excess + 2.0 * budget.g_dminus_sq)


def spin_quadrature_variance(g_ss: complex, g_sminus_sq: float, spin_excess: float = 0.0) -> float:
    """Residual spin quadrature variance; excess taken at theta = arg(G_SS) - theta_S."""
    if spin_excess < -1.0:
        raise ValueError("normal-ordered quadrature excess cannot be below -1")
    return 0.25 * (1.0 + abs(g_ss) ** 2 * spin_excess + 2.0 * g_sminus_sq)


@dataclass(frozen=True)
class SpinNoise:
    g_se: complex
    g_ss: complex
    g_sminus_sq: float
    g_splus_sq: float
    spin_var_x4: float
    sum_rule_s: float


def _spin_kernels(tab: PropagatorTable):
    G = tab.to_end()
    return G[:, 1, 0], G[:, 1, 1]


def spin_noise_budget(tab: PropagatorTable, c: ControlSolution, p: PhysicalParams) -> SpinNoise:
    g_se, g_ss = _spin_kernels(tab)
    cov = noise_covariances(c, p)
    minus = simpson(_minus_form(g_se, g_ss, g_se, g_ss, cov, p).real, x=c.t)
    zero = np.zeros_like(g_se)
    plus = simpson(_plus_form(g_se, g_ss, g_se, g_ss, zero, zero, c, p).real, x=c.t)
    rule = abs(g_se[0]) ** 2 + abs(g_ss[0]) ** 2 + plus - minus - 1.0
    return SpinNoise(complex(g_se[0]), complex(g_ss[0]), float(minus), float(plus),
                     float(1.0 + 2.0 * minus), float(rule))


def signal_spin_covariance(pr: Projections, tab: PropagatorTable, c: ControlSolution,
                           p: PhysicalParams) -> complex:
    """Luminescence pair sum K = G_d- G_S-^* <Phi_S^(-)dag Phi_d^(-)>."""
    g_se, g_ss = _spin_kernels(tab)
    cov = noise_covariances(c, p)
    f = _minus_form(pr.p_de, pr.p_ds, g_se, g_ss, cov, p)
    return complex(simpson(f.real, x=c.t) + 1j * simpson(f.imag, x=c.t))


def memory_pair_sum(pr: Projections, tab: PropagatorTable, c: ControlSolution,
                    p: PhysicalParams, m: SignalMode) -> complex:
    """Memory-channel analogue K_+ = G_d+ G_S+^* [Phi_d^(+), Phi_S^(+)dag]."""
    g_se, g_ss = _spin_kernels(tab)
    f = _plus_form(pr.p_de, pr.p_ds, g_se, g_ss, m.samples, np.zeros_like(g_se), c, p)
    return complex(simpson(f.real, x=c.t) + 1j * simpson(f.imag, x=c.t))


def cross_quadrature_covariance(K: complex, theta_h: float, theta_s: float) -> float:
    """Symmetrized signal-spin quadrature covariance for a vacuum initial spin."""
    return 0.5 * float((np.exp(-1j * (theta_h - theta_s)) * K).real)


def depletion_metric(c: ControlSolution, p: PhysicalParams, T: float):
    """(max_t rate * T, int rate dt) for the ground-state leak 2 gamma |Omega|^2/Delta^2."""
    rate = 2.0 * p.gamma_perp * np.abs(c.control) ** 2 / p.delta ** 2
    peak = refined_extremum(rate, int(np.argmax(rate)))
    return float(peak * T), float(simpson(rate, x=c.t))


@dataclass(frozen=True)
class NoiseBudget:
    eta: float
    eta_green: float
    theta_R: float
    g_de_sq: float
    g_dplus_sq: float
    g_dminus_sq: float
    added_var_x4: float
    sum_rule_d: float
    sum_rule_s: float
    comm_ds: complex
    spin_gminus_sq: float
    spin_var_x4: float
    covariance_param: complex
    depletion: float
    depletion_integral: float

    @property
    def one_minus_eta(self) -> float:
        return 1.0 - self.eta

    def sum_rules_closed(self, factor: float = SUM_RULE_FACTOR) -> bool:
        bound = factor * self.depletion
        return (abs(self.sum_rule_d) <= bound and abs(self.sum_rule_s) <= bound
                and abs(self.comm_ds) <= bound)

    def as_dict(self):
        d = asdict(self)
        for key in ("comm_ds", "covariance_param"):
            z = d.pop(key)
            d[key + "_re"], d[key + "_im"] = z.real, z.imag
        return d


def compute_budget(tab: PropagatorTable, m: SignalMode, c: ControlSolution,
                   p: PhysicalParams) -> NoiseBudget:
    """Assemble the full noise budget for one duration."""
    pr = compute_projections(tab, m)
    g_de = complex(pr.p_de[0])
    p_ds0 = complex(pr.p_ds[0])
    eta_green = abs(p_ds0) ** 2
    minus = fwm_noise_power(pr, c, p)
    plus = memory_channel_noise_power(pr, c, p, m)
    spin = spin_noise_budget(tab, c, p)
    K = signal_spin_covariance(pr, tab, c, p)
    K_plus = memory_pair_sum(pr, tab, c, p, m)
    comm = g_de * np.conj(spin.g_se) + p_ds0 * np.conj(spin.g_ss) + K_plus - K
    dep, dep_int = depletion_metric(c, p, float(m.T))
    return NoiseBudget(
        eta=c.eta,
        eta_green=eta_green,
        theta_R=float(np.angle(p_ds0)),
        g_de_sq=abs(g_de) ** 2,
        g_dplus_sq=plus,
        g_dminus_sq=minus,
        added_var_x4=(1.0 - c.eta) + 2.0 * minus,
        sum_rule_d=abs(g_de) ** 2 + eta_green + plus - minus - 1.0,
        sum_rule_s=spin.sum_rule_s,
        comm_ds=complex(comm),
        spin_gminus_sq=spin.g_sminus_sq,
        spin_var_x4=spin.spin_var_x4,
        covariance_param=K,
        depletion=dep,
        depletion_integral=dep_int,
    )
