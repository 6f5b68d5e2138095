"""Impedance-matched readout control: from the target mode to Omega(t).

Given the prescribed output envelope E0(t), the product Omega*S follows
from the cavity field equation, the spin population from the excitation
balance, and the spin phase from the spin equation. Dividing the product
by the complex spin amplitude gives the control field.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from .params import PhysicalParams, derive_rates
from .signal import SignalMode

DEFAULT_FLOOR = 1e-3
DEFAULT_CAP_FACTOR = 10.0


class SynthesisError(RuntimeError):
    pass


class ControlCapWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class ControlSolution:
    t: np.ndarray
    omega_s_product: np.ndarray
    spin_pop: np.ndarray
    spin_phase: np.ndarray
    spin: np.ndarray
    control: np.ndarray
    eta: float
    residual: float
    floor: float
    capped: bool = False

    @property
    def omega_max(self) -> float:
        return float(np.max(np.abs(self.control)))

    @property
    def initial_spin(self) -> complex:
        return complex(self.spin[0])


def _cumulative(y, t):
    return cumulative_simpson(y, x=t, initial=0.0)


def compute_omega_s(m: SignalMode, p: PhysicalParams) -> np.ndarray:
    """Omega*S required to make the cavity field follow E0."""
    k_eff = derive_rates(p).kappa_eff
    factor = (p.delta / p.g_sqrt_n) * (1.0 - 1j * p.gamma_perp / p.delta)
    return factor * (m.derivative + k_eff * m.samples)


def integrate_balance(m: SignalMode, p: PhysicalParams, omega_s: np.ndarray,
                      floor: float = DEFAULT_FLOOR):
    """Spin population from the excitation balance.

    The total derivative of E0^2 is integrated analytically; the remaining
    losses by cumulative Simpson. The free constant |S(0)|^2 is set so that
    the smallest population on the grid equals ``floor``.

    Returns:
        (spin_pop, eta, residual) with eta = 1/|S(0)|^2, residual = |S(T)|^2.
    """
    if not floor > 0:
        raise ValueError("floor must be positive")
    k_eff = derive_rates(p).kappa_eff
    loss = 2.0 * k_eff * m.samples ** 2 + 4.0 * p.gamma_perp * np.abs(omega_s) ** 2 / p.delta ** 2
    rel = -(m.samples ** 2 - m.samples[0] ** 2) - _cumulative(loss, m.t)
    s0 = floor - refined_extremum(rel, np.argmin(rel))
    if s0 < 1.0 - 1e-12:
        raise SynthesisError(f"|S(0)|^2 = {s0:.6g} < 1 implies efficiency above one")
    spin_pop = s0 + rel
    return spin_pop, 1.0 / s0, float(spin_pop[-1])


def refined_extremum(y: np.ndarray, k: int) -> float:
    """Extreme value near sample ``k`` from the parabola through its neighbours."""
    if k == 0 or k == len(y) - 1:
        return float(y[k])
    a, b, c = y[k - 1], y[k], y[k + 1]
    curv = a - 2.0 * b + c
    if curv == 0.0:
        return float(b)
    return float(b - 0.125 * (c - a) ** 2 / curv)


def compute_spin_phase(m: SignalMode, p: PhysicalParams, spin_pop: np.ndarray) -> np.ndarray:
    k_eff = derive_rates(p).kappa_eff
    integrand = 2.0 * m.samples * (m.derivative + k_eff * m.samples) / spin_pop
    return -(p.gamma_perp / p.delta) * _cumulative(integrand, m.t)


def synthesize_control(omega_s, spin_pop, spin_phase, omega_cap=np.inf):
    """Spin amplitude and control field; |Omega| is clipped at ``omega_cap``.

    Raises SynthesisError when more than 1% of the grid would need clipping.
    """
    spin = np.sqrt(spin_pop) * np.exp(1j * spin_phase)
    control = omega_s / spin
    over = np.abs(control) > omega_cap
    if over.mean() > 0.01:
        raise SynthesisError(f"control exceeds cap on {over.mean():.1%} of the grid")
    if over.any():
        warnings.warn(f"control clipped at {omega_cap:.4g} rad/s on {over.sum()} samples",
                      ControlCapWarning, stacklevel=2)
        control = np.where(over, control / np.abs(control) * omega_cap, control)
    return spin, control, bool(over.any())


def default_cap(p: PhysicalParams, factor: float = DEFAULT_CAP_FACTOR) -> float:
    return factor * abs(p.delta) * derive_rates(p).kappa_eff / p.g_sqrt_n


def synthesize(m: SignalMode, p: PhysicalParams, floor: float = DEFAULT_FLOOR,
               cap_factor: float = DEFAULT_CAP_FACTOR) -> ControlSolution:
    """Full readout control synthesis for a target mode."""
    os = compute_omega_s(m, p)
    pop, eta, res = integrate_balance(m, p, os, floor)
    phase = compute_spin_phase(m, p, pop)
    spin, control, capped = synthesize_control(os, pop, phase, default_cap(p, cap_factor))
    return ControlSolution(m.t, os, pop, phase, spin, control, eta, res, floor, capped)
