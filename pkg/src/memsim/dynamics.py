"""Two-band field/spin dynamics: fundamental matrix and Green kernels.

State ordering is (E, S). The homogeneous system is

    dE/dt = -kappa_eff E + i k (1 + i gamma/Delta) Omega S
    dS/dt = i k (1 + i gamma/Delta) Omega* E - 2 gamma |Omega|^2/Delta^2 S

with k = g sqrt(N)/Delta. The Raman frequency correction delta_R is left
out; it is a common phase of E and S at this order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from scipy.interpolate import CubicSpline

from .control import ControlSolution
from .params import PhysicalParams, derive_rates
from .signal import SignalMode, TimeGrid

DET_ALARM = 1e-12


class PropagatorError(RuntimeError):
    pass


def coupling(p: PhysicalParams) -> complex:
    """Memory-channel coupling prefactor i k (1 + i gamma/Delta)."""
    return 1j * (p.g_sqrt_n / p.delta) * (1.0 + 1j * p.gamma_perp / p.delta)


def system_matrix(p: PhysicalParams, omega) -> np.ndarray:
    """A(t) for an array of control samples, shape (..., 2, 2)."""
    omega = np.asarray(omega, dtype=complex)
    c = coupling(p)
    A = np.empty(omega.shape + (2, 2), dtype=complex)
    A[..., 0, 0] = -derive_rates(p).kappa_eff
    A[..., 0, 1] = c * omega
    A[..., 1, 0] = c * np.conj(omega)
    A[..., 1, 1] = -2.0 * p.gamma_perp * np.abs(omega) ** 2 / p.delta ** 2
    return A


def control_interpolant(t, control) -> CubicSpline:
    return CubicSpline(t, control)


def _rk4_step_matrices(A0, Am, A1, h):
    """One-step RK4 transfer matrices of a linear system, batched."""
    eye = np.eye(2)
    AmA0 = Am @ A0
    AmAm = Am @ Am
    A1Am = A1 @ Am
    return (eye + h / 6.0 * (A0 + 4.0 * Am + A1)
            + h * h / 6.0 * (AmA0 + AmAm + A1Am)
            + h ** 3 / 12.0 * (AmAm @ A0 + A1Am @ Am)
            + h ** 4 / 24.0 * (A1Am @ AmA0))


def fundamental_matrix(p: PhysicalParams, omega_of_t, t: np.ndarray, substeps: int = 4):
    """M(t_k) with M(0) = I, by classical RK4 with ``substeps`` steps per interval."""
    n = len(t)
    h = (t[1] - t[0]) / substeps
    # stage times t_k + j h/2 for j = 0 .. 2*substeps, per interval
    frac = np.arange(2 * substeps + 1) * (h / 2.0)
    times = t[:-1, None] + frac[None, :]
    A = system_matrix(p, omega_of_t(times))
    interval = np.broadcast_to(np.eye(2, dtype=complex), (n - 1, 2, 2)).copy()
    for j in range(substeps):
        R = _rk4_step_matrices(A[:, 2 * j], A[:, 2 * j + 1], A[:, 2 * j + 2], h)
        interval = R @ interval
    M = np.empty((n, 2, 2), dtype=complex)
    M[0] = np.eye(2)
    for k in range(n - 1):
        M[k + 1] = interval[k] @ M[k]
    return M


@dataclass(frozen=True, eq=False)
class PropagatorTable:
    grid: TimeGrid
    M: np.ndarray
    M_inv: np.ndarray
    trace: np.ndarray

    @property
    def t(self):
        return self.grid.t

    def green(self, i: int, j: int) -> np.ndarray:
        """G(t_i, t_j) = M(t_i) M(t_j)^-1, for t_i >= t_j."""
        if i < j:
            raise ValueError("Green kernel is causal: need t >= t'")
        return self.M[i] @ self.M_inv[j]

    def from_start(self) -> np.ndarray:
        """G(t_k, 0) for all k; this is M itself."""
        return self.M

    def to_end(self) -> np.ndarray:
        """G(T, t_k) for all k."""
        return self.M[-1] @ self.M_inv

    def liouville_residual(self) -> float:
        det = np.linalg.det(self.M)
        expected = np.exp(cumulative_simpson(self.trace, x=self.t, initial=0.0))
        return float(np.max(np.abs(det / expected - 1.0)))


def build_propagator(p: PhysicalParams, c: ControlSolution, grid: TimeGrid,
                     substeps: int = 4) -> PropagatorTable:
    t = grid.t
    spline = control_interpolant(c.t, c.control)
    M = fundamental_matrix(p, spline, t, substeps)
    det = np.linalg.det(M)
    if np.min(np.abs(det)) < DET_ALARM:
        raise PropagatorError("fundamental matrix nearly singular; integrator fault")
    trace = np.trace(system_matrix(p, spline(t)), axis1=1, axis2=2).real
    return PropagatorTable(grid, M, np.linalg.inv(M), trace)


@dataclass(frozen=True)
class MatchingReport:
    theta_R: float
    residual: float
    projection: complex

    @property
    def eta_green(self) -> float:
        return abs(self.projection) ** 2


def verify_impedance_matching(tab: PropagatorTable, m: SignalMode, eta: float) -> MatchingReport:
    """Compare G_ES(t,0) with sqrt(eta) e^{i theta_R} E0(t)."""
    g_es = tab.M[:, 0, 1]
    proj = 2.0 * m.kappa * simpson(m.samples * g_es, x=m.t)
    theta = float(np.angle(proj))
    target = math.sqrt(eta) * np.exp(1j * theta) * m.samples
    res = np.max(np.abs(g_es - target)) / np.max(np.abs(m.samples))
    return MatchingReport(theta, float(res), complex(proj))


def two_band_trajectory(tab: PropagatorTable, initial) -> np.ndarray:
    """(E, S) along the grid from an initial pair, shape (n, 2)."""
    return tab.M @ np.asarray(initial, dtype=complex)


def min_oracle_samples(p: PhysicalParams, T: float, per_period: int = 40) -> int:
    period = math.pi / abs(p.omega_sg)
    return int(math.ceil(per_period * T / period)) + 1


def oracle_first_elimination(p: PhysicalParams, c: ControlSolution, initial,
                             n: int | None = None, per_period: int = 200):
    """Integrate the field/spin equations that still contain the 2 omega_sg terms.

    The luminescence couplings i k Omega e^{2 i omega_sg t} S* and
    i k Omega e^{2 i omega_sg t} E* are kept at zeroth order in gamma/Delta.
    RK4 on a uniform grid of ``n`` points over [0, T].

    Returns:
        (t, E, S) arrays.
    """
    T = float(c.t[-1])
    need = min_oracle_samples(p, T, 40)
    if n is None:
        n = max(need, min_oracle_samples(p, T, per_period))
    elif n < need:
        raise ValueError(f"grid too coarse for the 2*omega_sg oscillation: {n} < {need}")
    spline = control_interpolant(c.t, c.control)
    t = np.linspace(0.0, T, n)
    h = t[1] - t[0]
    ts = np.concatenate([t, t[:-1] + h / 2.0])
    om = spline(ts)
    om_grid, om_mid = om[:n], om[n:]
    k_eff = derive_rates(p).kappa_eff
    cm = coupling(p)
    k = p.g_sqrt_n / p.delta
    w2 = 2.0 * p.omega_sg
    decay_rate = 2.0 * p.gamma_perp / p.delta ** 2

    def rhs(tt, om_t, e, s):
        lum = 1j * k * om_t * np.exp(1j * w2 * tt)
        de = -k_eff * e + cm * om_t * s + lum * np.conj(s)
        ds = cm * np.conj(om_t) * e - decay_rate * abs(om_t) ** 2 * s + lum * np.conj(e)
        return de, ds

    E = np.empty(n, dtype=complex)
    S = np.empty(n, dtype=complex)
    E[0], S[0] = initial
    for i in range(n - 1):
        t0, e, s = t[i], E[i], S[i]
        o0, om1, o1 = om_grid[i], om_mid[i], om_grid[i + 1]
        k1 = rhs(t0, o0, e, s)
        k2 = rhs(t0 + h / 2, om1, e + h / 2 * k1[0], s + h / 2 * k1[1])
        k3 = rhs(t0 + h / 2, om1, e + h / 2 * k2[0], s + h / 2 * k2[1])
        k4 = rhs(t0 + h, o1, e + h * k3[0], s + h * k3[1])
        E[i + 1] = e + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        S[i + 1] = s + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return t, E, S


def two_band_on(p: PhysicalParams, c: ControlSolution, t: np.ndarray, initial):
    """Two-band (E, S) on an arbitrary uniform grid, for oracle comparison."""
    spline = control_interpolant(c.t, c.control)
    M = fundamental_matrix(p, spline, t, substeps=1)
    x = M @ np.asarray(initial, dtype=complex)
    return x[:, 0], x[:, 1]


def elimination_deviation(p: PhysicalParams, c: ControlSolution, n: int | None = None) -> float:
    """max_t | |E_osc| - |E_2band| | / max_t |E_2band| from the initial spin."""
    init = (0.0, c.initial_spin)
    t, E, _ = oracle_first_elimination(p, c, init, n)
    E2, _ = two_band_on(p, c, t, init)
    return float(np.max(np.abs(np.abs(E) - np.abs(E2))) / np.max(np.abs(E2)))


def elimination_bound(p: PhysicalParams, c: ControlSolution) -> float:
    k_eff = derive_rates(p).kappa_eff
    rate = max(k_eff, p.g_sqrt_n * c.omega_max / abs(p.delta))
    return 3.0 * rate / (2.0 * abs(p.omega_sg))
