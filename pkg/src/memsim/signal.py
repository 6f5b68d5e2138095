"""Target temporal mode of the retrieved signal."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.special import erf

TRUNCATION = math.exp(-4.0)
NORM_RTOL = 1e-8
MIN_SAMPLES = 64


@dataclass(frozen=True)
class TimeGrid:
    T: float
    n: int

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"duration must be positive, got {self.T}")
        if self.n < MIN_SAMPLES:
            raise ValueError(f"need at least {MIN_SAMPLES} samples, got {self.n}")

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n)

    @property
    def h(self) -> float:
        return self.T / (self.n - 1)

    def tau(self, kappa: float) -> np.ndarray:
        """Dimensionless time 2*kappa*t."""
        return 2.0 * kappa * self.t


@dataclass(frozen=True, eq=False)
class SignalMode:
    """Real quasi-Gaussian envelope E0(t), with 2 kappa int E0^2 dt = 1.

    E0 is the intracavity amplitude (dimensionless photon-number amplitude);
    the output mode is sqrt(2 kappa) E0.
    """

    grid: TimeGrid
    kappa: float
    samples: np.ndarray
    norm_coeff: float
    derivative: np.ndarray

    @property
    def t(self):
        return self.grid.t

    @property
    def T(self):
        return self.grid.T

    def evaluate(self, t):
        """Envelope and its derivative at arbitrary times (analytic)."""
        return _envelope(np.asarray(t, dtype=float), self.grid.T, self.norm_coeff)


def _envelope(t, T, norm):
    u = t / T - 0.5
    gauss = np.exp(-16.0 * u * u)
    return norm * (gauss - TRUNCATION), norm * gauss * (-32.0 * u / T)


def _exact_shape_integral(T):
    # int_0^T (exp(-16u^2) - e^-4)^2 dt with u = t/T - 1/2
    a = math.sqrt(math.pi / 32.0) * erf(math.sqrt(32.0) / 2.0)
    b = 2.0 * TRUNCATION * math.sqrt(math.pi / 16.0) * erf(2.0)
    return T * (a - b + TRUNCATION ** 2)


def make_target_mode(T: float, kappa: float, n: int = 4096) -> SignalMode:
    """Sample the truncated Gaussian target mode on a uniform grid.

    The normalization constant is fixed with composite Simpson on the grid
    itself so that the discrete norm is exactly one; the grid is rejected if
    that quadrature departs from the closed-form integral by more than 1e-8.
    The envelope vanishes at both ends but its slope does not
    (dE0/dt(0) = 16 N_E e^-4 / T); no smoothing is applied.
    """
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    grid = TimeGrid(T, n)
    t = grid.t
    shape, _ = _envelope(t, T, 1.0)
    integral = simpson(shape ** 2, x=t)
    exact = _exact_shape_integral(T)
    if abs(integral - exact) > NORM_RTOL * exact:
        raise ValueError(f"n={n} too coarse: normalization quadrature error "
                         f"{abs(integral - exact) / exact:.2e}")
    norm = 1.0 / math.sqrt(2.0 * kappa * integral)
    samples, deriv = _envelope(t, T, norm)
    # the subtracted constant makes the endpoints vanish up to rounding
    samples[0] = samples[-1] = 0.0
    return SignalMode(grid, kappa, samples, norm, deriv)


def mode_width_check(m: SignalMode) -> float:
    """Full width of E0 at 1/e of its peak, in units of the duration."""
    x = m.t / m.T
    y = m.samples / m.samples.max()
    level = math.exp(-1.0)
    mid = len(x) // 2
    # rising and falling halves are monotone
    left = np.interp(level, y[: mid + 1], x[: mid + 1])
    right = np.interp(level, y[mid:][::-1], x[mid:][::-1])
    return float(right - left)
