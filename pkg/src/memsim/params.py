"""Physical constants of the atom-cavity system and derived rates.

Everything is stored in angular units (rad/s). Configuration files give
frequencies as nu/2pi in MHz; :meth:`PhysicalParams.from_mhz` converts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI_MHZ = 2.0 * math.pi * 1e6


@dataclass(frozen=True)
class PhysicalParams:
    """Atom-cavity constants for equal memory/luminescence channels.

    Attributes:
        g: single-atom coupling rate (rad/s).
        N: atom number.
        gamma_perp: transverse relaxation rate (rad/s).
        kappa: cavity field decay rate (rad/s).
        delta: Raman detuning (rad/s), signed.
        omega_sg: spin transition frequency (rad/s), signed.
    """

    g: float
    N: float
    gamma_perp: float
    kappa: float
    delta: float
    omega_sg: float

    def __post_init__(self):
        if not (self.g > 0 and self.N >= 1 and self.kappa > 0):
            raise ValueError("g and kappa must be positive and N >= 1")
        if self.gamma_perp < 0:
            raise ValueError("gamma_perp must be nonnegative")
        if self.delta == 0 or self.omega_sg == 0:
            raise ValueError("delta and omega_sg must be nonzero")

    @classmethod
    def from_mhz(cls, cooperativity, gamma_perp_mhz, kappa_mhz, delta_mhz,
                 omega_sg_mhz, atom_number=1.0):
        """Build from nu/2pi values in MHz, solving g from the cooperativity.

        Only g^2 N is fixed by the cooperativity, so ``atom_number`` merely
        splits it between g and N.
        """
        gamma = gamma_perp_mhz * TWO_PI_MHZ
        kappa = kappa_mhz * TWO_PI_MHZ
        if cooperativity <= 0 or gamma <= 0:
            raise ValueError("cooperativity and gamma_perp must be positive")
        g = math.sqrt(cooperativity * gamma * kappa / atom_number)
        return cls(g=g, N=float(atom_number), gamma_perp=gamma, kappa=kappa,
                   delta=delta_mhz * TWO_PI_MHZ,
                   omega_sg=omega_sg_mhz * TWO_PI_MHZ)

    @property
    def g_sqrt_n(self) -> float:
        return self.g * math.sqrt(self.N)

    @property
    def g2n(self) -> float:
        return self.g * self.g * self.N

    def scaled(self, **changes) -> "PhysicalParams":
        """Copy with some fields replaced."""
        values = dict(g=self.g, N=self.N, gamma_perp=self.gamma_perp,
                      kappa=self.kappa, delta=self.delta, omega_sg=self.omega_sg)
        values.update(changes)
        return PhysicalParams(**values)


@dataclass(frozen=True)
class DerivedRates:
    cooperativity: float
    kappa_eff: float
    delta_c: float
    delta_s: float
    gamma_perp: float
    delta: float
    g2n: float
    omega_sg: float

    def spin_decay_coeff(self, omega):
        """Spin amplitude damping 2 gamma |Omega|^2 / Delta^2 (both channels)."""
        return 2.0 * self.gamma_perp * np.abs(omega) ** 2 / self.delta ** 2

    def delta_R(self, omega):
        """Raman-luminescence frequency correction; diagnostic only."""
        return -self.g2n * np.abs(omega) ** 2 / (2.0 * self.omega_sg * self.delta ** 2)


def derive_rates(p: PhysicalParams) -> DerivedRates:
    g2n = p.g2n
    return DerivedRates(
        cooperativity=g2n / (p.gamma_perp * p.kappa) if p.gamma_perp > 0 else math.inf,
        kappa_eff=p.kappa + g2n * p.gamma_perp / p.delta ** 2,
        delta_c=-g2n / p.delta,
        # AC Stark shifts of the two channels cancel exactly for equal Omega, Delta
        delta_s=0.0,
        gamma_perp=p.gamma_perp,
        delta=p.delta,
        g2n=g2n,
        omega_sg=p.omega_sg,
    )


@dataclass(frozen=True)
class RegimeThresholds:
    raman_ratio: float = 0.1
    sg_ratio: float = 5.0
    depletion: float = 0.1


@dataclass(frozen=True)
class RegimeReport:
    gamma_over_delta: float
    kappa_over_delta: float
    sg_over_gamma: float
    depletion: float
    depletion_bound: float
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def as_dict(self):
        return {
            "gamma_over_delta": self.gamma_over_delta,
            "kappa_over_delta": self.kappa_over_delta,
            "two_omega_sg_over_gamma": self.sg_over_gamma,
            "depletion": self.depletion,
            "depletion_bound": self.depletion_bound,
            "checks": dict(self.checks),
            "passed": self.passed,
        }


def validate_regime(p: PhysicalParams, omega_max: float, T: float,
                    thresholds: RegimeThresholds = RegimeThresholds(),
                    depletion: float | None = None) -> RegimeReport:
    """Check the Raman, two-band and ground-state-depletion assumptions.

    ``omega_max`` is the peak control Rabi frequency (rad/s). Without a
    synthesized control the depletion number is the a-priori bound
    ``2 gamma omega_max^2 / Delta^2 * T``; pass ``depletion`` (the integral
    of the leak rate over the readout) to test the actual ground-state loss.
    """
    g_ratio = p.gamma_perp / abs(p.delta)
    k_ratio = p.kappa / abs(p.delta)
    sg = 2.0 * abs(p.omega_sg) / p.gamma_perp if p.gamma_perp > 0 else math.inf
    bound = 2.0 * p.gamma_perp * omega_max ** 2 / p.delta ** 2 * T
    dep = bound if depletion is None else depletion
    checks = {
        "raman_gamma": g_ratio < thresholds.raman_ratio,
        "raman_kappa": k_ratio < thresholds.raman_ratio,
        "two_band": sg > thresholds.sg_ratio,
        "depletion": dep < thresholds.depletion,
    }
    return RegimeReport(g_ratio, k_ratio, sg, dep, bound, checks)
