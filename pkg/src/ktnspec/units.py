"""Conversion between reduced (Lennard-Jones) units and SI.

Reduced time is measured in tau = sigma sqrt(m / epsilon), reduced
temperature in epsilon / k_B. Rates therefore scale by 1/tau.
"""
from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np
from scipy import constants

from .errors import DomainError

K_B = constants.k
ATOMIC_MASS = constants.atomic_mass
ANGSTROM = constants.angstrom


@dataclass(frozen=True)
class ReducedUnits:
    """Energy ``epsilon`` (J), length ``sigma`` (m), mass ``mass`` (kg)."""

    epsilon: float
    sigma: float
    mass: float
    k_B: float = K_B

    def __post_init__(self):
        for name in ("epsilon", "sigma", "mass", "k_B"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive, got {v}")

    @property
    def tau(self) -> float:
        """Reduced time unit in seconds."""
        return self.sigma * np.sqrt(self.mass / self.epsilon)

    @property
    def temperature_scale(self) -> float:
        """epsilon / k_B in kelvin."""
        return self.epsilon / self.k_B

    def rate(self, rate_reduced):
        """Reduced rate to s^-1."""
        return np.asarray(rate_reduced, float) / self.tau

    def reduced_rate(self, rate_si):
        return np.asarray(rate_si, float) * self.tau

    def temperature(self, T_reduced):
        """Reduced temperature to kelvin."""
        return np.asarray(T_reduced, float) * self.temperature_scale

    def reduced_temperature(self, T_kelvin):
        return np.asarray(T_kelvin, float) / self.temperature_scale


def lennard_jones_units(epsilon_over_kB: float, sigma_angstrom: float,
                        mass_amu: float) -> ReducedUnits:
    """Units from the customary parameters: epsilon/k_B in K, sigma in angstrom, mass in u."""
    for name, v in (("epsilon/k_B", epsilon_over_kB), ("sigma", sigma_angstrom),
                    ("mass", mass_amu)):
        if not (np.isfinite(v) and v > 0):
            raise DomainError(f"{name} must be positive, got {v}")
    return ReducedUnits(epsilon_over_kB * K_B, sigma_angstrom * ANGSTROM, mass_amu * ATOMIC_MASS)


ARGON = lennard_jones_units(119.8, 3.405, 39.948)


def convert_rate_units(rate_reduced, epsilon: float, sigma: float, mass: float,
                       T_reduced=None, k_B: float = K_B):
    """Reduced rate (and optionally temperature) to SI.

    ``epsilon``, ``sigma`` and ``mass`` are in any consistent unit system
    whose time unit is the second (J, m, kg by default). Returns
    ``(rate_per_second, T_kelvin)``; ``T_kelvin`` is None when no
    temperature is given.
    """
    u = ReducedUnits(epsilon, sigma, mass, k_B)
    T = None if T_reduced is None else u.temperature(T_reduced)
    return u.rate(rate_reduced), T


def round_sig(x, digits: int = 2):
    """Round to ``digits`` significant figures (half away from zero, decimal-exact)."""

    def one(v):
        if v == 0 or not np.isfinite(v):
            return float(v)
        d = Decimal(repr(float(v)))
        q = Decimal(1).scaleb(d.adjusted() - digits + 1)
        return float(d.quantize(q, rounding=ROUND_HALF_UP))

    arr = np.asarray(x, float)
    if arr.ndim == 0:
        return one(float(arr))
    return np.array([one(v) for v in arr.ravel()]).reshape(arr.shape)
