"""CODATA-2018 constants and ion species used throughout the package.

Values are pinned instead of taken from ``scipy.constants`` because newer SciPy
releases ship CODATA-2022, and reproduced numbers must not drift with the
installed SciPy version.
"""

import math
from dataclasses import dataclass
from typing import Dict

from .errors import ConfigurationError


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.054571817e-34       # J s
    e: float = 1.602176634e-19          # C
    eps0: float = 8.8541878128e-12      # F/m
    muB: float = 9.2740100783e-24       # J/T
    amu: float = 1.66053906660e-27      # kg
    m_e: float = 9.1093837015e-31       # kg

    @property
    def coulomb_constant(self) -> float:
        """e^2 / (4 pi eps0) in J m."""
        return self.e ** 2 / (4.0 * math.pi * self.eps0)


CODATA2018 = PhysicalConstants()

HBAR = CODATA2018.hbar
MU_B = CODATA2018.muB

# Atomic masses in u; the ion mass is the atomic mass minus one electron.
SPECIES_ATOMIC_MASS_U: Dict[str, float] = {
    "171Yb+": 170.936323,
    "40Ca+": 39.96259086,
    "9Be+": 9.0121831,
    "138Ba+": 137.905247,
}

DEFAULT_SPECIES = "171Yb+"


def species_mass(name: str) -> float:
    """
    Ion mass in kg for a species label such as ``"171Yb+"``.

    Raises:
        ConfigurationError: if the species is not tabulated.
    """
    try:
        atomic = SPECIES_ATOMIC_MASS_U[name]
    except KeyError:
        known = ", ".join(sorted(SPECIES_ATOMIC_MASS_U))
        raise ConfigurationError("species", f"unknown species '{name}' (known: {known})")
    return atomic * CODATA2018.amu - CODATA2018.m_e
