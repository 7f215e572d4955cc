import logging
from dataclasses import dataclass

import numpy as np

from .chain import ChainSolution
from .config import Configuration
from .constants import CODATA2018

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FieldProfile:
    """B(z) = B0 + dB_dz * z + d2B_dz2 * z^2 / 2 along the trap axis, plus transversal gradients."""
    b0: float = 0.0
    db_dz: float = 0.0
    d2b_dz2: float = 0.0
    db_dx: float = 0.0
    db_dy: float = 0.0

    @classmethod
    def from_config(cls, cfg: Configuration) -> "FieldProfile":
        return cls(b0=cfg.b0, db_dz=cfg.db_dz, d2b_dz2=cfg.d2b_dz2, db_dx=cfg.db_dx, db_dy=cfg.db_dy)

    def field(self, z: np.ndarray) -> np.ndarray:
        return self.b0 + self.db_dz * z + 0.5 * self.d2b_dz2 * z ** 2

    def gradient(self, z: np.ndarray) -> np.ndarray:
        return self.db_dz + self.d2b_dz2 * z


@dataclass(frozen=True, eq=False)
class ResonanceProfile:
    """
    Qubit resonance frequency per ion and its axial derivatives at the equilibrium positions.

    ``gamma_n`` is NaN wherever the first derivative vanishes; ``gamma_defined`` marks the rest.
    ``domega_x``/``domega_y`` are the transversal gradients of the resonance.
    """
    omega_n: np.ndarray
    domega_n: np.ndarray
    d2omega_n: np.ndarray
    gamma_n: np.ndarray
    gamma_defined: np.ndarray
    domega_x: np.ndarray
    domega_y: np.ndarray

    @property
    def n_ions(self) -> int:
        return len(self.omega_n)


def resonance_profile(field: FieldProfile, chain: ChainSolution, cfg: Configuration) -> ResonanceProfile:
    # linear Zeeman shift of the qubit transition
    coefficient = cfg.sign * cfg.g_factor_combination * CODATA2018.muB / CODATA2018.hbar
    z = chain.z0
    ones = np.ones(chain.n_ions)
    omega = coefficient * field.field(z)
    domega = coefficient * field.gradient(z)
    d2omega = coefficient * field.d2b_dz2 * ones

    defined = domega != 0.0
    gamma = np.full(chain.n_ions, np.nan)
    gamma[defined] = d2omega[defined] / domega[defined] ** 2
    if np.any(~defined & (d2omega != 0.0)):
        logger.warning("field curvature set but gradient vanishes on ions %s; gamma is undefined there",
                       [int(i) + 1 for i in np.flatnonzero(~defined)])

    return ResonanceProfile(
        omega_n=omega,
        domega_n=domega,
        d2omega_n=d2omega,
        gamma_n=gamma,
        gamma_defined=defined,
        domega_x=coefficient * field.db_dx * ones,
        domega_y=coefficient * field.db_dy * ones,
    )
