import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .config import Configuration
from .constants import CODATA2018
from .errors import ConfigurationError, ConvergenceError, UnstableConfigurationError

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 200
RESIDUAL_TOLERANCE = 1e-12
_MIN_DAMPING = 2.0 ** -40


class Direction(str, Enum):
    AXIAL = "axial"
    X = "x"
    Y = "y"

    @property
    def is_transversal(self) -> bool:
        return self is not Direction.AXIAL


class CubicKind(str, Enum):
    AXIAL = "axial"
    TRANSVERSAL = "transversal"


@dataclass(frozen=True, eq=False)
class ChainSolution:
    """
    Equilibrium of a linear ion chain.

    ``u`` is dimensionless and ascending; ``z0 = l * u`` in metres.
    """
    u: np.ndarray
    l: float
    iterations: int = 0
    residual: float = 0.0

    @property
    def n_ions(self) -> int:
        return len(self.u)

    @property
    def z0(self) -> np.ndarray:
        return self.l * self.u


@dataclass(frozen=True, eq=False)
class ModeDecomposition:
    direction: Direction
    S: np.ndarray
    nu: np.ndarray
    dz: np.ndarray

    @property
    def n_modes(self) -> int:
        return len(self.nu)


@dataclass(frozen=True, eq=False)
class CubicTensor:
    kind: CubicKind
    values: np.ndarray


def _separations(u: np.ndarray) -> np.ndarray:
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    return d


def _forces(u: np.ndarray) -> np.ndarray:
    d = _separations(u)
    return u + np.sum(-np.sign(d) / d ** 2, axis=1)


def _dimensionless_hessian(u: np.ndarray) -> np.ndarray:
    inv3 = 1.0 / np.abs(_separations(u)) ** 3
    hessian = -2.0 * inv3
    np.fill_diagonal(hessian, 1.0 + 2.0 * inv3.sum(axis=1))
    return hessian


def uniform_guess(n_ions: int) -> np.ndarray:
    return np.linspace(-n_ions / 2.0, n_ions / 2.0, n_ions) * (2.0 / n_ions ** 0.56)


def solve_equilibrium(n_ions: int, initial_guess: Optional[Sequence[float]] = None,
                      length_scale: float = 1.0) -> ChainSolution:
    """
    Solve the force balance of ``n_ions`` ions in a harmonic well with damped Newton steps.

    Args:
        n_ions: number of ions, at least 1.
        initial_guess: optional ascending starting positions (dimensionless).
        length_scale: l in metres, stored on the result to give ``z0``.

    Raises:
        ConvergenceError: if the residual is not below 1e-12 after 200 iterations.
    """
    if n_ions < 1:
        raise ConfigurationError("n_ions", "n_ions must be ≥ 1")
    if initial_guess is None:
        u = uniform_guess(n_ions)
    else:
        u = np.array(initial_guess, dtype=float)
        if u.shape != (n_ions,):
            raise ConfigurationError("initial_guess", f"initial guess must have {n_ions} entries")
        if np.any(np.diff(u) <= 0):
            raise ConfigurationError("initial_guess", "initial guess must be strictly ascending")

    residual = float(np.max(np.abs(_forces(u))))
    iterations = 0
    while residual >= RESIDUAL_TOLERANCE:
        if iterations >= MAX_ITERATIONS:
            raise ConvergenceError("equilibrium solver did not converge", residual, iterations)
        iterations += 1
        step = np.linalg.solve(_dimensionless_hessian(u), -_forces(u))
        damping = 1.0
        while True:
            trial = u + damping * step
            if np.all(np.diff(trial) > 0):
                trial_residual = float(np.max(np.abs(_forces(trial))))
                if trial_residual < residual:
                    break
            damping /= 2.0
            logger.debug("halving Newton step to %.3g", damping)
            if damping < _MIN_DAMPING:
                raise ConvergenceError("Newton step no longer reduces the residual", residual, iterations)
        u, residual = trial, trial_residual
        logger.debug("iteration %d: residual %.3e", iterations, residual)

    u = (u - u[::-1]) / 2.0
    residual = float(np.max(np.abs(_forces(u))))
    logger.info("equilibrium for %d ions converged after %d iterations (residual %.2e)",
                n_ions, iterations, residual)
    return ChainSolution(u=u, l=length_scale, iterations=iterations, residual=residual)


def potential_energy(u: Sequence[float], radial_ratio: Optional[float] = None,
                     x: Optional[Sequence[float]] = None) -> float:
    """
    Dimensionless potential of the chain, in units of m * omega_z^2 * l^2.

    With ``x`` given, ions are displaced along one transversal direction whose trap
    frequency is ``radial_ratio * omega_z``.
    """
    u = np.asarray(u, dtype=float)
    energy = 0.5 * float(np.sum(u ** 2))
    dist2 = (u[:, None] - u[None, :]) ** 2
    if x is not None:
        if radial_ratio is None:
            raise ValueError("radial_ratio is required with transversal displacements")
        x = np.asarray(x, dtype=float)
        energy += 0.5 * radial_ratio ** 2 * float(np.sum(x ** 2))
        dist2 = dist2 + (x[:, None] - x[None, :]) ** 2
    upper = np.triu_indices(len(u), k=1)
    return energy + float(np.sum(1.0 / np.sqrt(dist2[upper])))


def axial_hessian(chain: ChainSolution, cfg: Configuration) -> np.ndarray:
    """Second derivatives of trap plus Coulomb potential along the axis, in J/m^2."""
    return cfg.species_mass * cfg.omega_z ** 2 * _dimensionless_hessian(chain.u)


def linear_chain_is_stable(n_ions: int, ratio: float) -> bool:
    """Empirical condition omega_radial / omega_z > 0.73 * N^0.86 for a linear chain."""
    return ratio > 0.73 * n_ions ** 0.86


def transversal_hessian(chain: ChainSolution, cfg: Configuration, direction: Direction) -> np.ndarray:
    """
    Hessian along a transversal direction evaluated on the linear chain, in J/m^2.

    Raises:
        ConfigurationError: if the configuration has no radial trap frequency.
    """
    direction = Direction(direction)
    if not direction.is_transversal:
        raise ValueError("transversal_hessian needs direction x or y")
    if cfg.omega_radial is None:
        raise ConfigurationError("omega_radial", "transversal analysis requires omega_radial")
    omega_radial = cfg.omega_radial[0 if direction is Direction.X else 1]
    ratio = omega_radial / cfg.omega_z
    if not linear_chain_is_stable(chain.n_ions, ratio):
        logger.warning("omega_radial/omega_z = %.3g is below the linear-chain threshold %.3g for %d ions",
                       ratio, 0.73 * chain.n_ions ** 0.86, chain.n_ions)
    coulomb = _dimensionless_hessian(chain.u) - np.eye(chain.n_ions)
    return cfg.species_mass * cfg.omega_z ** 2 * (ratio ** 2 * np.eye(chain.n_ions) - 0.5 * coulomb)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    fixed = vectors.copy()
    for col in range(fixed.shape[1]):
        magnitudes = np.abs(fixed[:, col])
        pivot = int(np.argmax(magnitudes >= magnitudes.max() * (1.0 - 1e-9)))
        if fixed[pivot, col] < 0:
            fixed[:, col] = -fixed[:, col]
    return fixed


def normal_modes(hessian: np.ndarray, cfg: Configuration,
                 direction: Direction = Direction.AXIAL) -> ModeDecomposition:
    """
    Diagonalise a Hessian into ascending normal modes.

    Each eigenvector is oriented so that its largest-magnitude entry is positive,
    the lowest index winning ties.

    Raises:
        UnstableConfigurationError: on a non-positive eigenvalue.
    """
    eigenvalues, vectors = linalg.eigh(hessian)
    order = np.argsort(eigenvalues)
    eigenvalues, vectors = eigenvalues[order], vectors[:, order]
    if eigenvalues[0] <= 0:
        raise UnstableConfigurationError(float(eigenvalues[0]), Direction(direction).value)
    nu = np.sqrt(eigenvalues / cfg.species_mass)
    dz = np.sqrt(CODATA2018.hbar / (2.0 * cfg.species_mass * nu))
    return ModeDecomposition(direction=Direction(direction), S=_fix_signs(vectors), nu=nu, dz=dz)


def cubic_tensor_axial(chain: ChainSolution, cfg: Configuration) -> CubicTensor:
    """Third derivatives B_ijk of the Coulomb energy along the axis, in J/m^3."""
    u = chain.u
    weights = np.zeros((chain.n_ions, chain.n_ions))
    for i in range(chain.n_ions):
        for q in range(chain.n_ions):
            if q != i:
                d = u[i] - u[q]
                weights[i, q] = d / abs(d) ** 5
    scale = -6.0 * cfg.species_mass * cfg.omega_z ** 2 / chain.l
    return CubicTensor(CubicKind.AXIAL, scale * _pair_structure(weights))


def cubic_tensor_transversal(chain: ChainSolution, cfg: Configuration) -> CubicTensor:
    """
    Transversal-transversal-axial cubic coefficients of the Coulomb energy, in J/m^3.

    The mixed derivative d^3V / dz_k dx_i dx_j equals -6 times ``values[i, j, k]``.
    """
    u = chain.u
    weights = np.zeros((chain.n_ions, chain.n_ions))
    for i in range(chain.n_ions):
        for q in range(chain.n_ions):
            if q != i:
                d = u[q] - u[i]
                weights[i, q] = math.copysign(1.0, d) / d ** 4
    scale = cfg.species_mass * cfg.omega_z ** 2 / (2.0 * chain.l)
    return CubicTensor(CubicKind.TRANSVERSAL, scale * _pair_structure(weights))


def _pair_structure(weights: np.ndarray) -> np.ndarray:
    # sum_q w_iq (delta_ij - delta_qj)(delta_ik - delta_qk)
    n = weights.shape[0]
    tensor = np.zeros((n, n, n))
    for i in range(n):
        for q in range(n):
            w = weights[i, q]
            if q == i or w == 0.0:
                continue
            tensor[i, i, i] += w
            tensor[i, i, q] -= w
            tensor[i, q, i] -= w
            tensor[i, q, q] += w
    return tensor


def add_trap_anharmonicity(tensor: CubicTensor, alpha_n: Sequence[float]) -> CubicTensor:
    """Add the per-ion cubic trap coefficients alpha_n on the diagonal i = j = k."""
    alpha = np.asarray(alpha_n, dtype=float)
    n = tensor.values.shape[0]
    if alpha.shape != (n,):
        raise ConfigurationError("alpha_n", f"alpha_n must have {n} entries")
    values = tensor.values.copy()
    values[np.arange(n), np.arange(n), np.arange(n)] += alpha
    return CubicTensor(tensor.kind, values)


@dataclass(frozen=True)
class AnharmonicTrapCheck:
    stability_ratio: float
    barrier_position: float
    barrier_height: float
    chain_extent: float
    potential_span: float
    traps: bool


def global_anharmonicity_traps(n_ions: int, cfg: Configuration, alpha: float) -> AnharmonicTrapCheck:
    """
    Check whether m w^2 z^2 / 2 + alpha z^3 / 6 still confines the whole chain.

    The cubic term opens a barrier at z = -2 m w^2 / alpha of height
    2 m^3 w^6 / (3 alpha^2). ``potential_span`` is the largest trap energy of an ion
    on the barrier side, measured from the trap minimum; the chain is trapped when
    those ions sit inside the barrier and the span stays below its height.
    """
    chain = solve_equilibrium(n_ions, length_scale=cfg.length_scale)
    m, w = cfg.species_mass, cfg.omega_z
    ratio = alpha * cfg.delta_z_com ** 3 / (CODATA2018.hbar * w)
    extent = float(np.max(np.abs(chain.z0)))
    energy = 0.5 * m * w ** 2 * chain.z0 ** 2 + alpha * chain.z0 ** 3 / 6.0
    if alpha == 0:
        return AnharmonicTrapCheck(ratio, math.inf, math.inf, extent, float(np.max(energy)), True)
    position = 2.0 * m * w ** 2 / abs(alpha)
    height = 2.0 * m ** 3 * w ** 6 / (3.0 * alpha ** 2)
    barrier_side = chain.z0 * -np.sign(alpha) > 0
    exposed = np.abs(chain.z0[barrier_side])
    span = float(np.max(energy[barrier_side])) if exposed.size else 0.0
    traps = bool(np.all(exposed < position)) and span < height
    if not traps:
        logger.warning("cubic trap term alpha=%.3g J/m^3 opens a barrier of %.3g J at %.3g m; "
                       "the chain reaches %.3g m", alpha, height, position, extent)
    return AnharmonicTrapCheck(ratio, position, height, extent, span, traps)
