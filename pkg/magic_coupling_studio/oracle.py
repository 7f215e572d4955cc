"""
Brute-force check of the analytic couplings in a truncated Fock space.

Matrices are H/hbar in rad/s. Basis order: spin index most significant (ion 1 is the
highest bit, bit 0 meaning sigma_z = +1), then phonon occupations in mixed radix with
mode 1 most significant.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, sparse

from .chain import ModeDecomposition, add_trap_anharmonicity, cubic_tensor_axial
from .config import Configuration
from .constants import CODATA2018
from .couplings import (LambDickeMatrix, axial_pipeline, coincident_index_fields, local_field_corrections,
                        mode_frame_cubic, spin_spin_couplings, three_body_coulomb)
from .errors import ConfigurationError, OracleError
from .field import ResonanceProfile

logger = logging.getLogger(__name__)

MAX_DIMENSION = 200_000
MAX_IONS = 3
UNITARITY_TOLERANCE = 1e-12
LEAKAGE_THRESHOLD = 1e-2


@dataclass(frozen=True)
class TruncatedSpace:
    n_ions: int
    n_modes: int
    cutoff: int

    def __post_init__(self):
        if self.n_ions > MAX_IONS:
            raise OracleError(f"operator oracle supports at most {MAX_IONS} ions, got {self.n_ions}")
        if self.cutoff < 1:
            raise OracleError("cutoff must be at least 1")
        if self.dimension > MAX_DIMENSION:
            raise OracleError(f"truncated space dimension {self.dimension} exceeds {MAX_DIMENSION}")

    @property
    def levels(self) -> int:
        return self.cutoff + 1

    @property
    def phonon_dimension(self) -> int:
        return self.levels ** self.n_modes

    @property
    def n_sectors(self) -> int:
        return 2 ** self.n_ions

    @property
    def dimension(self) -> int:
        return self.n_sectors * self.phonon_dimension

    def spins(self, sector: int) -> np.ndarray:
        """sigma_z eigenvalues (+1/-1) of every ion in a spin sector."""
        bits = [(sector >> (self.n_ions - 1 - n)) & 1 for n in range(self.n_ions)]
        return 1.0 - 2.0 * np.array(bits, dtype=float)

    def fock_index(self, occupations: Sequence[int]) -> int:
        if len(occupations) != self.n_modes:
            raise OracleError(f"need {self.n_modes} mode occupations, got {len(occupations)}")
        index = 0
        for n in occupations:
            if not 0 <= n <= self.cutoff:
                raise OracleError(f"occupation {n} outside the truncated space (cutoff {self.cutoff})")
            index = index * self.levels + int(n)
        return index

    def annihilation(self, mode: int) -> sparse.csr_matrix:
        """a_mode on the phonon factor."""
        single = sparse.diags(np.sqrt(np.arange(1, self.levels, dtype=float)), 1, format="csr")
        operator = sparse.identity(1, format="csr")
        for l in range(self.n_modes):
            factor = single if l == mode else sparse.identity(self.levels, format="csr")
            operator = sparse.kron(operator, factor, format="csr")
        return operator

    def boundary_mask(self) -> np.ndarray:
        """True for phonon basis states with some mode at the cutoff."""
        grid = np.array(list(itertools.product(range(self.levels), repeat=self.n_modes)), dtype=int)
        return np.any(grid == self.cutoff, axis=1)


def _sector_blocks(modes: ModeDecomposition, res: ResonanceProfile, C: Optional[np.ndarray],
                   space: TruncatedSpace, order: int, include_offsets: bool) -> List[sparse.csr_matrix]:
    annihilators = [space.annihilation(l) for l in range(space.n_modes)]
    positions = [a + a.T for a in annihilators]
    identity = sparse.identity(space.phonon_dimension, format="csr")

    phonons = sparse.csr_matrix((space.phonon_dimension, space.phonon_dimension))
    for nu, a in zip(modes.nu, annihilators):
        phonons = phonons + nu * (a.T @ a)
    if order == 3 and C is not None and np.any(C != 0.0):
        cubic = sparse.csr_matrix(phonons.shape)
        for l, r, s in itertools.product(range(space.n_modes), repeat=3):
            if C[l, r, s] != 0.0:
                cubic = cubic + (C[l, r, s] / CODATA2018.hbar) * (positions[l] @ positions[r] @ positions[s])
        phonons = phonons + cubic / 6.0

    # -1/2 sum_n d_omega_n S_nl dz_l X_l sigma_z^n
    drive = res.domega_n[:, None] * modes.S * modes.dz[None, :]
    blocks = []
    for sector in range(space.n_sectors):
        z = space.spins(sector)
        block = phonons.copy()
        if include_offsets:
            block = block + (-0.5 * float(np.dot(res.omega_n, z))) * identity
        for l in range(space.n_modes):
            strength = -0.5 * float(np.dot(z, drive[:, l]))
            if strength != 0.0:
                block = block + strength * positions[l]
        blocks.append(sparse.csr_matrix(block))
    logger.debug("built %d spin sectors of phonon dimension %d", space.n_sectors, space.phonon_dimension)
    return blocks


def build_hamiltonian(modes: ModeDecomposition, res: ResonanceProfile, C: Optional[np.ndarray],
                      space: TruncatedSpace, order: int = 2, include_offsets: bool = True) -> sparse.csr_matrix:
    """
    Spin-phonon Hamiltonian H/hbar on the truncated space.

    Order 3 adds (1/6) sum_lrs C_lrs X_l X_r X_s / hbar with X = a + a^dagger.
    """
    if order not in (2, 3):
        raise OracleError(f"order must be 2 or 3, got {order}")
    blocks = _sector_blocks(modes, res, C, space, order, include_offsets)
    return sparse.block_diag(blocks, format="csr")


@dataclass(frozen=True, eq=False)
class PolaronFrame:
    space: TruncatedSpace
    blocks: Tuple[np.ndarray, ...]
    unitaries: Tuple[np.ndarray, ...]
    unitarity_error: float

    def matrix(self) -> sparse.csr_matrix:
        return sparse.block_diag([sparse.csr_matrix(b) for b in self.blocks], format="csr")


def polaron_transform(H: sparse.spmatrix, eps: LambDickeMatrix, space: TruncatedSpace) -> PolaronFrame:
    """
    H~ = U^dagger H U per spin sector with U = exp(sum_l theta_l (a_l^dagger - a_l)),
    theta_l = 1/2 sum_n eps_nl sigma_z^n.

    Raises:
        OracleError: if U is not unitary to 1e-12.
    """
    size = space.phonon_dimension
    annihilators = [space.annihilation(l).toarray() for l in range(space.n_modes)]
    H = sparse.csr_matrix(H)
    blocks, unitaries, worst = [], [], 0.0
    for sector in range(space.n_sectors):
        theta = 0.5 * eps.eps.T @ space.spins(sector)
        generator = np.zeros((size, size))
        for l, a in enumerate(annihilators):
            generator += theta[l] * (a.T - a)
        U = linalg.expm(generator)
        worst = max(worst, float(np.max(np.abs(U.T @ U - np.eye(size)))))
        block = H[sector * size:(sector + 1) * size, sector * size:(sector + 1) * size].toarray()
        blocks.append(U.T @ block @ U)
        unitaries.append(U)
    if worst >= UNITARITY_TOLERANCE:
        raise OracleError(f"polaron transformation lost unitarity ({worst:.2e})")
    return PolaronFrame(space, tuple(blocks), tuple(unitaries), worst)


def z_label(ions: Sequence[int]) -> str:
    return "".join(f"Z{i + 1}" for i in ions)


def _subsets(n_ions: int) -> List[Tuple[int, ...]]:
    return [s for size in range(1, n_ions + 1) for s in itertools.combinations(range(n_ions), size)]


@dataclass(frozen=True)
class OracleResult:
    extracted: Dict[str, float]
    analytic: Dict[str, float]
    truncation_error_estimate: float
    leakage: float
    leakage_flagged: bool
    cutoff: int
    order: int
    sector: Tuple[int, ...]
    unitarity_error: float = 0.0

    def relative_deviation(self, label: str) -> float:
        reference = self.analytic[label]
        return abs(self.extracted[label] - reference) / abs(reference)


def extract_coefficients(frame: PolaronFrame, sector: Optional[Sequence[int]] = None,
                         lowest_mode: Optional[float] = None) -> Tuple[Dict[str, float], float, float]:
    """
    Project every spin block of H~ on one Fock state and expand in products of sigma_z.

    Returns ``(coefficients, truncation_error_estimate, leakage)``; the leakage is the
    largest coupling out of the projected state divided by ``lowest_mode``.
    """
    space = frame.space
    occupations = tuple(sector) if sector is not None else (0,) * space.n_modes
    index = space.fock_index(occupations)
    boundary = space.boundary_mask()

    energies = np.array([block[index, index] for block in frame.blocks])
    spins = np.array([space.spins(s) for s in range(space.n_sectors)])
    coefficients = {
        z_label(ions): float(np.mean(energies * np.prod(spins[:, list(ions)], axis=1)))
        for ions in _subsets(space.n_ions)
    }

    truncation = max(float(np.sum(U[boundary, index] ** 2)) for U in frame.unitaries)
    off_state = 0.0
    for block in frame.blocks:
        column = block[:, index].copy()
        column[index] = 0.0
        off_state = max(off_state, float(np.linalg.norm(column)))
    leakage = off_state / lowest_mode if lowest_mode else off_state
    return coefficients, truncation, leakage


def analytic_coefficients(eps: LambDickeMatrix, modes: ModeDecomposition, res: ResonanceProfile,
                          C: Optional[np.ndarray], order: int, occupations: Sequence[int],
                          include_offsets: bool) -> Dict[str, float]:
    """Coefficients the polaron-frame formulas predict, keyed like the extraction."""
    n = res.n_ions
    J = spin_spin_couplings(eps, modes, keep_diagonal=True)
    single = -0.5 * res.omega_n if include_offsets else np.zeros(n)
    triples: Dict[Tuple[int, int, int], float] = {}
    if order == 3 and C is not None:
        single = single + 0.5 * (local_field_corrections(C, eps, occupations) + coincident_index_fields(C, eps))
        triples = three_body_coulomb(C, eps)
    analytic = {}
    for ions in _subsets(n):
        if len(ions) == 1:
            analytic[z_label(ions)] = float(single[ions[0]])
        elif len(ions) == 2:
            analytic[z_label(ions)] = float(-0.5 * J[ions[0], ions[1]])
        else:
            analytic[z_label(ions)] = float(triples.get(ions, 0.0))
    return analytic


def run_oracle(cfg: Configuration, n_ions: int, cutoff: int, order: int = 3,
               occupations: Optional[Sequence[int]] = None, include_offsets: bool = False) -> OracleResult:
    """
    Full pipeline for ``n_ions`` ions of ``cfg``: chain, modes, H, polaron frame, extraction.

    ``occupations`` selects the Fock state projected on (vacuum by default).
    """
    if order not in (2, 3):
        raise ConfigurationError("oracle_order", "oracle_order must be 2 or 3")
    space = TruncatedSpace(n_ions=n_ions, n_modes=n_ions, cutoff=cutoff)
    local = cfg.with_overrides(n_ions=n_ions)
    chain, modes, res, eps = axial_pipeline(local)
    C = mode_frame_cubic(add_trap_anharmonicity(cubic_tensor_axial(chain, local), local.alpha_n), modes)
    sector = tuple(occupations) if occupations is not None else (0,) * n_ions

    H = build_hamiltonian(modes, res, C, space, order, include_offsets)
    frame = polaron_transform(H, eps, space)
    extracted, truncation, leakage = extract_coefficients(frame, sector, float(modes.nu[0]))
    analytic = analytic_coefficients(eps, modes, res, C, order, sector, include_offsets)

    flagged = leakage > LEAKAGE_THRESHOLD
    if flagged:
        logger.warning("oracle leakage %.3g out of sector %s exceeds %.0e", leakage, sector, LEAKAGE_THRESHOLD)
    logger.info("oracle for %d ions at cutoff %d (order %d, dimension %d) finished",
                n_ions, cutoff, order, space.dimension)
    return OracleResult(
        extracted=extracted,
        analytic=analytic,
        truncation_error_estimate=truncation,
        leakage=leakage,
        leakage_flagged=flagged,
        cutoff=cutoff,
        order=order,
        sector=sector,
        unitarity_error=frame.unitarity_error,
    )


def cutoff_convergence(cfg: Configuration, n_ions: int, cutoffs: Sequence[int], order: int,
                       label: str) -> List[float]:
    """Extracted coefficient ``label`` for each cutoff, for a Cauchy-style convergence check."""
    values = []
    for cutoff in cutoffs:
        result = run_oracle(cfg, n_ions, cutoff, order)
        if label not in result.extracted:
            raise OracleError(f"unknown operator label '{label}'")
        values.append(result.extracted[label])
    return values
