"""
Effective spin and spin-phonon interaction strengths.

All returned frequencies are angular (rad/s). A per-ion "field" f_n is reported so that
the effective Hamiltonian contains +(hbar/2) f_n sigma_z^(n).
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .chain import (ChainSolution, CubicTensor, Direction, ModeDecomposition, add_trap_anharmonicity,
                    axial_hessian, cubic_tensor_axial, cubic_tensor_transversal, normal_modes,
                    solve_equilibrium, transversal_hessian)
from .config import Configuration
from .constants import CODATA2018
from .errors import ConfigurationError, CouplingError
from .field import FieldProfile, ResonanceProfile, resonance_profile

logger = logging.getLogger(__name__)

HBAR = CODATA2018.hbar

Triple = Tuple[int, int, int]


@dataclass(frozen=True, eq=False)
class LambDickeMatrix:
    direction: Direction
    eps: np.ndarray


def lamb_dicke(modes: ModeDecomposition, res: ResonanceProfile) -> LambDickeMatrix:
    """eps_nl = dz_l * d_omega_n * S_nl / nu_l, using the gradient along the modes' direction."""
    gradient = {
        Direction.AXIAL: res.domega_n,
        Direction.X: res.domega_x,
        Direction.Y: res.domega_y,
    }[modes.direction]
    eps = gradient[:, None] * modes.S * (modes.dz / modes.nu)[None, :]
    return LambDickeMatrix(modes.direction, eps)


def spin_spin_couplings(eps: LambDickeMatrix, modes: ModeDecomposition,
                        transversal: Sequence[Tuple[LambDickeMatrix, ModeDecomposition]] = (),
                        keep_diagonal: bool = False) -> np.ndarray:
    """
    J_ij = sum_l nu_l eps_il eps_jl, summed over the axial and any transversal directions.

    The diagonal is a constant energy shift and is zeroed unless ``keep_diagonal``.
    """
    couplings = (eps.eps * modes.nu[None, :]) @ eps.eps.T
    for eps_t, modes_t in transversal:
        couplings = couplings + (eps_t.eps * modes_t.nu[None, :]) @ eps_t.eps.T
    couplings = 0.5 * (couplings + couplings.T)
    if not keep_diagonal:
        np.fill_diagonal(couplings, 0.0)
    return couplings


def mode_frame_cubic(tensor: CubicTensor, modes: ModeDecomposition) -> np.ndarray:
    """C_ijk = sum_mnl B_mnl S_mi S_nj S_lk dz_i dz_j dz_k, in J."""
    S = modes.S
    contracted = np.einsum("mnl,mi,nj,lk->ijk", tensor.values, S, S, S, optimize=True)
    dz = modes.dz
    return contracted * dz[:, None, None] * dz[None, :, None] * dz[None, None, :]


def ordered_triples(tensor: np.ndarray) -> Dict[Triple, float]:
    n = tensor.shape[0]
    return {(i, j, k): float(tensor[i, j, k]) for i, j, k in itertools.combinations(range(n), 3)}


def _spin_triple_tensor(C: np.ndarray, eps: LambDickeMatrix) -> np.ndarray:
    e = eps.eps
    return np.einsum("lrs,il,jr,ks->ijk", C, e, e, e, optimize=True) / HBAR


def three_body_coulomb(C: np.ndarray, eps: LambDickeMatrix) -> Dict[Triple, float]:
    """
    Coefficient of sigma_z^i sigma_z^j sigma_z^k (i < j < k) in H/hbar.

    The six orderings of a distinct triple together carry the 1/6 of the cubic
    expansion, so each ordered triple gets sum_lrs C_lrs eps_il eps_jr eps_ks / hbar.
    """
    return ordered_triples(_spin_triple_tensor(C, eps))


def local_field_corrections(C: np.ndarray, eps: LambDickeMatrix, occupations: Sequence[int]) -> np.ndarray:
    """f_n = sum_ik C_iik eps_nk (2 n_i + 1) / hbar."""
    weights = 2.0 * np.asarray(occupations, dtype=float) + 1.0
    if weights.shape != (C.shape[0],):
        raise ConfigurationError("phonon_occupations", f"need {C.shape[0]} phonon occupations")
    diagonal = np.einsum("iik,i->k", C, weights)
    return eps.eps @ diagonal / HBAR


def coincident_index_fields(C: np.ndarray, eps: LambDickeMatrix) -> np.ndarray:
    """
    Local fields left over from the cubic spin term when two spin indices coincide.

    Z_m^2 = 1 collapses (m, m, p) into a single Z_p, giving
    f_p = (3 sum_m T_mmp - 2 T_ppp) / 3 with T the spin triple tensor.
    """
    triple = _spin_triple_tensor(C, eps)
    paired = np.einsum("mmp->p", triple)
    own = np.einsum("ppp->p", triple)
    return (3.0 * paired - 2.0 * own) / 3.0


@dataclass(frozen=True)
class SpinPhononMagnitudes:
    two_body_max: float
    pair_max: float


def spin_phonon_magnitudes(C: np.ndarray, eps: LambDickeMatrix) -> SpinPhononMagnitudes:
    """
    Largest single operator coefficient of the two phonon-assisted terms in H/hbar.

    Both carry the 1/2 of the sorted cubic expansion:
    (1/2) C_ijk X_i eps_nj eps_mk Z_n Z_m and (1/2) C_ijk (a_i a_j + ...) eps_nk Z_n.
    """
    if C.size == 0:
        return SpinPhononMagnitudes(0.0, 0.0)
    reach = np.max(np.abs(eps.eps), axis=0)
    magnitude = np.abs(C)
    two_body = magnitude * reach[None, :, None] * reach[None, None, :]
    pair = magnitude * reach[None, None, :]
    return SpinPhononMagnitudes(0.5 * float(two_body.max()) / HBAR, 0.5 * float(pair.max()) / HBAR)


def phonon_resonance_gap(modes: ModeDecomposition) -> float:
    """min over i <= j and all k of |nu_i + nu_j - nu_k|."""
    nu = modes.nu
    sums = nu[:, None] + nu[None, :]
    upper = sums[np.triu_indices(len(nu))]
    return float(np.min(np.abs(upper[:, None] - nu[None, :])))


def phonon_hopping_gap(modes: ModeDecomposition) -> float:
    """min over i != j of |nu_i - nu_j|; infinite for a single mode."""
    if modes.n_modes < 2:
        return math.inf
    return float(np.min(np.diff(np.sort(modes.nu))))


def three_body_trap(J2_full: np.ndarray, res: ResonanceProfile, alpha_n: Sequence[float]) -> Dict[Triple, float]:
    """
    hbar J_ijk = sum_n alpha_n J_in J_jn J_kn / d_omega_n^3 with the full coupling matrix.

    Raises:
        CouplingError: if an ion has anharmonicity but no field gradient.
    """
    alpha = np.asarray(alpha_n, dtype=float)
    active = alpha != 0.0
    if np.any(active & (res.domega_n == 0.0)):
        ions = [int(i) + 1 for i in np.flatnonzero(active & (res.domega_n == 0.0))]
        raise CouplingError(f"trap anharmonicity on ions {ions} needs a non-zero field gradient there")
    weights = np.zeros_like(alpha)
    weights[active] = alpha[active] / res.domega_n[active] ** 3
    tensor = np.einsum("n,in,jn,kn->ijk", weights, J2_full, J2_full, J2_full, optimize=True) / HBAR
    return ordered_triples(tensor)


def three_body_trap_estimate(n_ions: int, alpha: float, delta_z: float, epsilon: float) -> float:
    """Typical trap-induced three-body strength alpha dz^3 eps^3 / (sqrt(N) hbar)."""
    return alpha * delta_z ** 3 * epsilon ** 3 / (math.sqrt(n_ions) * HBAR)


def center_of_mass_lamb_dicke(cfg: Configuration) -> float:
    """eps = d_omega * dz / (omega_z sqrt(N)) for the centre-of-mass mode."""
    gradient = abs(cfg.g_factor_combination) * CODATA2018.muB * abs(cfg.db_dz) / HBAR
    return gradient * cfg.delta_z_com / (cfg.omega_z * math.sqrt(cfg.n_ions))


@dataclass(frozen=True)
class StabilityHierarchy:
    stability_ratio: float
    coupling_ratio: float
    bound: float
    holds: bool


def trap_stability_hierarchy(cfg: Configuration, J2: np.ndarray, J3_trap: Dict[Triple, float],
                             alpha: float) -> StabilityHierarchy:
    """
    Compare J3/J2 against eps/sqrt(N).

    ``holds`` requires the realised ratio to sit at least a decade below the bound.
    """
    epsilon = center_of_mass_lamb_dicke(cfg)
    bound = epsilon / math.sqrt(cfg.n_ions)
    j2_max = float(np.max(np.abs(J2))) if J2.size else 0.0
    j3_max = max((abs(v) for v in J3_trap.values()), default=0.0)
    ratio = j3_max / j2_max if j2_max > 0 else 0.0
    stability = alpha * cfg.delta_z_com ** 3 / (HBAR * cfg.omega_z)
    return StabilityHierarchy(stability, ratio, bound, ratio < 0.1 * bound)


def _gamma_or_zero(res: ResonanceProfile) -> np.ndarray:
    return np.where(res.gamma_defined, res.gamma_n, 0.0)


def three_body_curvature(J2_full: np.ndarray, gamma_n: np.ndarray
                         ) -> Tuple[Dict[Triple, float], Dict[Triple, float]]:
    """
    Curvature-induced three-body terms.

    Returns ``(J_nij, J_sym)``: J_nij = gamma_n J_ni J_nj for i < j with n not in {i, j},
    and J_sym_ijk = gamma_i J_ij J_ik + gamma_j J_ji J_jk + gamma_k J_ki J_kj for i < j < k.
    The sigma sigma sigma coefficient in H/hbar is -J_sym / 2.
    """
    gamma = np.where(np.isnan(gamma_n), 0.0, gamma_n)
    n = J2_full.shape[0]
    unsymmetrized: Dict[Triple, float] = {}
    for centre in range(n):
        others = [k for k in range(n) if k != centre]
        for i, j in itertools.combinations(others, 2):
            unsymmetrized[(centre, i, j)] = float(gamma[centre] * J2_full[centre, i] * J2_full[centre, j])
    symmetrized = {
        (i, j, k): float(gamma[i] * J2_full[i, j] * J2_full[i, k]
                         + gamma[j] * J2_full[j, i] * J2_full[j, k]
                         + gamma[k] * J2_full[k, i] * J2_full[k, j])
        for i, j, k in itertools.combinations(range(n), 3)
    }
    return unsymmetrized, symmetrized


def curvature_tensor(modes: ModeDecomposition, res: ResonanceProfile) -> np.ndarray:
    """C~_ilr = d2_omega_i S_il S_ir dz_l dz_r (rad/s)."""
    weighted = modes.S * modes.dz[None, :]
    return res.d2omega_n[:, None, None] * weighted[:, :, None] * weighted[:, None, :]


def three_body_curvature_contracted(modes: ModeDecomposition, res: ResonanceProfile,
                                    eps: LambDickeMatrix) -> Dict[Triple, float]:
    """Same map as the unsymmetrized curvature term, via sum_lr C~_nlr eps_il eps_jr."""
    tilde = curvature_tensor(modes, res)
    full = np.einsum("nlr,il,jr->nij", tilde, eps.eps, eps.eps, optimize=True)
    n = res.n_ions
    return {
        (centre, i, j): float(full[centre, i, j])
        for centre in range(n)
        for i, j in itertools.combinations([k for k in range(n) if k != centre], 2)
    }


def curvature_local_fields(tilde: np.ndarray, occupations: Sequence[int]) -> np.ndarray:
    """f_i = -1/2 sum_r C~_irr (2 n_r + 1)."""
    weights = 2.0 * np.asarray(occupations, dtype=float) + 1.0
    return -0.5 * np.einsum("irr,r->i", tilde, weights)


def curvature_estimate(n_ions: int, d2omega: float, delta_z: float, epsilon: float) -> float:
    """Typical curvature-induced three-body strength d2_omega dz^2 eps^2 / N."""
    return d2omega * delta_z ** 2 * epsilon ** 2 / n_ions


@dataclass(frozen=True, eq=False)
class TransversalCorrections:
    local_field: np.ndarray
    mode_coupling_max: float
    tensors: Tuple[np.ndarray, ...]


def transversal_mode_tensor(tilde_b: CubicTensor, axial: ModeDecomposition,
                            transversal: ModeDecomposition) -> np.ndarray:
    """
    C^a_lrs = -3 dz_l da_r da_s sum_mnp B~_mnp S3_pl Sa_mr Sa_ns.

    Index l runs over axial modes, r and s over transversal modes of one direction.
    """
    Sa = transversal.S
    contracted = np.einsum("mnp,pl,mr,ns->lrs", tilde_b.values, axial.S, Sa, Sa, optimize=True)
    dz, da = axial.dz, transversal.dz
    return -3.0 * contracted * dz[:, None, None] * da[None, :, None] * da[None, None, :]


def transversal_corrections(tensors: Sequence[np.ndarray], eps_axial: LambDickeMatrix,
                            occupations: Sequence[int]) -> TransversalCorrections:
    """
    Local field f_n = 2 sum_a sum_lr C^a_lrr eps_nl (2 n_r + 1) / hbar and max |C^a| / hbar.

    ``occupations`` are the transversal phonon numbers, shared by both directions.
    """
    weights = 2.0 * np.asarray(occupations, dtype=float) + 1.0
    field = np.zeros(eps_axial.eps.shape[0])
    largest = 0.0
    for tensor in tensors:
        field = field + 2.0 * eps_axial.eps @ np.einsum("lrr,r->l", tensor, weights) / HBAR
        if tensor.size:
            largest = max(largest, float(np.max(np.abs(tensor))) / HBAR)
    return TransversalCorrections(field, largest, tuple(tensors))


@dataclass(frozen=True, eq=False)
class CouplingReport:
    cfg: Configuration
    chain: ChainSolution
    modes: ModeDecomposition
    resonance: ResonanceProfile
    eps: LambDickeMatrix
    J2: np.ndarray
    J2_full: np.ndarray
    C: np.ndarray
    J3_coulomb: Dict[Triple, float]
    J3_trap: Dict[Triple, float]
    J3_trap_estimate: float
    trap_hierarchy: Optional[StabilityHierarchy]
    J3_curvature: Dict[Triple, float]
    J3_curvature_symmetrized: Dict[Triple, float]
    curvature_local_field: np.ndarray
    curvature_estimate: float
    local_field: np.ndarray
    coincident_field: np.ndarray
    spin_phonon_2body_max: float
    spin_phonon_pair_max: float
    resonance_gap: float
    hopping_gap: float
    transversal_local_field: Optional[np.ndarray] = None
    transversal_mode_coupling_max: Optional[float] = None

    @property
    def n_ions(self) -> int:
        return self.cfg.n_ions


def axial_pipeline(cfg: Configuration) -> Tuple[ChainSolution, ModeDecomposition, ResonanceProfile, LambDickeMatrix]:
    chain = solve_equilibrium(cfg.n_ions, length_scale=cfg.length_scale)
    modes = normal_modes(axial_hessian(chain, cfg), cfg, Direction.AXIAL)
    res = resonance_profile(FieldProfile.from_config(cfg), chain, cfg)
    return chain, modes, res, lamb_dicke(modes, res)


def _is_mirror_symmetric(cfg: Configuration) -> bool:
    return cfg.d2b_dz2 == 0.0 and not any(cfg.alpha_n)


def compute_report(cfg: Configuration, transversal: Optional[bool] = None) -> CouplingReport:
    """
    Every coupling of one configuration.

    Transversal terms are evaluated when ``omega_radial`` is configured, unless
    ``transversal`` says otherwise.
    """
    chain, modes, res, eps = axial_pipeline(cfg)
    if transversal is None:
        transversal = cfg.omega_radial is not None
    if transversal and cfg.omega_radial is None:
        raise ConfigurationError("omega_radial", "transversal analysis requires omega_radial")

    transversal_modes = []
    if transversal:
        for direction in (Direction.X, Direction.Y):
            transversal_modes.append(normal_modes(transversal_hessian(chain, cfg, direction), cfg, direction))
    coupled = [(lamb_dicke(m, res), m) for m in transversal_modes] if cfg.has_transversal_gradient else []

    J2_full = spin_spin_couplings(eps, modes, coupled, keep_diagonal=True)
    J2 = J2_full.copy()
    np.fill_diagonal(J2, 0.0)

    coulomb = cubic_tensor_axial(chain, cfg)
    C_coulomb = mode_frame_cubic(coulomb, modes)
    C = mode_frame_cubic(add_trap_anharmonicity(coulomb, cfg.alpha_n), modes) if any(cfg.alpha_n) else C_coulomb

    local_field = local_field_corrections(C, eps, cfg.phonon_occupations)
    coincident = coincident_index_fields(C, eps)

    alpha = np.asarray(cfg.alpha_n)
    epsilon = center_of_mass_lamb_dicke(cfg)
    if np.any(alpha != 0.0):
        J3_trap = three_body_trap(J2_full, res, alpha)
        alpha_typical = float(np.max(np.abs(alpha)))
        trap_estimate = three_body_trap_estimate(cfg.n_ions, alpha_typical, cfg.delta_z_com, epsilon)
        hierarchy = trap_stability_hierarchy(cfg, J2, J3_trap, alpha_typical)
    else:
        J3_trap = ordered_triples(np.zeros((cfg.n_ions,) * 3))
        trap_estimate, hierarchy = 0.0, None

    J3_curv, J3_curv_sym = three_body_curvature(J2_full, _gamma_or_zero(res))
    tilde = curvature_tensor(modes, res)
    curvature_field = curvature_local_fields(tilde, cfg.phonon_occupations)
    d2omega = float(np.max(np.abs(res.d2omega_n))) if cfg.n_ions else 0.0

    transversal_field, transversal_max = None, None
    if transversal:
        tilde_b = cubic_tensor_transversal(chain, cfg)
        tensors = [transversal_mode_tensor(tilde_b, modes, m) for m in transversal_modes]
        corrections = transversal_corrections(tensors, eps, cfg.transversal_occupations)
        transversal_field, transversal_max = corrections.local_field, corrections.mode_coupling_max

    if _is_mirror_symmetric(cfg):
        local_field = 0.5 * (local_field - local_field[::-1])
        coincident = 0.5 * (coincident - coincident[::-1])
        if transversal_field is not None:
            transversal_field = 0.5 * (transversal_field - transversal_field[::-1])

    magnitudes = spin_phonon_magnitudes(C, eps)
    logger.info("couplings for %d ions at %.4g T/m computed", cfg.n_ions, cfg.db_dz)
    return CouplingReport(
        cfg=cfg,
        chain=chain,
        modes=modes,
        resonance=res,
        eps=eps,
        J2=J2,
        J2_full=J2_full,
        C=C,
        J3_coulomb=three_body_coulomb(C_coulomb, eps),
        J3_trap=J3_trap,
        J3_trap_estimate=trap_estimate,
        trap_hierarchy=hierarchy,
        J3_curvature=J3_curv,
        J3_curvature_symmetrized=J3_curv_sym,
        curvature_local_field=curvature_field,
        curvature_estimate=curvature_estimate(cfg.n_ions, d2omega, cfg.delta_z_com, epsilon),
        local_field=local_field,
        coincident_field=coincident,
        spin_phonon_2body_max=magnitudes.two_body_max,
        spin_phonon_pair_max=magnitudes.pair_max,
        resonance_gap=phonon_resonance_gap(modes),
        hopping_gap=phonon_hopping_gap(modes),
        transversal_local_field=transversal_field,
        transversal_mode_coupling_max=transversal_max,
    )
