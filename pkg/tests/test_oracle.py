import itertools

import numpy as np
import pytest
from scipy import linalg
from scipy.sparse.linalg import eigsh

from magic_coupling_studio import OracleError
from magic_coupling_studio.chain import add_trap_anharmonicity, cubic_tensor_axial
from magic_coupling_studio.couplings import axial_pipeline, mode_frame_cubic, spin_spin_couplings
from magic_coupling_studio.oracle import (TruncatedSpace, analytic_coefficients, build_hamiltonian,
                                          cutoff_convergence, extract_coefficients, polaron_transform, run_oracle,
                                          z_label)

TRAP_ALPHA = 1.004611e-7


def _system(cfg):
    chain, modes, res, eps = axial_pipeline(cfg)
    C = mode_frame_cubic(add_trap_anharmonicity(cubic_tensor_axial(chain, cfg), cfg.alpha_n), modes)
    return modes, res, eps, C


def test_space_limits():
    with pytest.raises(OracleError):
        TruncatedSpace(n_ions=4, n_modes=4, cutoff=2)
    with pytest.raises(OracleError):
        TruncatedSpace(n_ions=3, n_modes=3, cutoff=60)
    with pytest.raises(OracleError):
        TruncatedSpace(n_ions=2, n_modes=2, cutoff=0)
    space = TruncatedSpace(n_ions=2, n_modes=2, cutoff=3)
    assert space.dimension == 4 * 16
    assert space.fock_index((1, 2)) == 6
    np.testing.assert_array_equal(space.spins(0), [1.0, 1.0])
    np.testing.assert_array_equal(space.spins(2), [-1.0, 1.0])
    with pytest.raises(OracleError):
        space.fock_index((4, 0))


def test_annihilation_operator():
    space = TruncatedSpace(n_ions=1, n_modes=2, cutoff=4)
    a = space.annihilation(1).toarray()
    # |0, 2> -> sqrt(2) |0, 1>
    assert a[space.fock_index((0, 1)), space.fock_index((0, 2))] == pytest.approx(np.sqrt(2.0))
    assert space.boundary_mask().sum() == 25 - 16


def test_hamiltonian_is_hermitian(yb_config):
    cfg = yb_config(n_ions=2, alpha_n=TRAP_ALPHA)
    modes, res, _, C = _system(cfg)
    space = TruncatedSpace(2, 2, 6)
    H = build_hamiltonian(modes, res, C, space, order=3).toarray()
    assert np.max(np.abs(H - H.conj().T)) <= 1e-14 * np.max(np.abs(H))


def test_zero_gradient_spectrum(yb_config):
    cfg = yb_config(n_ions=2, dB_dz=0.0, b0=1e-4)
    modes, res, _, _ = _system(cfg)
    space = TruncatedSpace(2, 2, 3)
    H = build_hamiltonian(modes, res, None, space, order=2, include_offsets=True).toarray()
    expected = []
    for sector in range(space.n_sectors):
        offset = -0.5 * float(np.dot(res.omega_n, space.spins(sector)))
        for n0, n1 in itertools.product(range(4), repeat=2):
            expected.append(offset + n0 * modes.nu[0] + n1 * modes.nu[1])
    np.testing.assert_allclose(linalg.eigvalsh(H), np.sort(expected), rtol=1e-12, atol=1e-6)


def test_sparse_and_dense_ground_energies_agree(yb_config):
    cfg = yb_config(n_ions=2, alpha_n=TRAP_ALPHA)
    modes, res, _, C = _system(cfg)
    H = build_hamiltonian(modes, res, C, TruncatedSpace(2, 2, 6), order=3)
    dense = linalg.eigvalsh(H.toarray())[0]
    sparse_value = eigsh(H, k=1, which="SA", return_eigenvectors=False)[0]
    assert sparse_value == pytest.approx(dense, rel=1e-9)


def test_order_three_without_cubic_terms_equals_order_two(yb_config):
    modes, res, _, _ = _system(yb_config(n_ions=2))
    space = TruncatedSpace(2, 2, 5)
    zero = np.zeros((2, 2, 2))
    second = build_hamiltonian(modes, res, zero, space, order=2)
    third = build_hamiltonian(modes, res, zero, space, order=3)
    np.testing.assert_array_equal(second.toarray(), third.toarray())


def test_polaron_frame_is_trivial_without_gradient(yb_config):
    modes, res, eps, C = _system(yb_config(n_ions=2, dB_dz=0.0))
    space = TruncatedSpace(2, 2, 4)
    H = build_hamiltonian(modes, res, C, space, order=3)
    frame = polaron_transform(H, eps, space)
    for U in frame.unitaries:
        np.testing.assert_allclose(U, np.eye(space.phonon_dimension), rtol=0, atol=1e-15)
    dense = H.toarray()
    np.testing.assert_allclose(frame.matrix().toarray(), dense, rtol=1e-14, atol=1e-14 * np.abs(dense).max())


def test_polaron_transform_preserves_the_spectrum(yb_config):
    cfg = yb_config(n_ions=2, alpha_n=TRAP_ALPHA)
    modes, res, eps, C = _system(cfg)
    space = TruncatedSpace(2, 2, 6)
    H = build_hamiltonian(modes, res, C, space, order=3)
    frame = polaron_transform(H, eps, space)
    assert frame.unitarity_error < 1e-12
    size = space.phonon_dimension
    for sector, block in enumerate(frame.blocks):
        original = H[sector * size:(sector + 1) * size, sector * size:(sector + 1) * size].toarray()
        before, after = linalg.eigvalsh(original), linalg.eigvalsh(block)
        np.testing.assert_allclose(after, before, rtol=1e-12, atol=1e-9 * np.abs(before).max())


def test_displacement_converges_with_cutoff(yb_config):
    modes, res, eps, _ = _system(yb_config(n_ions=2))
    errors = []
    for cutoff in (4, 8, 12):
        space = TruncatedSpace(2, 2, cutoff)
        H = build_hamiltonian(modes, res, None, space, order=2)
        frame = polaron_transform(H, eps, space)
        U = frame.unitaries[0]
        a = space.annihilation(0).toarray()
        theta = 0.5 * eps.eps[:, 0].sum()
        vacuum = space.fock_index((0, 0))
        residual = (U.T @ a @ U)[:, vacuum] - theta * np.eye(space.phonon_dimension)[:, vacuum]
        errors.append(float(np.linalg.norm(residual)))
    assert errors[0] > errors[1] > errors[2]


def test_two_ion_spin_spin_coefficient(yb_config):
    cfg = yb_config(dB_dz=19.0)
    result = run_oracle(cfg, n_ions=2, cutoff=10, order=2)
    assert result.relative_deviation("Z1Z2") < 1e-6
    _, modes, _, eps = axial_pipeline(cfg.with_overrides(n_ions=2))
    J = spin_spin_couplings(eps, modes)
    assert result.analytic["Z1Z2"] == pytest.approx(-0.5 * J[0, 1], rel=1e-12)
    assert result.unitarity_error < 1e-12
    assert not result.leakage_flagged


def test_three_ion_third_order_coefficients(yb_config):
    cfg = yb_config(n_ions=3, alpha_n=TRAP_ALPHA)
    result = run_oracle(cfg, n_ions=3, cutoff=8, order=3)
    assert set(result.extracted) == {"Z1", "Z2", "Z3", "Z1Z2", "Z1Z3", "Z2Z3", "Z1Z2Z3"}
    assert result.analytic["Z1Z2Z3"] != 0.0
    for label in ("Z1Z2Z3", "Z1", "Z2", "Z3"):
        assert result.relative_deviation(label) < 1e-3
    assert result.relative_deviation("Z1Z2") < 1e-6
    assert result.truncation_error_estimate < 1e-6


def test_occupied_sector_changes_the_local_fields(yb_config):
    cfg = yb_config(n_ions=2, alpha_n=TRAP_ALPHA)
    vacuum = run_oracle(cfg, n_ions=2, cutoff=10, order=3)
    excited = run_oracle(cfg, n_ions=2, cutoff=10, order=3, occupations=(1, 0))
    assert excited.sector == (1, 0)
    for label in ("Z1", "Z2"):
        assert excited.relative_deviation(label) < 1e-3
        assert excited.analytic[label] != pytest.approx(vacuum.analytic[label], rel=1e-3)


def test_offsets_enter_the_single_spin_terms(yb_config):
    cfg = yb_config(n_ions=2, b0=1e-4)
    result = run_oracle(cfg, n_ions=2, cutoff=8, order=2, include_offsets=True)
    _, res, _, _ = _system(cfg)
    assert result.analytic["Z1"] == pytest.approx(-0.5 * res.omega_n[0], rel=1e-12)
    assert result.relative_deviation("Z1") < 1e-9


def test_extraction_matches_analytic_map(yb_config):
    cfg = yb_config(n_ions=2, alpha_n=TRAP_ALPHA)
    modes, res, eps, C = _system(cfg)
    space = TruncatedSpace(2, 2, 10)
    frame = polaron_transform(build_hamiltonian(modes, res, C, space, order=3, include_offsets=False), eps, space)
    extracted, truncation, leakage = extract_coefficients(frame, (0, 0), float(modes.nu[0]))
    analytic = analytic_coefficients(eps, modes, res, C, 3, (0, 0), include_offsets=False)
    assert set(extracted) == set(analytic) == {"Z1", "Z2", "Z1Z2"}
    for label in analytic:
        assert extracted[label] == pytest.approx(analytic[label], rel=1e-6)
    assert truncation < 1e-12
    assert leakage >= 0.0


def test_cutoff_convergence_is_cauchy(yb_config):
    cfg = yb_config(dB_dz=400.0)
    values = cutoff_convergence(cfg, n_ions=2, cutoffs=(4, 6, 8, 10), order=2, label="Z1Z2")
    steps = np.abs(np.diff(values))
    assert steps[0] > steps[1] > steps[2]
    with pytest.raises(OracleError):
        cutoff_convergence(cfg, n_ions=2, cutoffs=(4,), order=2, label="Z7")


def test_labels():
    assert z_label((0, 2)) == "Z1Z3"
    assert z_label((1,)) == "Z2"
