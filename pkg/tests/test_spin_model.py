import numpy as np
import pytest

from syncprobe.spin_model import (
    QubitPairParams,
    build_operators,
    diagonalize,
    direct_diagonalize,
    eigenmode_transform,
)

# Frozen oracle values, computed once by dense diagonalization of the 4x4
# Hamiltonian and kept as literals so a regression in the closed form cannot
# hide behind a regression in the oracle.
E1_FIG1 = 1.3416407864998738   # omega_p = 1.2, lam = 0.2
E2_FIG1 = 0.8944271909999159
DELTA_RES = 2.0396078054371138  # omega_p = 1.0, lam = 0.2
E1_RES = 1.2198039027185569
E2_RES = 0.8198039027185569


def test_decoupled_pair_is_trivial():
    eig = diagonalize(QubitPairParams(omega_p=0.5, lam=0.0))
    assert eig.E1 == pytest.approx(1.0, abs=1e-15)
    assert eig.E2 == pytest.approx(0.5, abs=1e-15)
    assert eig.theta_plus == 0.0
    assert eig.theta_minus == 0.0


def test_closed_form_matches_frozen_values():
    eig = diagonalize(QubitPairParams(omega_p=1.2, lam=0.2))
    assert eig.E1 == pytest.approx(E1_FIG1, abs=1e-12)
    assert eig.E2 == pytest.approx(E2_FIG1, abs=1e-12)
    assert eig.E1 == pytest.approx(0.5 * (eig.Delta + eig.delta), abs=1e-15)
    assert eig.E2 == pytest.approx(0.5 * (eig.Delta - eig.delta), abs=1e-15)


def test_resonance_forces_theta_minus_pi4():
    eig = diagonalize(QubitPairParams(omega_p=1.0, lam=0.2))
    assert eig.Delta == pytest.approx(DELTA_RES, abs=1e-12)
    assert eig.delta == pytest.approx(0.4, abs=1e-15)
    assert eig.E1 == pytest.approx(E1_RES, abs=1e-12)
    assert eig.E2 == pytest.approx(E2_RES, abs=1e-12)
    assert eig.theta_minus == pytest.approx(np.pi / 4, abs=1e-15)


def test_direct_diagonalize_decoupled_spectrum():
    evals, evecs = direct_diagonalize(QubitPairParams(omega_p=0.5, lam=0.0))
    np.testing.assert_allclose(evals, [-0.75, -0.25, 0.25, 0.75], atol=1e-14)
    # Columns are eigenvectors of H_S
    assert np.allclose(evecs.conj().T @ evecs, np.eye(4), atol=1e-14)


def test_direct_diagonalize_traceless():
    rng = np.random.default_rng(3)
    for _ in range(20):
        p = QubitPairParams(omega_p=rng.uniform(0.1, 3.0),
                            lam=rng.uniform(0.0, 1.0))
        evals, _ = direct_diagonalize(p)
        assert abs(np.sum(evals)) < 1e-12


def test_closed_form_spectrum_vs_direct():
    rng = np.random.default_rng(11)
    for _ in range(100):
        p = QubitPairParams(omega_p=rng.uniform(0.1, 3.0),
                            lam=rng.uniform(0.0, 1.0))
        eig = diagonalize(p)
        evals, _ = direct_diagonalize(p)
        predicted = np.sort([-(eig.E1 + eig.E2) / 2, -(eig.E1 - eig.E2) / 2,
                             (eig.E1 - eig.E2) / 2, (eig.E1 + eig.E2) / 2])
        np.testing.assert_allclose(evals, predicted, atol=1e-10)


def test_operator_identities_random_sweep():
    """Anticommutation, parity, and both sigma-x decompositions at 1e-12."""
    rng = np.random.default_rng(42)
    eye = np.eye(4)
    for _ in range(100):
        p = QubitPairParams(omega_p=rng.uniform(0.1, 3.0),
                            lam=rng.uniform(0.0, 1.0))
        eig = diagonalize(p)
        ops = build_operators(p, eig)
        e1, e2 = ops.eta1, ops.eta2
        e1d, e2d = e1.conj().T, e2.conj().T
        assert np.max(np.abs(e1 @ e1)) < 1e-12
        assert np.max(np.abs(e1 @ e2 + e2 @ e1)) < 1e-12
        assert np.max(np.abs(e1 @ e2d + e2d @ e1)) < 1e-12
        assert np.max(np.abs(e1 @ e1d + e1d @ e1 - eye)) < 1e-12
        assert np.max(np.abs(e2 @ e2d + e2d @ e2 - eye)) < 1e-12

        n1, n2 = e1d @ e1, e2d @ e2
        h_re = eig.E1 * (n1 - eye / 2) + eig.E2 * (n2 - eye / 2)
        assert np.max(np.abs(h_re - ops.h_s)) < 1e-12
        assert np.max(np.abs(ops.h_s @ n1 - n1 @ ops.h_s)) < 1e-12

        par = (eye - 2 * n1) @ (eye - 2 * n2)
        assert np.max(np.abs(par - ops.parity)) < 1e-12
        assert np.max(np.abs(par @ par - eye)) < 1e-12

        s = eig.theta_plus + eig.theta_minus
        d = eig.theta_plus - eig.theta_minus
        sxq = np.cos(s) * (e1d + e1) + np.sin(s) * (e2d + e2)
        assert np.max(np.abs(sxq - ops.sx_q)) < 1e-12
        t1, t2 = ops.eta1_tilde, ops.eta2_tilde
        sxp = (np.sin(d) * (t1.conj().T + t1)
               + np.cos(d) * (t2.conj().T + t2))
        assert np.max(np.abs(sxp - ops.sx_p)) < 1e-12


def test_decomposition_coefficients_normalized():
    eig = diagonalize(QubitPairParams(omega_p=1.2, lam=0.2))
    s = eig.theta_plus + eig.theta_minus
    assert np.cos(s) ** 2 + np.sin(s) ** 2 == pytest.approx(1.0, abs=1e-15)


def test_lam_zero_modes_are_bare_ladder_operators():
    # omega_q > omega_p: eta1 is the qubit mode
    p = QubitPairParams(omega_p=0.5, lam=0.0)
    ops = build_operators(p, diagonalize(p))
    c1 = np.kron(np.array([[0, 1], [0, 0]], dtype=complex), np.eye(2))
    np.testing.assert_allclose(ops.eta1, c1.conj().T, atol=1e-15)
    np.testing.assert_allclose(ops.parity, ops.sz_q @ ops.sz_p, atol=1e-15)
    # omega_p > omega_q: the angle branch relabels so eta1 is the probe mode
    p = QubitPairParams(omega_p=1.2, lam=0.0)
    ops = build_operators(p, diagonalize(p))
    c2 = np.kron(np.diag([1.0, -1.0]).astype(complex),
                 np.array([[0, 1], [0, 0]], dtype=complex))
    np.testing.assert_allclose(ops.eta1, -c2.conj().T, atol=1e-15)


def test_hamiltonian_reconstruction_fig1():
    p = QubitPairParams(omega_p=1.2, lam=0.2)
    eig = diagonalize(p)
    ops = build_operators(p, eig)
    eye = np.eye(4)
    n1 = ops.eta1.conj().T @ ops.eta1
    n2 = ops.eta2.conj().T @ ops.eta2
    h_re = eig.E1 * (n1 - eye / 2) + eig.E2 * (n2 - eye / 2)
    assert np.max(np.abs(h_re - ops.h_s)) < 1e-12


def test_eigenmode_transform_diagonalizes():
    rng = np.random.default_rng(5)
    for _ in range(30):
        p = QubitPairParams(omega_p=rng.uniform(0.2, 2.5),
                            lam=rng.uniform(0.0, 0.8))
        eig = diagonalize(p)
        ops = build_operators(p, eig)
        v = eigenmode_transform(ops)
        assert np.max(np.abs(v.conj().T @ v - np.eye(4))) < 1e-10
        hd = v.conj().T @ ops.h_s @ v
        want = np.diag([-(eig.E1 + eig.E2) / 2, (eig.E2 - eig.E1) / 2,
                        (eig.E1 - eig.E2) / 2, (eig.E1 + eig.E2) / 2])
        assert np.max(np.abs(hd - want)) < 1e-10


def test_param_validation():
    with pytest.raises(ValueError, match="omega_p"):
        QubitPairParams(omega_p=-1.0)
    with pytest.raises(ValueError, match="lam"):
        QubitPairParams(omega_p=1.0, lam=-0.1)
    with pytest.raises(ValueError, match="temperature"):
        QubitPairParams(omega_p=1.0, temperature=-2.0)
