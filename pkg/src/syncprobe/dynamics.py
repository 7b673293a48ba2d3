"""Time evolution of the 4x4 density matrix under the secular master equation.

Two independent evolution paths are kept first class and are cross-checked in
the tests:

* ``evolve_analytic`` solves the decoupled blocks of the secular equation in
  the eigenmode (quasiparticle Fock) basis by exact eigendecomposition of
  constant 2x2 coefficient matrices, then reinstates the Hamiltonian phases.
* ``evolve_numeric`` vectorizes the full Liouvillian (column stacking) and
  steps it with the matrix exponential.  It never touches the block algebra,
  so agreement between the two is a real check, not bookkeeping.

Bases and picture
-----------------
``evolve_analytic`` expects the initial state in the eigenmode basis; its
Fock index order is |00>, |01> (mode-2 quasiparticle), |10> (mode-1), |11>.
``evolve_numeric`` expects the computational basis.  Both report observables
in the Schroedinger picture, with all Hamiltonian phases reinstated.  Stored
states keep the basis of the input; ``Trajectory.basis`` records which.

Expectation-value weights are always obtained numerically by conjugating the
Pauli matrices with the eigenmode transform, never from hand-written element
formulas.  All rates are plain angular frequencies in units of omega_q.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .bath import (KAPPA_DEFAULT, LindbladRates, SpectralDensityModel,
                   bose_occupation, evaluate_J, lindblad_rates)
from .spin_model import (ID2, SIGMA_X, EigenStructure, OperatorSet,
                         QubitPairParams, build_operators, diagonalize,
                         direct_diagonalize, eigenmode_transform)


class StateValidationError(ValueError):
    """Input matrix is not a physical density matrix."""


class NoUniqueSteadyStateError(ValueError):
    """A mode is completely decoupled from the bath; fixed point not unique."""


def validate_density_matrix(rho: np.ndarray, herm_tol: float = 1e-12,
                            trace_tol: float = 1e-12,
                            eig_floor: float = -1e-10) -> None:
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise StateValidationError(f"expected a 4x4 matrix, got {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise StateValidationError(f"Hermiticity defect {herm:.3g} > {herm_tol:g}")
    tr = abs(np.trace(rho) - 1.0)
    if tr > trace_tol:
        raise StateValidationError(f"trace deviates from 1 by {tr:.3g}")
    lo = float(np.linalg.eigvalsh(rho)[0])
    if lo < eig_floor:
        raise StateValidationError(f"negative eigenvalue {lo:.3g}")


@dataclass(frozen=True)
class Trajectory:
    """Observable record of one evolution; states are optional extras."""

    times: np.ndarray
    sx_q: np.ndarray
    sx_p: np.ndarray
    states: np.ndarray | None = None
    basis: str = "computational"

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2 or not np.all(np.diff(t) > 0):
            raise ValueError("times must be a strictly increasing 1-d grid")
        for name in ("sx_q", "sx_p"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != t.shape:
                raise ValueError(f"{name} length does not match times")
            if np.max(np.abs(v)) > 1.0 + 1e-9:
                raise ValueError(f"{name} exceeds the Pauli bound")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "times", t)
        if self.states is not None and self.states.shape != (t.size, 4, 4):
            raise ValueError("states must have shape (len(times), 4, 4)")


@dataclass(frozen=True)
class AsymptoticTerm:
    amplitude: complex
    frequency: float
    decay: float


@dataclass(frozen=True)
class AsymptoticForm:
    """Late-time model: sum over terms of 2*Re[amp*exp((i*freq - decay)*t)].

    ``sync_expected`` is False when the two decay rates are within 5% of each
    other, in which case neither oscillation outlives the other and no
    synchronized regime should be read off this form.
    """

    terms: tuple[AsymptoticTerm, ...]
    sync_expected: bool

    def evaluate(self, times: np.ndarray) -> np.ndarray:
        t = np.asarray(times, dtype=float)
        out = np.zeros_like(t)
        for term in self.terms:
            out = out + 2.0 * np.real(
                term.amplitude * np.exp((1j * term.frequency - term.decay) * t))
        return out

    def dominant(self) -> AsymptoticTerm:
        """The slower-decaying term (the one that survives)."""
        return min(self.terms, key=lambda term: term.decay)


def _two_state_propagators(up: float, down: float, times: np.ndarray):
    """exp(t*[[-up, down], [up, -down]]) for every t, shape (n, 2, 2).

    ``up`` pumps occupation 0 -> 1, ``down`` relaxes 1 -> 0.  Rank-1 plus
    projector structure; handles the decoupled case up = down = 0.
    """
    tot = up + down
    n = times.size
    if tot == 0.0:
        return np.broadcast_to(np.eye(2), (n, 2, 2)).copy()
    p_eq = np.array([[down, down], [up, up]]) / tot
    rest = np.eye(2) - p_eq
    damp = np.exp(-tot * times)
    return p_eq[None, :, :] + damp[:, None, None] * rest[None, :, :]


def _coherence_propagators(rates: LindbladRates, times: np.ndarray):
    """Interaction-picture propagators for the two 2x2 coherence blocks.

    Block A couples (rho_01, rho_23) through mode-1 rates and is damped by
    half the mode-2 total rate; block B couples (rho_02, rho_13) with the
    roles of the modes exchanged and sign-flipped cross terms.
    """
    g1u, g1d = rates.g1_up, rates.g1_down
    g2u, g2d = rates.g2_up, rates.g2_down
    t1, t2 = rates.g1_total, rates.g2_total
    n = times.size

    if t1 == 0.0:
        ua = np.broadcast_to(np.eye(2), (n, 2, 2)).copy()
    else:
        p_eq = np.array([[g1d, g1d], [g1u, g1u]]) / t1
        ua = p_eq[None] + np.exp(-t1 * times)[:, None, None] * (np.eye(2) - p_eq)[None]
    ua = ua * np.exp(-0.5 * t2 * times)[:, None, None]

    if t2 == 0.0:
        ub = np.broadcast_to(np.eye(2), (n, 2, 2)).copy()
    else:
        p_eq = np.array([[g2d, -g2d], [-g2u, g2u]]) / t2
        ub = p_eq[None] + np.exp(-t2 * times)[:, None, None] * (np.eye(2) - p_eq)[None]
    ub = ub * np.exp(-0.5 * t1 * times)[:, None, None]
    return ua, ub


def _fock_energies(eig: EigenStructure) -> np.ndarray:
    half = 0.5 * (eig.E1 + eig.E2)
    return np.array([-half, 0.5 * (eig.E2 - eig.E1),
                     0.5 * (eig.E1 - eig.E2), half])


# Entries of a parity-odd single-spin operator that vanish identically in the
# quasiparticle basis: diagonal, and the even-even / odd-odd pairings.
_PARITY_FORBIDDEN = np.array([[True, False, False, True],
                              [False, True, True, False],
                              [False, True, True, False],
                              [True, False, False, True]])


def fock_observable_weights(eig: EigenStructure):
    """(W_q, W_p): sigma_x matrices in the eigenmode basis, from the angles.

    Deliberately closed-form where evolve_analytic conjugates numerically; the
    test suite holds the two routes against each other.
    """
    cs = np.cos(eig.theta_plus + eig.theta_minus)
    ss = np.sin(eig.theta_plus + eig.theta_minus)
    cd = np.cos(eig.theta_plus - eig.theta_minus)
    sd = np.sin(eig.theta_plus - eig.theta_minus)
    w_q = np.zeros((4, 4))
    w_q[0, 2] = w_q[1, 3] = cs
    w_q[0, 1] = ss
    w_q[2, 3] = -ss
    w_p = np.zeros((4, 4))
    w_p[0, 2] = -sd
    w_p[1, 3] = sd
    w_p[0, 1] = w_p[2, 3] = -cd
    return w_q + w_q.T, w_p + w_p.T


def evolve_analytic(params: QubitPairParams, eig: EigenStructure,
                    rates: LindbladRates, rho0: np.ndarray,
                    times: np.ndarray, store_states: bool = False) -> Trajectory:
    """Exact block solution; ``rho0`` must be given in the eigenmode basis.

    Works on any increasing time grid (the closed form needs no stepping).
    """
    validate_density_matrix(rho0)
    times = np.asarray(times, dtype=float)
    n = times.size

    diag0 = np.real(np.diag(rho0))
    u1 = _two_state_propagators(rates.g1_up, rates.g1_down, times)
    u2 = _two_state_propagators(rates.g2_up, rates.g2_down, times)
    # population propagator is the Kronecker product of the per-mode ones
    pop = np.einsum("nab,ncd->nacbd", u1, u2).reshape(n, 4, 4) @ diag0

    ua, ub = _coherence_propagators(rates, times)
    block_a = np.einsum("nij,j->ni", ua, np.array([rho0[0, 1], rho0[2, 3]]))
    block_b = np.einsum("nij,j->ni", ub, np.array([rho0[0, 2], rho0[1, 3]]))
    gamma_all = rates.g1_total + rates.g2_total
    anti = np.exp(-0.5 * gamma_all * times)
    rho03 = anti * rho0[0, 3]
    rho12 = anti * rho0[1, 2]

    rho_t = np.zeros((n, 4, 4), dtype=complex)
    rho_t[:, 0, 0] = pop[:, 0]
    rho_t[:, 1, 1] = pop[:, 1]
    rho_t[:, 2, 2] = pop[:, 2]
    rho_t[:, 3, 3] = pop[:, 3]
    rho_t[:, 0, 1] = block_a[:, 0]
    rho_t[:, 2, 3] = block_a[:, 1]
    rho_t[:, 0, 2] = block_b[:, 0]
    rho_t[:, 1, 3] = block_b[:, 1]
    rho_t[:, 0, 3] = rho03
    rho_t[:, 1, 2] = rho12

    # reinstate Hamiltonian phases: rho_jk picks up exp(-i(e_j - e_k)t)
    eps = _fock_energies(eig)
    phase = np.exp(-1j * times[:, None, None]
                   * (eps[None, :, None] - eps[None, None, :]))
    rho_t = rho_t * phase
    iu = np.triu_indices(4, k=1)
    rho_t[:, iu[1], iu[0]] = np.conj(rho_t[:, iu[0], iu[1]])

    ops = build_operators(params, eig)
    v = eigenmode_transform(ops)
    w_q = v.conj().T @ np.kron(SIGMA_X, ID2) @ v
    w_p = v.conj().T @ np.kron(ID2, SIGMA_X) @ v
    # sigma^x flips quasiparticle parity, so its only nonzero elements connect
    # the even states {vac, doubly excited} with the odd singly-excited pair.
    # Conjugation roundoff (~1e-17) on the forbidden entries would otherwise
    # couple the non-decaying populations into the signal and bury the true
    # oscillation once it has decayed below that floor.
    w_q[_PARITY_FORBIDDEN] = 0.0
    w_p[_PARITY_FORBIDDEN] = 0.0
    sx_q = np.real(np.einsum("njk,kj->n", rho_t, w_q))
    sx_p = np.real(np.einsum("njk,kj->n", rho_t, w_p))
    return Trajectory(times=times, sx_q=sx_q, sx_p=sx_p,
                      states=rho_t if store_states else None,
                      basis="eigenmode")


def _liouvillian(h: np.ndarray, collapse: list[np.ndarray]) -> np.ndarray:
    eye = np.eye(h.shape[0])
    lv = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for c in collapse:
        cdc = c.conj().T @ c
        lv = lv + (np.kron(c.conj(), c)
                   - 0.5 * (np.kron(eye, cdc) + np.kron(cdc.T, eye)))
    return lv


def _secular_collapse_ops(params: QubitPairParams, model: SpectralDensityModel,
                          temp: float, kappa: float, paranoia: bool):
    """Collapse operators (computational basis) and the Hamiltonian used."""
    if not paranoia:
        eig = diagonalize(params)
        ops = build_operators(params, eig)
        s_ang = eig.theta_plus + eig.theta_minus
        pieces = [(eig.E1, np.cos(s_ang) * ops.eta1),
                  (eig.E2, np.sin(s_ang) * ops.eta2)]
        h = ops.h_s
    else:
        # independent route: raw eigenvectors, eigenoperator projections
        evals, evecs = direct_diagonalize(params)
        sx_q = np.kron(SIGMA_X, ID2)
        sx_eig = evecs.conj().T @ sx_q @ evecs
        gaps = {}
        for a in range(4):
            for b in range(4):
                w = evals[b] - evals[a]
                if w > 1e-9 and abs(sx_eig[a, b]) > 1e-12:
                    key = round(w, 9)
                    op = gaps.setdefault(key, np.zeros((4, 4), dtype=complex))
                    op += sx_eig[a, b] * np.outer(evecs[:, a],
                                                  evecs[:, b].conj())
        pieces = [(float(w), op) for w, op in gaps.items()]
        h = evecs @ np.diag(evals) @ evecs.conj().T

    collapse = []
    for freq, op in pieces:
        j = evaluate_J(model, freq)
        if j == 0.0:
            continue
        occ = bose_occupation(freq, temp)
        collapse.append(np.sqrt(kappa * j * (1.0 + occ)) * op)
        if occ > 0.0:
            collapse.append(np.sqrt(kappa * j * occ) * op.conj().T)
    return h, collapse


def evolve_numeric(params: QubitPairParams, model: SpectralDensityModel,
                   T: float | None, rho0: np.ndarray, times: np.ndarray,
                   kappa: float = KAPPA_DEFAULT, paranoia: bool = False,
                   store_states: bool = False) -> Trajectory:
    """Vectorized-Liouvillian evolution; ``rho0`` in the computational basis.

    Requires a uniform time grid (the propagator for one step is exponentiated
    once and reused).  ``T=None`` falls back to ``params.temperature``.  With
    ``paranoia=True`` the jump operators are rebuilt from scratch out of raw
    eigenvector projections, bypassing the closed-form quasiparticle algebra.
    """
    validate_density_matrix(rho0)
    times = np.asarray(times, dtype=float)
    steps = np.diff(times)
    dt = steps[0]
    if not np.allclose(steps, dt, rtol=1e-9, atol=1e-12):
        raise ValueError("evolve_numeric needs a uniform time grid")
    temp = params.temperature if T is None else float(T)

    h, collapse = _secular_collapse_ops(params, model, temp, kappa, paranoia)
    lv = _liouvillian(h, collapse)
    prop = scipy.linalg.expm(lv * dt)

    vec = rho0.astype(complex).flatten(order="F")
    if times[0] != 0.0:
        vec = scipy.linalg.expm(lv * times[0]) @ vec

    n = times.size
    rho_t = np.empty((n, 4, 4), dtype=complex)
    sx_q_mat = np.kron(SIGMA_X, ID2)
    sx_p_mat = np.kron(ID2, SIGMA_X)
    for i in range(n):
        rho_t[i] = vec.reshape(4, 4, order="F")
        if i < n - 1:
            vec = prop @ vec
    sx_q = np.real(np.einsum("njk,kj->n", rho_t, sx_q_mat))
    sx_p = np.real(np.einsum("njk,kj->n", rho_t, sx_p_mat))
    return Trajectory(times=times, sx_q=sx_q, sx_p=sx_p,
                      states=rho_t if store_states else None,
                      basis="computational")


def asymptotic_form(eig: EigenStructure, rates: LindbladRates,
                    rho0: np.ndarray, T: float = 0.0
                    ) -> tuple[AsymptoticForm, AsymptoticForm]:
    """Slow-mode projection of the coherence blocks; ``rho0`` eigenmode basis.

    Returns the late-time two-term damped-oscillation coefficients for
    (sigma_q^x, sigma_p^x).  After the first transient each coherence block is
    left with its slow eigenprojection only: an oscillation at E1 damped at
    half the mode-1 total rate, and one at E2 damped at half the mode-2 total
    rate.  Thermal occupation enters through the rates themselves, so ``T`` is
    informational here.
    """
    del T
    validate_density_matrix(rho0)
    w_q, w_p = fock_observable_weights(eig)

    g1u, g1d, g2u, g2d = rates.g1_up, rates.g1_down, rates.g2_up, rates.g2_down
    t1, t2 = rates.g1_total, rates.g2_total

    # block B (rho_02, rho_13): oscillates at E1, slow decay at t1/2;
    # slow left/right eigenvectors are (1, -1) and (g2_down, -g2_up)
    x0, y0 = rho0[0, 2], rho0[1, 3]
    if t2 > 0.0:
        wgt = (x0 - y0) / t2
        slow_02, slow_13 = wgt * g2d, -wgt * g2u
    else:
        slow_02, slow_13 = x0, y0          # block B undamped internally
    amp_q1 = slow_02 * w_q[2, 0] + slow_13 * w_q[3, 1]
    amp_p1 = slow_02 * w_p[2, 0] + slow_13 * w_p[3, 1]

    # block A (rho_01, rho_23): oscillates at E2, slow decay at t2/2;
    # slow eigenvectors are (1, 1) and (g1_down, g1_up)
    x0, y0 = rho0[0, 1], rho0[2, 3]
    if t1 > 0.0:
        wgt = (x0 + y0) / t1
        slow_01, slow_23 = wgt * g1d, wgt * g1u
    else:
        slow_01, slow_23 = x0, y0
    amp_q2 = slow_01 * w_q[1, 0] + slow_23 * w_q[3, 2]
    amp_p2 = slow_01 * w_p[1, 0] + slow_23 * w_p[3, 2]

    hi = max(t1, t2)
    sync_expected = hi > 0.0 and abs(t1 - t2) > 0.05 * hi
    term = AsymptoticTerm
    form_q = AsymptoticForm(terms=(term(complex(amp_q1), eig.E1, 0.5 * t1),
                                   term(complex(amp_q2), eig.E2, 0.5 * t2)),
                            sync_expected=sync_expected)
    form_p = AsymptoticForm(terms=(term(complex(amp_p1), eig.E1, 0.5 * t1),
                                   term(complex(amp_p2), eig.E2, 0.5 * t2)),
                            sync_expected=sync_expected)
    return form_q, form_p


def steady_state(params: QubitPairParams, rates: LindbladRates,
                 T: float | None = None, basis: str = "eigenmode") -> np.ndarray:
    """Unique fixed point: product of per-mode thermal occupations.

    The occupations are read off the rates through detailed balance, so the
    result is consistent with whatever bath produced them; ``T`` is accepted
    for signature symmetry but the rates carry all the information.
    """
    del T
    if rates.g1_total <= 0.0 or rates.g2_total <= 0.0:
        raise NoUniqueSteadyStateError(
            "a mode with zero total rate conserves its occupation; "
            "steady state is not unique")
    q1 = rates.g1_up / rates.g1_total
    q2 = rates.g2_up / rates.g2_total
    diag = np.array([(1 - q1) * (1 - q2), (1 - q1) * q2,
                     q1 * (1 - q2), q1 * q2])
    rho = np.diag(diag).astype(complex)
    if basis == "eigenmode":
        return rho
    if basis == "computational":
        eig = diagonalize(params)
        ops = build_operators(params, eig)
        v = eigenmode_transform(ops)
        return v @ rho @ v.conj().T
    raise ValueError(f"unknown basis {basis!r}")


def plus_plus_state() -> np.ndarray:
    """(|0>+|1>)(|0>+|1>)/2 as a computational-basis density matrix."""
    vec = 0.5 * np.ones(4)
    return np.outer(vec, vec).astype(complex)


def to_eigenmode_basis(rho_comp: np.ndarray, transform: np.ndarray) -> np.ndarray:
    return transform.conj().T @ rho_comp @ transform


def to_computational_basis(rho_eig: np.ndarray, transform: np.ndarray) -> np.ndarray:
    return transform @ rho_eig @ transform.conj().T


def default_time_grid(t_max: float = 400.0, dt: float = 0.05) -> np.ndarray:
    n = int(round(t_max / dt))
    return np.linspace(0.0, n * dt, n + 1)


def trajectory_to_csv(traj: Trajectory, fh) -> None:
    """Write t, sx_q, sx_p rows in full double precision."""
    fh.write("t,sx_q,sx_p\n")
    for t, q, p in zip(traj.times, traj.sx_q, traj.sx_p):
        fh.write(f"{t:.17g},{q:.17g},{p:.17g}\n")
