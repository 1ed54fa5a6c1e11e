"""Coherent states two ways: variance saturation on a truncated oscillator,
and SU(2) orbits of a lowest-weight reference state.

The two constructions are independent code paths; they agree only in special
cases and are never used interchangeably.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln

from .errors import BadDimension, BadSpin, Infeasible, QuadratureTooCoarse, SpaceMismatch, TruncationTooSmall
from .events import EventSpace, State, expectation
from .maxent import Problem, SolverOptions, moment, solve_general, variance_saturation
from .numerics import sphere_quadrature
from .symmetry import GroupSpec, invariant_basis

MAX_SPIN_DIM = 64


@dataclass(frozen=True, eq=False)
class OscillatorOps:
    n: int
    hbar: float
    a: np.ndarray
    q: np.ndarray
    p: np.ndarray
    number: np.ndarray

    @property
    def space(self) -> EventSpace:
        return EventSpace.quantum(self.n)


def build_oscillator(n: int, hbar: float = 1.0) -> OscillatorOps:
    """Truncated ladder operators; [Q, P] = i hbar holds except in the top corner."""
    if int(n) != n or n < 4:
        raise BadDimension("truncation must be an integer >= 4")
    if not hbar > 0:
        raise ValueError("hbar must be positive")
    n = int(n)
    a = np.diag(np.sqrt(np.arange(1, n)), k=1).astype(complex)
    ad = a.conj().T
    c = np.sqrt(hbar / 2.0)
    q = c * (a + ad)
    p = 1j * c * (ad - a)
    return OscillatorOps(n, float(hbar), a, q, p, np.diag(np.arange(n, dtype=float)).astype(complex))


def variance(state: State, a) -> float:
    a = np.asarray(a)
    m = expectation(state, a)
    sq = a @ a if a.ndim == 2 else a * a
    v = expectation(state, sq) - m * m
    return max(v, -1e-12) if v < 0 else v


def _check_ops(state: State, ops: OscillatorOps):
    if state.space != ops.space:
        raise SpaceMismatch(f"state on {state.space}, oscillator of dimension {ops.n}")


def saturation_residual(state: State, ops: OscillatorOps):
    """(Var Q - hbar/2, Var P - hbar/2)."""
    _check_ops(state, ops)
    half = ops.hbar / 2.0
    return variance(state, ops.q) - half, variance(state, ops.p) - half


def saturation_gradient(state: State, ops: OscillatorOps):
    """Gradients of the two residuals with respect to the density matrix entries.

    d/d rho_ij of <A^2> - <A>^2 is (A^2 - 2 <A> A)_ji.
    """
    _check_ops(state, ops)
    out = []
    for a in (ops.q, ops.p):
        m = expectation(state, a)
        out.append((a @ a - 2 * m * a).T)
    return tuple(out)


def _check_alpha(alpha: complex, n: int):
    if abs(alpha) ** 2 > n / 4.0:
        raise TruncationTooSmall(f"|alpha|^2 = {abs(alpha) ** 2:.4g} exceeds N/4 = {n / 4}")


def coherent_ket(alpha: complex, n: int) -> np.ndarray:
    _check_alpha(alpha, n)
    k = np.arange(n)
    if alpha == 0:
        psi = np.zeros(n, dtype=complex)
        psi[0] = 1.0
        return psi
    # log-space amplitudes avoid overflow of alpha^k / sqrt(k!)
    logmag = k * np.log(abs(alpha)) - 0.5 * gammaln(k + 1) - 0.5 * abs(alpha) ** 2
    psi = np.exp(logmag) * np.exp(1j * k * np.angle(alpha))
    return psi / np.linalg.norm(psi)


def coherent_state_vector(alpha: complex, ops: OscillatorOps) -> State:
    return State.pure(coherent_ket(complex(alpha), ops.n))


def alpha_from_means(q0: float, p0: float, hbar: float) -> complex:
    return (q0 + 1j * p0) / np.sqrt(2.0 * hbar)


def fidelity(state: State, ket) -> float:
    ket = np.asarray(ket, dtype=complex)
    return float(np.real(np.vdot(ket, state.data @ ket)))


def solve_saturated(ops: OscillatorOps, q0: float, p0: float, options: Optional[SolverOptions] = None):
    """MaxEnt state with means (q0, p0) and both variances equal to hbar/2."""
    if (q0 ** 2 + p0 ** 2) / (2 * ops.hbar) > ops.n / 4.0:
        raise Infeasible(f"means ({q0}, {p0}) need more than {ops.n} levels")
    cons = [moment(ops.q, q0, "mean Q"), moment(ops.p, p0, "mean P"),
            variance_saturation(ops.q, ops.hbar / 2, "var Q"),
            variance_saturation(ops.p, ops.hbar / 2, "var P")]
    prob = Problem(ops.space, GroupSpec.trivial(), cons, "von_neumann", options or SolverOptions())
    return solve_general(prob)


# ---------------------------------------------------------------------------
# SU(2)
# ---------------------------------------------------------------------------

def spin_matrices(j: float):
    """(Jx, Jy, Jz) in the basis m = -j, ..., j."""
    m = np.arange(-j, j + 1)
    jp = np.diag(np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1)), k=-1).astype(complex)
    jx = 0.5 * (jp + jp.conj().T)
    jy = -0.5j * (jp - jp.conj().T)
    return jx, jy, np.diag(m).astype(complex)


def _check_spin(j) -> float:
    two_j = 2 * float(j)
    if two_j < 1 or abs(two_j - round(two_j)) > 1e-12:
        raise BadSpin(f"j = {j} is not a positive half-integer")
    if round(two_j) + 1 > MAX_SPIN_DIM:
        raise BadSpin(f"2j+1 = {round(two_j) + 1} exceeds {MAX_SPIN_DIM}")
    return round(two_j) / 2.0


def _rotation(jy, jz, theta, phi):
    """exp(-i phi Jz) exp(-i theta Jy)."""
    w, v = np.linalg.eigh(jy)
    ry = (v * np.exp(-1j * theta * w)) @ v.conj().T
    rz = np.exp(-1j * phi * np.real(np.diag(jz)))
    return rz[:, None] * ry


@dataclass(frozen=True, eq=False)
class SpinFamily:
    j: float
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray
    reference: np.ndarray
    stability: GroupSpec
    directions: np.ndarray
    weights: np.ndarray
    kets: np.ndarray  # one column per direction
    order: int

    @property
    def dim(self) -> int:
        return int(round(2 * self.j)) + 1

    def state(self, k: int) -> State:
        return State.pure(self.kets[:, k])

    def ket_at(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        n = n / np.linalg.norm(n)
        theta = np.arccos(np.clip(n[2], -1.0, 1.0))
        phi = np.arctan2(n[1], n[0])
        return _rotation(self.jy, self.jz, theta, phi) @ self.reference


def reference_state(j: float):
    """Lowest-weight vector, picked among the pure states fixed by exp(i t Jz).

    The invariant basis of the Jz one-parameter group lists the block
    projectors; the extremal (minimal <Jz>) rank-1 block gives |j, -j>.
    """
    j = _check_spin(j)
    _, _, jz = spin_matrices(j)
    stab = GroupSpec.one_parameter(jz)
    space = EventSpace.quantum(int(round(2 * j)) + 1)
    candidates = []
    for b in invariant_basis(stab, space):
        w, v = np.linalg.eigh(b)
        if np.sum(np.abs(w) > 1e-9) == 1:
            ket = v[:, np.argmax(np.abs(w))]
            candidates.append((float(np.real(np.vdot(ket, jz @ ket))), ket))
    _, ket = min(candidates, key=lambda t: t[0])
    k = int(np.argmax(np.abs(ket)))
    return ket * (abs(ket[k]) / ket[k]), stab


def su2_family(j: float, order: Optional[int] = None) -> SpinFamily:
    """s0 rotated to each node of a sphere quadrature of the given order."""
    j = _check_spin(j)
    if order is None:
        order = int(round(2 * j)) + 1
    jx, jy, jz = spin_matrices(j)
    s0, stab = reference_state(j)
    dirs, weights = sphere_quadrature(order)
    theta = np.arccos(np.clip(dirs[:, 2], -1.0, 1.0))
    phi = np.arctan2(dirs[:, 1], dirs[:, 0])
    kets = np.stack([_rotation(jy, jz, t, f) @ s0 for t, f in zip(theta, phi)], axis=1)
    return SpinFamily(j, jx, jy, jz, s0, stab, dirs, weights, kets, int(order))


def resolution_of_identity(family: SpinFamily, j: Optional[float] = None) -> float:
    """Frobenius distance of (2j+1)/(4 pi) sum_k w_k |n_k><n_k| from the identity."""
    j = family.j if j is None else _check_spin(j)
    dim = int(round(2 * j)) + 1
    if family.kets.shape[0] != dim:
        raise SpaceMismatch("family and j disagree")
    if family.order < 2 * j + 1:
        raise QuadratureTooCoarse(f"quadrature order {family.order} below 2j+1 = {2 * j + 1}")
    k = family.kets
    frame = (k * family.weights) @ k.conj().T
    return float(np.linalg.norm(dim / (4 * np.pi) * frame - np.eye(dim)))
