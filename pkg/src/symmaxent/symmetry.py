"""Group actions on events and states, twirling, and commutant bases.

A :class:`GroupSpec` describes the symmetry group by generators.  Finite
groups (permutations, unitaries) are closed by breadth-first products;
one-parameter groups ``exp(i theta G)`` are handled exactly through the
eigenspaces of ``G``, since invariance for every theta is the same as
commuting with ``G``.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from .errors import ClosureCapExceeded, SpaceMismatch
from .events import CLASSICAL, QUANTUM, Event, EventSpace, State, prob
from .numerics import check_hermitian, hermitize, nullspace

TRIVIAL = "trivial"
PERMUTATIONS = "permutations"
UNITARIES = "unitaries"
ONE_PARAMETER = "one_parameter"
KINDS = (TRIVIAL, PERMUTATIONS, UNITARIES, ONE_PARAMETER)

DEFAULT_CAP = 10_000
PHASE_TOL = 1e-8
EIG_GROUP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class GroupElement:
    """A permutation (integer array, i -> perm[i]) or a unitary matrix."""

    data: np.ndarray

    @property
    def is_permutation(self) -> bool:
        return self.data.ndim == 1

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def matrix(self) -> np.ndarray:
        """Unitary representative; permutations become permutation matrices."""
        if self.is_permutation:
            n = self.dim
            u = np.zeros((n, n), dtype=complex)
            u[self.data, np.arange(n)] = 1.0
            return u
        return self.data


def _check_perm(p, n=None):
    arr = np.asarray(p, dtype=int).ravel()
    if n is not None and arr.size != n:
        raise SpaceMismatch(f"permutation of {arr.size} points, space has {n}")
    if sorted(arr.tolist()) != list(range(arr.size)):
        raise ValueError(f"{arr.tolist()} is not a bijection")
    return arr


@dataclass(frozen=True, eq=False)
class GroupSpec:
    kind: str = TRIVIAL
    generators: tuple = ()
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown group kind {self.kind!r}")
        gens = []
        for g in self.generators:
            if self.kind == PERMUTATIONS:
                gens.append(_check_perm(g))
            elif self.kind == UNITARIES:
                u = np.asarray(g, dtype=complex)
                if u.ndim != 2 or u.shape[0] != u.shape[1]:
                    raise ValueError("unitary generator must be square")
                if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > 1e-10:
                    raise ValueError("generator is not unitary")
                gens.append(u)
            elif self.kind == ONE_PARAMETER:
                gens.append(hermitize(check_hermitian(g)))
        if self.kind == TRIVIAL and gens:
            raise ValueError("trivial group takes no generators")
        if self.kind == ONE_PARAMETER and not gens:
            raise ValueError("one_parameter group needs a Hermitian generator")
        for g in gens:
            g.setflags(write=False)
        object.__setattr__(self, "generators", tuple(gens))

    @classmethod
    def trivial(cls) -> "GroupSpec":
        return cls(TRIVIAL)

    @classmethod
    def permutations(cls, *perms) -> "GroupSpec":
        return cls(PERMUTATIONS, tuple(perms))

    @classmethod
    def unitaries(cls, *us) -> "GroupSpec":
        return cls(UNITARIES, tuple(us))

    @classmethod
    def one_parameter(cls, *hermitian) -> "GroupSpec":
        return cls(ONE_PARAMETER, tuple(hermitian))

    def element(self, theta: float, index: int = 0) -> GroupElement:
        """exp(i theta G) for the chosen one-parameter generator."""
        if self.kind != ONE_PARAMETER:
            raise ValueError("only one_parameter groups have a continuous parameter")
        w, v = np.linalg.eigh(self.generators[index])
        return GroupElement((v * np.exp(1j * theta * w)) @ v.conj().T)

    def generator_elements(self) -> List[GroupElement]:
        if self.kind in (PERMUTATIONS, UNITARIES):
            return [GroupElement(np.array(g)) for g in self.generators]
        return []

    def check_space(self, space: EventSpace):
        if self.kind == TRIVIAL:
            return
        if not space.is_quantum and self.kind != PERMUTATIONS:
            raise SpaceMismatch(f"{self.kind} groups act only on quantum spaces")
        for g in self.generators:
            if g.shape[0] != space.size:
                raise SpaceMismatch(f"generator of size {g.shape[0]} on space of size {space.size}")


def _compose(g: np.ndarray, h: np.ndarray) -> np.ndarray:
    """g after h."""
    if g.ndim == 1:
        return g[h]
    return g @ h


def group_closure(spec: GroupSpec, n: Optional[int] = None) -> List[GroupElement]:
    """All elements of a finite group in breadth-first order from the identity.

    Unitaries are identified modulo a global phase.
    """
    if spec.kind == ONE_PARAMETER:
        raise ValueError("one-parameter groups are not finite")
    if spec.kind == TRIVIAL:
        if n is None:
            raise ValueError("trivial group closure needs the space size")
        return [GroupElement(np.arange(n))]
    gens = list(spec.generators)
    size = gens[0].shape[0]
    if spec.kind == PERMUTATIONS:
        ident = np.arange(size)
        seen = {tuple(ident)}
        elems = [ident]
        head = 0
        while head < len(elems):
            e = elems[head]
            head += 1
            for g in gens:
                h = _compose(g, e)
                key = tuple(h)
                if key not in seen:
                    seen.add(key)
                    elems.append(h)
                    if len(elems) > spec.cap:
                        raise ClosureCapExceeded(f"closure exceeds {spec.cap} elements")
        return [GroupElement(e) for e in elems]

    ident = np.eye(size, dtype=complex)
    store = np.empty((min(spec.cap, 64) + 1, size, size), dtype=complex)
    store[0] = ident
    count = 1
    head = 0
    while head < count:
        e = store[head]
        head += 1
        for g in gens:
            h = g @ e
            overlaps = np.einsum("kij,ij->k", store[:count].conj(), h)
            phases = overlaps / np.maximum(np.abs(overlaps), 1e-300)
            diffs = np.max(np.abs(h[None] - phases[:, None, None] * store[:count]), axis=(1, 2))
            if np.min(diffs) <= PHASE_TOL:
                continue
            if count >= spec.cap:
                raise ClosureCapExceeded(f"closure exceeds {spec.cap} elements")
            if count == store.shape[0]:
                store = np.concatenate([store, np.empty_like(store)], axis=0)
            store[count] = h
            count += 1
    return [GroupElement(store[k].copy()) for k in range(count)]


def _element_for(g: GroupElement, space: EventSpace):
    if g.dim != space.size:
        raise SpaceMismatch(f"element of size {g.dim} on space of size {space.size}")
    if not space.is_quantum and not g.is_permutation:
        raise SpaceMismatch("unitaries do not act on classical spaces")


def act_on_event(g: GroupElement, e: Event) -> Event:
    _element_for(g, e.space)
    if e.space.is_quantum:
        u = g.matrix()
        return Event(e.space, u @ e.data @ u.conj().T)
    mask = np.zeros(e.space.size, dtype=bool)
    mask[g.data[e.data]] = True
    return Event(e.space, mask)


def _act_array(g: GroupElement, data: np.ndarray, quantum: bool) -> np.ndarray:
    if quantum:
        u = g.matrix()
        return u @ data @ u.conj().T
    out = np.empty_like(data)
    out[g.data] = data
    return out


def act_on_state(g: GroupElement, s: State) -> State:
    _element_for(g, s.space)
    return State(s.space, _act_array(g, s.data, s.space.is_quantum))


def covariance_check(s: State, e: Event, g: GroupElement) -> float:
    """|nu(E) - (g nu)(g E)|."""
    return abs(prob(s, e) - prob(act_on_state(g, s), act_on_event(g, e)))


# ---------------------------------------------------------------------------
# averaging maps and the fixed-point space
# ---------------------------------------------------------------------------

def eigenspaces(h: np.ndarray, tol: float = EIG_GROUP_TOL) -> List[np.ndarray]:
    """Orthonormal bases of the eigenspaces of a Hermitian matrix, ascending."""
    w, v = np.linalg.eigh(h)
    scale = max(1.0, float(np.max(np.abs(w))))
    groups = [[0]]
    for k in range(1, w.size):
        if w[k] - w[groups[-1][-1]] <= tol * scale:
            groups[-1].append(k)
        else:
            groups.append([k])
    return [v[:, idx] for idx in groups]


def orbits(spec: GroupSpec, n: int) -> List[List[int]]:
    """Orbits of the permutation action, each sorted, ordered by smallest point."""
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    if spec.kind == PERMUTATIONS:
        for g in spec.generators:
            for i in range(n):
                a, b = find(i), find(int(g[i]))
                if a != b:
                    parent[max(a, b)] = min(a, b)
    out = {}
    for i in range(n):
        out.setdefault(find(i), []).append(i)
    return [out[k] for k in sorted(out)]


def hermitian_basis(d: int) -> List[np.ndarray]:
    """Hilbert-Schmidt orthonormal basis of d x d Hermitian matrices."""
    basis = []
    for j in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[j, j] = 1.0
        basis.append(e)
    r2 = np.sqrt(0.5)
    for j in range(d):
        for k in range(j + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[j, k] = e[k, j] = r2
            basis.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[j, k] = 1j * r2
            e[k, j] = -1j * r2
            basis.append(e)
    return basis


def to_real(a: np.ndarray) -> np.ndarray:
    """Real coordinates in which the dot product is tr(A B) for Hermitian A, B."""
    a = np.asarray(a)
    if a.ndim == 1:
        return a.real.astype(float)
    return np.concatenate([a.real.ravel(), a.imag.ravel()])


def from_real(v: np.ndarray, space: EventSpace) -> np.ndarray:
    if not space.is_quantum:
        return np.asarray(v, dtype=float)
    d = space.size
    return hermitize(v[: d * d].reshape(d, d) + 1j * v[d * d:].reshape(d, d))


def _block_basis(blocks: Sequence[np.ndarray]) -> List[np.ndarray]:
    basis = []
    for v in blocks:
        for e in hermitian_basis(v.shape[1]):
            basis.append(hermitize(v @ e @ v.conj().T))
    return basis


def invariant_basis(spec: GroupSpec, space: EventSpace) -> List[np.ndarray]:
    """Orthonormal basis of the invariant (fixed-point) observables.

    Classical: orbit indicators scaled to unit norm.  Quantum: Hermitian
    matrices commuting with every generator (the commutant).
    """
    spec.check_space(space)
    n = space.size
    if not space.is_quantum:
        basis = []
        for orb in orbits(spec, n):
            v = np.zeros(n)
            v[orb] = 1.0 / np.sqrt(len(orb))
            basis.append(v)
        return basis
    if spec.kind == TRIVIAL:
        return hermitian_basis(n)
    if spec.kind == ONE_PARAMETER and len(spec.generators) == 1:
        return _block_basis(eigenspaces(spec.generators[0]))
    gens = [GroupElement(g).matrix() for g in spec.generators]
    full = hermitian_basis(n)
    cols = []
    for e in full:
        cols.append(np.concatenate([to_real(g @ e - e @ g) for g in gens]))
    op = np.array(cols).T
    coeffs = nullspace(op)
    basis = []
    for c in coeffs.T:
        basis.append(hermitize(sum(ck * e for ck, e in zip(c, full))))
    return basis


def complement_basis(spec: GroupSpec, space: EventSpace) -> List[np.ndarray]:
    """Orthonormal basis of the orthogonal complement of the invariant observables.

    A state is invariant exactly when its mean value on each of these vanishes.
    """
    inv = invariant_basis(spec, space)
    if not space.is_quantum:
        full = [np.eye(space.size)[i] for i in range(space.size)]
    else:
        full = hermitian_basis(space.size)
    rows = np.array([to_real(b) for b in inv])
    span_full = np.array([to_real(b) for b in full]).T
    # coordinates (in `full`) of vectors orthogonal to every invariant element
    coeffs = nullspace(rows @ span_full)
    out = []
    for c in coeffs.T:
        out.append(from_real(span_full @ c, space))
    return out


def project_onto(data: np.ndarray, basis: Sequence[np.ndarray], space: EventSpace) -> np.ndarray:
    """Orthogonal projection onto the span of an orthonormal basis."""
    v = to_real(data)
    acc = np.zeros_like(v)
    for b in basis:
        rb = to_real(b)
        acc += np.dot(rb, v) * rb
    return from_real(acc, space)


def _average(data: np.ndarray, spec: GroupSpec, space: EventSpace) -> np.ndarray:
    spec.check_space(space)
    quantum = space.is_quantum
    if spec.kind == TRIVIAL:
        return np.array(data)
    if not quantum:
        out = np.empty(space.size, dtype=np.asarray(data).dtype)
        for orb in orbits(spec, space.size):
            out[orb] = np.mean(np.asarray(data)[orb])
        return out
    if spec.kind == ONE_PARAMETER:
        if len(spec.generators) == 1:
            return hermitize(sum(v @ (v.conj().T @ data @ v) @ v.conj().T
                                 for v in eigenspaces(spec.generators[0])))
        return project_onto(data, invariant_basis(spec, space), space)
    elems = group_closure(spec)
    acc = np.zeros_like(np.asarray(data, dtype=complex))
    for g in elems:
        acc += _act_array(g, data, True)
    return hermitize(acc / len(elems))


def twirl(s: State, spec: GroupSpec) -> State:
    """Group average of a state; the result is invariant."""
    return State(s.space, _average(s.data, spec, s.space))


def twirl_observable(a, spec: GroupSpec, space: Optional[EventSpace] = None):
    """Group average of an observable (vector or Hermitian matrix).

    The averaging map is self-adjoint, so <twirl_observable(A)>_s equals
    <A>_{twirl(s)}.
    """
    a = np.asarray(a)
    if space is None:
        space = EventSpace(QUANTUM if a.ndim == 2 else CLASSICAL, a.shape[0])
    if space.is_quantum:
        a = hermitize(check_hermitian(a))
    else:
        a = a.astype(float)
    return _average(a, spec, space)


def _distance(a: np.ndarray, b: np.ndarray, quantum: bool) -> float:
    if quantum:
        return float(np.sum(np.abs(np.linalg.eigvalsh(hermitize(a - b)))))
    return float(np.sum(np.abs(a - b)))


def is_invariant(s: State, spec: GroupSpec, tol: float = 1e-8):
    """(invariant?, max residual).

    Finite groups: max over generators of the trace-norm (L1) distance
    between g.s and s.  One-parameter groups: distance between s and its
    dephased version, which vanishes exactly on invariant states.
    """
    spec.check_space(s.space)
    q = s.space.is_quantum
    if spec.kind == TRIVIAL:
        res = 0.0
    elif spec.kind == ONE_PARAMETER:
        res = _distance(_average(s.data, spec, s.space), s.data, q)
    else:
        res = max(_distance(_act_array(g, s.data, q), s.data, q)
                  for g in spec.generator_elements())
    return res <= tol, res


def reduced_dimension(spec: GroupSpec, space: EventSpace) -> dict:
    full = space.size - 1 if not space.is_quantum else space.size ** 2 - 1
    return {"full": full, "invariant": len(invariant_basis(spec, space)) - 1}


def commutative_blocks(spec: GroupSpec, space: EventSpace) -> Optional[List[np.ndarray]]:
    """Minimal projections of the invariant algebra when it is commutative.

    Returns a list of isometries V_k (d x r_k) with sum V_k V_k^dagger = I, or
    None if the commutant is non-commutative.  Invariant states are then
    exactly sum_k p_k V_k V_k^dagger / r_k with p a probability vector.
    """
    basis = invariant_basis(spec, space)
    for i in range(len(basis)):
        for j in range(i + 1, len(basis)):
            if np.max(np.abs(basis[i] @ basis[j] - basis[j] @ basis[i])) > 1e-9:
                return None
    rng = np.random.default_rng(12345)
    mix = hermitize(sum(rng.normal() * b for b in basis))
    blocks = eigenspaces(mix, tol=1e-7)
    # every basis element must act as a scalar on each block
    for b in basis:
        for v in blocks:
            c = v.conj().T @ b @ v
            if np.max(np.abs(c - np.trace(c) / c.shape[0] * np.eye(c.shape[0]))) > 1e-8:
                return None
    return blocks
