"""Event lattices, states and the normalization/additivity axioms.

Two concrete lattices are supported: the Boolean algebra of subsets of a
finite sample space (``kind="classical"``) and the projection lattice of a
finite-dimensional Hilbert space (``kind="quantum"``).  States are
probability vectors and density matrices respectively; both are immutable.
"""
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (InvalidEvent, InvalidState, NonHermitian, NotOrthogonal,
                     NotOrthonormal, SpaceMismatch)
from .numerics import check_hermitian, hermitize

CLASSICAL = "classical"
QUANTUM = "quantum"

NORM_TOL = 1e-10
NEG_TOL_CLASSICAL = 1e-12
NEG_TOL_QUANTUM = 1e-10
PROJECTOR_TOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class EventSpace:
    kind: str
    size: int

    def __post_init__(self):
        if self.kind not in (CLASSICAL, QUANTUM):
            raise ValueError(f"unknown space kind {self.kind!r}")
        if int(self.size) != self.size or self.size < 1:
            raise ValueError("space size must be a positive integer")

    @property
    def is_quantum(self) -> bool:
        return self.kind == QUANTUM

    @classmethod
    def classical(cls, n: int) -> "EventSpace":
        return cls(CLASSICAL, int(n))

    @classmethod
    def quantum(cls, d: int) -> "EventSpace":
        return cls(QUANTUM, int(d))


@dataclass(frozen=True, eq=False)
class Event:
    """A classical outcome subset (boolean mask) or a quantum projector."""

    space: EventSpace
    data: np.ndarray

    def __post_init__(self):
        if self.space.is_quantum:
            p = np.asarray(self.data, dtype=complex)
            d = self.space.size
            if p.shape != (d, d):
                raise InvalidEvent(f"projector must be {d}x{d}")
            try:
                check_hermitian(p, PROJECTOR_TOL)
            except NonHermitian as exc:
                raise InvalidEvent(str(exc)) from exc
            if np.max(np.abs(p @ p - p)) > PROJECTOR_TOL * max(1.0, d):
                raise InvalidEvent("projector is not idempotent")
            object.__setattr__(self, "data", _frozen(hermitize(p)))
        else:
            m = np.asarray(self.data, dtype=bool).ravel()
            if m.size != self.space.size:
                raise InvalidEvent(f"mask must have {self.space.size} entries")
            object.__setattr__(self, "data", _frozen(m))

    @classmethod
    def subset(cls, space: EventSpace, indices: Iterable[int]) -> "Event":
        if space.is_quantum:
            return cls.span(space, [np.eye(space.size)[i] for i in indices])
        mask = np.zeros(space.size, dtype=bool)
        idx = list(indices)
        if any(i < 0 or i >= space.size for i in idx):
            raise InvalidEvent("outcome index out of range")
        mask[idx] = True
        return cls(space, mask)

    @classmethod
    def projector(cls, space: EventSpace, p) -> "Event":
        return cls(space, p)

    @classmethod
    def span(cls, space: EventSpace, vectors: Sequence) -> "Event":
        """Projector onto the span of the given kets."""
        d = space.size
        if len(vectors) == 0:
            return cls(space, np.zeros((d, d)))
        v = np.array(vectors, dtype=complex).reshape(len(vectors), d).T
        q, r = np.linalg.qr(v)
        rank = int(np.sum(np.abs(np.diag(r)) > 1e-12))
        q = q[:, :rank]
        return cls(space, q @ q.conj().T)

    @classmethod
    def zero(cls, space: EventSpace) -> "Event":
        if space.is_quantum:
            return cls(space, np.zeros((space.size, space.size)))
        return cls(space, np.zeros(space.size, dtype=bool))

    @classmethod
    def unit(cls, space: EventSpace) -> "Event":
        if space.is_quantum:
            return cls(space, np.eye(space.size))
        return cls(space, np.ones(space.size, dtype=bool))

    @property
    def indices(self) -> tuple:
        if self.space.is_quantum:
            raise InvalidEvent("quantum events have no index set")
        return tuple(int(i) for i in np.flatnonzero(self.data))

    def as_observable(self) -> np.ndarray:
        """Indicator vector or projector matrix, usable as a moment observable."""
        if self.space.is_quantum:
            return np.array(self.data)
        return self.data.astype(float)

    def __eq__(self, other):
        if not isinstance(other, Event) or other.space != self.space:
            return NotImplemented
        if self.space.is_quantum:
            return bool(np.max(np.abs(self.data - other.data)) <= PROJECTOR_TOL)
        return bool(np.array_equal(self.data, other.data))

    __hash__ = None


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def validate_state(candidate, kind: Optional[str] = None) -> ValidationReport:
    """Check normalization, positivity and (for matrices) Hermiticity.

    ``candidate`` may be a :class:`State`, a 1-D array (classical) or a square
    2-D array (quantum).  Residual magnitudes are reported for each failure.
    """
    if isinstance(candidate, State):
        kind = candidate.space.kind
        data = candidate.data
    else:
        data = np.asarray(candidate)
        if kind is None:
            kind = QUANTUM if data.ndim == 2 else CLASSICAL
    v = {}
    if kind == CLASSICAL:
        p = np.asarray(data, dtype=float).ravel()
        if p.size < 1 or not np.all(np.isfinite(p)):
            return ValidationReport(False, {"shape": float("nan")})
        norm = abs(float(p.sum()) - 1.0)
        if norm > NORM_TOL:
            v["normalization"] = norm
        neg = float(-p.min())
        if neg > NEG_TOL_CLASSICAL:
            v["positivity"] = neg
    else:
        r = np.asarray(data, dtype=complex)
        if r.ndim != 2 or r.shape[0] != r.shape[1] or not np.all(np.isfinite(r)):
            return ValidationReport(False, {"shape": float("nan")})
        herm = float(np.max(np.abs(r - r.conj().T)))
        if herm > NORM_TOL:
            v["hermiticity"] = herm
        h = hermitize(r)
        norm = abs(float(np.trace(h).real) - 1.0)
        if norm > NORM_TOL:
            v["normalization"] = norm
        lmin = float(np.linalg.eigvalsh(h)[0])
        if lmin < -NEG_TOL_QUANTUM:
            v["positivity"] = -lmin
    return ValidationReport(not v, v)


@dataclass(frozen=True, eq=False)
class State:
    """A normalized measure on the lattice: probability vector or density matrix."""

    space: EventSpace
    data: np.ndarray

    def __post_init__(self):
        rep = validate_state(self.data, self.space.kind)
        if not rep.ok:
            raise InvalidState(rep)
        if self.space.is_quantum:
            arr = hermitize(self.data)
            if arr.shape != (self.space.size, self.space.size):
                raise SpaceMismatch("density matrix does not match the space")
        else:
            arr = np.asarray(self.data, dtype=float).ravel()
            if arr.size != self.space.size:
                raise SpaceMismatch("probability vector does not match the space")
        object.__setattr__(self, "data", _frozen(arr))

    @classmethod
    def classical(cls, p) -> "State":
        p = np.asarray(p, dtype=float).ravel()
        return cls(EventSpace.classical(p.size), p)

    @classmethod
    def quantum(cls, rho) -> "State":
        rho = np.asarray(rho, dtype=complex)
        return cls(EventSpace.quantum(rho.shape[0]), rho)

    @classmethod
    def pure(cls, ket) -> "State":
        psi = np.asarray(ket, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls.quantum(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, space: EventSpace) -> "State":
        if space.is_quantum:
            return cls(space, np.eye(space.size) / space.size)
        return cls(space, np.full(space.size, 1.0 / space.size))

    @classmethod
    def from_array(cls, space: EventSpace, data) -> "State":
        return cls(space, data)

    def expectation(self, observable) -> float:
        """Mean value of a real vector (classical) or Hermitian matrix (quantum)."""
        return expectation(self, observable)

    def spectrum(self) -> np.ndarray:
        if self.space.is_quantum:
            return np.clip(np.linalg.eigvalsh(self.data), 0.0, None)
        return np.clip(self.data, 0.0, None)


def expectation(state: State, observable) -> float:
    a = np.asarray(observable)
    if state.space.is_quantum:
        d = state.space.size
        if a.shape != (d, d):
            raise SpaceMismatch(f"observable shape {a.shape} vs dimension {d}")
        return float(np.real(np.sum(state.data * a.T)))
    if a.shape != (state.space.size,):
        raise SpaceMismatch(f"observable shape {a.shape} vs {state.space.size} outcomes")
    return float(np.dot(state.data, a.real))


def _same_space(state: State, event: Event):
    if state.space != event.space:
        raise SpaceMismatch(f"{state.space} vs {event.space}")


def prob(state: State, event: Event) -> float:
    """Probability the state assigns to an event (sum over the subset or Born rule)."""
    _same_space(state, event)
    if state.space.is_quantum:
        val = float(np.real(np.sum(state.data * event.data.T)))
    else:
        val = float(state.data[event.data].sum())
    if -NORM_TOL <= val < 0.0:
        val = 0.0
    elif 1.0 < val <= 1.0 + NORM_TOL:
        val = 1.0
    return val


def orthocomplement(event: Event) -> Event:
    if event.space.is_quantum:
        return Event(event.space, np.eye(event.space.size) - event.data)
    return Event(event.space, ~event.data)


def join_orthogonal(events: Sequence[Event], tol: float = 1e-9) -> Event:
    """Sum of a pairwise orthogonal family (raises NotOrthogonal otherwise)."""
    if not events:
        raise ValueError("empty family")
    space = events[0].space
    for e in events:
        if e.space != space:
            raise SpaceMismatch("events from different spaces")
    for i in range(len(events)):
        for j in range(i + 1, len(events)):
            a, b = events[i].data, events[j].data
            if space.is_quantum:
                overlap = float(np.max(np.abs(a @ b)))
                if overlap > tol:
                    raise NotOrthogonal(f"events {i},{j} overlap by {overlap:.3e}")
            elif np.any(a & b):
                raise NotOrthogonal(f"events {i},{j} are not disjoint")
    if space.is_quantum:
        return Event(space, sum(e.data for e in events))
    total = np.zeros(space.size, dtype=bool)
    for e in events:
        total |= e.data
    return Event(space, total)


def additivity_check(state: State, events: Sequence[Event]) -> float:
    """|nu(sum E_j) - sum nu(E_j)| for a pairwise orthogonal family."""
    joined = join_orthogonal(events)
    return abs(prob(state, joined) - sum(prob(state, e) for e in events))


@dataclass(frozen=True, eq=False)
class FrameFunction:
    """f(x) = <x|rho|x> on unit vectors; sums to 1 over every orthonormal basis."""

    state: State

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=complex).ravel()
        return float(np.real(np.vdot(x, self.state.data @ x)))


def frame_sum_check(f: FrameFunction, basis, tol: float = 1e-9) -> float:
    """|sum_i f(x_i) - 1| over the columns of ``basis``."""
    b = np.asarray(basis, dtype=complex)
    d = f.state.space.size
    if b.shape != (d, d):
        raise NotOrthonormal(f"basis must be {d}x{d} with vectors as columns")
    gram = b.conj().T @ b
    if np.max(np.abs(gram - np.eye(d))) > tol:
        raise NotOrthonormal("basis vectors are not orthonormal")
    return abs(sum(f(b[:, i]) for i in range(d)) - 1.0)
