"""Shannon, von Neumann and measurement entropies (natural log, 0 ln 0 = 0)."""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import NotOrthonormal, SpaceMismatch
from .events import Event, EventSpace, State, prob
from .numerics import eig_hermitian, random_unitary


def entropy_terms(p) -> np.ndarray:
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    out = np.zeros_like(p)
    nz = p > 0
    out[nz] = -p[nz] * np.log(p[nz])
    return out


def shannon(p) -> float:
    return float(entropy_terms(p).sum())


def von_neumann(rho) -> float:
    """Shannon entropy of the spectrum; eigenvalues down to -1e-10 are clipped."""
    if isinstance(rho, State):
        rho = rho.data
    return shannon(np.linalg.eigvalsh(np.asarray(rho, dtype=complex)))


@dataclass(frozen=True, eq=False)
class Measurement:
    """A classical partition of outcomes or a rank-1 projective quantum measurement.

    For quantum spaces ``basis`` holds the measurement vectors as columns.
    """

    space: EventSpace
    blocks: Optional[tuple] = None
    basis: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.space.is_quantum:
            b = np.asarray(self.basis, dtype=complex)
            d = self.space.size
            if b.shape != (d, d):
                raise NotOrthonormal(f"basis must be {d}x{d}")
            if np.max(np.abs(b.conj().T @ b - np.eye(d))) > 1e-9:
                raise NotOrthonormal("measurement basis is not orthonormal")
            object.__setattr__(self, "basis", b)
        else:
            blocks = tuple(tuple(int(i) for i in blk) for blk in self.blocks)
            seen = sorted(i for blk in blocks for i in blk)
            if seen != list(range(self.space.size)):
                raise ValueError("blocks must partition the outcomes")
            object.__setattr__(self, "blocks", blocks)

    @classmethod
    def atomic(cls, space: EventSpace) -> "Measurement":
        if space.is_quantum:
            return cls(space, basis=np.eye(space.size))
        return cls(space, blocks=tuple((i,) for i in range(space.size)))

    @classmethod
    def in_basis(cls, basis) -> "Measurement":
        b = np.asarray(basis, dtype=complex)
        return cls(EventSpace.quantum(b.shape[0]), basis=b)

    def events(self) -> list:
        if self.space.is_quantum:
            return [Event.span(self.space, [self.basis[:, i]]) for i in range(self.space.size)]
        return [Event.subset(self.space, blk) for blk in self.blocks]


def outcome_distribution(state: State, m: Measurement) -> np.ndarray:
    if state.space != m.space:
        raise SpaceMismatch(f"{state.space} vs {m.space}")
    if state.space.is_quantum:
        b = m.basis
        return np.real(np.einsum("ik,ij,jk->k", b.conj(), state.data, b))
    return np.array([prob(state, e) for e in m.events()])


def measurement_entropy_for(state: State, m: Measurement) -> float:
    return shannon(outcome_distribution(state, m))


def measurement_entropy(state: State):
    """Infimum of H_E over rank-1 projective measurements, with the minimizer.

    Classically the atomic partition attains it; quantum-mechanically the
    eigenbasis does, because every other basis yields an outcome distribution
    majorized by the spectrum.
    """
    if state.space.is_quantum:
        dec = eig_hermitian(state.data)
        m = Measurement(state.space, basis=dec.eigenvectors)
        return shannon(dec.eigenvalues), m
    m = Measurement.atomic(state.space)
    return shannon(state.data), m


def entropy_of(state: State, kind: str = "auto") -> float:
    """Dispatch on the functional name used in problem files."""
    if kind in ("auto", "measurement"):
        return measurement_entropy(state)[0]
    if kind == "shannon":
        if state.space.is_quantum:
            raise SpaceMismatch("shannon entropy needs a classical state")
        return shannon(state.data)
    if kind == "von_neumann":
        if not state.space.is_quantum:
            raise SpaceMismatch("von Neumann entropy needs a quantum state")
        return von_neumann(state.data)
    raise ValueError(f"unknown entropy kind {kind!r}")


def sampled_measurement_entropy(state: State, samples: int, seed: int) -> np.ndarray:
    """H_E over Haar-random bases; a verification tool, not the production path."""
    rng = np.random.default_rng(seed)
    d = state.space.size
    return np.array([measurement_entropy_for(state, Measurement(state.space, basis=random_unitary(d, rng)))
                     for _ in range(samples)])
