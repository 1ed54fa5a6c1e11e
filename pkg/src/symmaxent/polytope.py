"""Bipartite behaviors P(a,b|x,y) with two inputs and two outputs per party.

Tables are numpy arrays indexed ``[x, y, a, b]``; flattening them in C order
gives the fixed (x, y, a, b) lexicographic layout used in behavior files.
"""
import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import BadObservable, Infeasible, InvalidState
from .events import EventSpace, State, ValidationReport
from .maxent import Problem, SolverOptions, moment, solve_general, solve_linear
from .numerics import check_hermitian, lp_feasible, lp_minimize
from .symmetry import GroupSpec

NORM_TOL = 1e-10
NEG_TOL = 1e-12
NOSIGNAL_TOL = 1e-8
LOCAL = "local"
NOSIGNAL = "nosignal"

# Sign placements of the CHSH expression: the minus sign sits on (x, y),
# and the whole expression may be negated.
_MINUS_ORDER = ((1, 1), (1, 0), (0, 1), (0, 0))


def _parity() -> np.ndarray:
    return np.array([[1.0, -1.0], [-1.0, 1.0]])


@dataclass(frozen=True, eq=False)
class Behavior:
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.size != 16:
            raise InvalidState({"shape": float(t.size)})
        t = t.reshape(2, 2, 2, 2)
        v = {}
        norm = float(np.max(np.abs(t.sum(axis=(2, 3)) - 1.0)))
        if norm > NORM_TOL:
            v["normalization"] = norm
        if -t.min() > NEG_TOL:
            v["positivity"] = float(-t.min())
        if v:
            raise InvalidState(ValidationReport(False, v))
        t = t.copy()
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @classmethod
    def from_flat(cls, values) -> "Behavior":
        return cls(np.asarray(values, dtype=float).reshape(2, 2, 2, 2))

    def flat(self) -> np.ndarray:
        return self.table.ravel().copy()

    def joint(self) -> np.ndarray:
        """The 16-entry distribution P(a,b|x,y)/4 with uniform inputs."""
        return self.flat() / 4.0

    def correlators(self) -> np.ndarray:
        return correlators(self)


def correlators(b: Behavior) -> np.ndarray:
    """E[x, y] = sum_ab (-1)^(a xor b) P(ab|xy)."""
    return np.einsum("xyab,ab->xy", b.table, _parity())


def _chsh_coefficients() -> np.ndarray:
    """8 x 2 x 2 sign patterns; row k gives S_k = sum_xy c[k,x,y] E[x,y]."""
    rows = []
    for sign in (1.0, -1.0):
        for mx, my in _MINUS_ORDER:
            c = np.ones((2, 2))
            c[mx, my] = -1.0
            rows.append(sign * c)
    return np.array(rows)


CHSH_COEFFICIENTS = _chsh_coefficients()


def chsh_values(b: Behavior) -> np.ndarray:
    """All 8 CHSH expressions; entry 0 is E00 + E10 + E01 - E11."""
    return np.einsum("kxy,xy->k", CHSH_COEFFICIENTS, correlators(b))


def chsh_max(b: Behavior) -> float:
    return float(np.max(chsh_values(b)))


def _nosignal_rows():
    """Rows over the flat (x,y,a,b) index, each one marginal equality = 0."""
    rows = []
    for x, a in itertools.product(range(2), repeat=2):
        r = np.zeros((2, 2, 2, 2))
        r[x, 0, a, :] += 1.0
        r[x, 1, a, :] -= 1.0
        rows.append(r.ravel())
    for y, bb in itertools.product(range(2), repeat=2):
        r = np.zeros((2, 2, 2, 2))
        r[0, y, :, bb] += 1.0
        r[1, y, :, bb] -= 1.0
        rows.append(r.ravel())
    return np.array(rows)


NOSIGNAL_ROWS = _nosignal_rows()


def nosignal_residual(b: Behavior) -> float:
    return float(np.max(np.abs(NOSIGNAL_ROWS @ b.flat())))


def _deterministic(fa, fb) -> Behavior:
    t = np.zeros((2, 2, 2, 2))
    for x, y in itertools.product(range(2), repeat=2):
        t[x, y, fa[x], fb[y]] = 1.0
    return Behavior(t)


def local_vertices():
    """16 deterministic behaviors, a = fa[x], b = fb[y]."""
    funcs = list(itertools.product(range(2), repeat=2))
    return [_deterministic(fa, fb) for fa in funcs for fb in funcs]


def pr_box(alpha: int = 0, beta: int = 0, gamma: int = 0) -> Behavior:
    """Uniform over a xor b = x y xor alpha x xor beta y xor gamma."""
    t = np.zeros((2, 2, 2, 2))
    for x, y, a, bb in itertools.product(range(2), repeat=4):
        if (a ^ bb) == ((x * y) ^ (alpha * x) ^ (beta * y) ^ gamma):
            t[x, y, a, bb] = 0.5
    return Behavior(t)


def pr_boxes():
    return [pr_box(al, be, ga) for al, be, ga in itertools.product(range(2), repeat=3)]


def uniform_behavior() -> Behavior:
    return Behavior(np.full((2, 2, 2, 2), 0.25))


def mixture(behaviors: Sequence[Behavior], weights) -> Behavior:
    w = np.asarray(weights, dtype=float)
    return Behavior(np.tensordot(w, np.array([b.table for b in behaviors]), axes=1))


@dataclass
class Membership:
    inside: bool
    witness: Optional[dict]


def membership(b: Behavior, polytope: str = LOCAL) -> Membership:
    """Local: LP over convex weights of the 16 vertices. No-signal: residual test."""
    if polytope == NOSIGNAL:
        r = nosignal_residual(b)
        return Membership(r <= NOSIGNAL_TOL, {"residual": r})
    if polytope != LOCAL:
        raise ValueError(f"unknown polytope {polytope!r}")
    verts = np.array([v.flat() for v in local_vertices()]).T  # 16 x 16
    a_eq = np.vstack([verts, np.ones((1, 16))])
    b_eq = np.concatenate([b.flat(), [1.0]])
    res = lp_feasible(a_eq, b_eq, n=16)
    if not res.feasible:
        return Membership(False, {"certificate": res.certificate})
    w = np.clip(res.point, 0.0, None)
    w = w / w.sum()
    err = float(np.max(np.abs(verts @ w - b.flat())))
    return Membership(True, {"weights": w, "reconstruction_error": err})


def is_extremal_local(k: int) -> bool:
    """Vertex k of the local catalog is not a mixture of the other 15."""
    verts = local_vertices()
    others = np.array([v.flat() for i, v in enumerate(verts) if i != k]).T
    a_eq = np.vstack([others, np.ones((1, 15))])
    b_eq = np.concatenate([verts[k].flat(), [1.0]])
    return not lp_feasible(a_eq, b_eq, n=15).feasible


# ---------------------------------------------------------------------------
# quantum behaviors
# ---------------------------------------------------------------------------

def _check_pm1(obs) -> np.ndarray:
    o = check_hermitian(np.asarray(obs, dtype=complex), 1e-10)
    if np.max(np.abs(o @ o - np.eye(o.shape[0]))) > 1e-10:
        raise BadObservable("observable does not square to the identity")
    return o


@dataclass(frozen=True, eq=False)
class MeasurementPair:
    state: State
    alice: tuple
    bob: tuple

    def __post_init__(self):
        a = tuple(_check_pm1(o) for o in self.alice)
        b = tuple(_check_pm1(o) for o in self.bob)
        if len(a) != 2 or len(b) != 2:
            raise BadObservable("each party needs exactly two observables")
        if a[0].shape != a[1].shape or b[0].shape != b[1].shape:
            raise BadObservable("observables of one party must share a dimension")
        if a[0].shape[0] * b[0].shape[0] != self.state.space.size:
            raise BadObservable("state dimension is not the product of the local dimensions")
        object.__setattr__(self, "alice", a)
        object.__setattr__(self, "bob", b)


def _projector(obs, outcome: int) -> np.ndarray:
    """Pi_a = (1 + (-1)^a O) / 2."""
    return 0.5 * (np.eye(obs.shape[0]) + (1 - 2 * outcome) * obs)


def quantum_behavior(mp: MeasurementPair) -> Behavior:
    """P(ab|xy) = tr(rho Pi_a^x (x) Pi_b^y)."""
    rho = mp.state.data
    t = np.zeros((2, 2, 2, 2))
    for x, y, a, b in itertools.product(range(2), repeat=4):
        op = np.kron(_projector(mp.alice[x], a), _projector(mp.bob[y], b))
        t[x, y, a, b] = float(np.real(np.sum(rho * op.T)))
    # Born-rule roundoff only
    t = np.clip(t, 0.0, None)
    return Behavior(t / t.sum(axis=(2, 3), keepdims=True))


def spin_observable(angle: float) -> np.ndarray:
    """cos(angle) sigma_z + sin(angle) sigma_x."""
    return np.array([[np.cos(angle), np.sin(angle)], [np.sin(angle), -np.cos(angle)]], dtype=complex)


def singlet() -> State:
    psi = np.array([0.0, 1.0, -1.0, 0.0]) / np.sqrt(2.0)
    return State.pure(psi)


def tsirelson_pair() -> MeasurementPair:
    """Singlet with Alice at angles (0, pi/2) and Bob at (pi/4, -pi/4)."""
    return MeasurementPair(singlet(), (spin_observable(0.0), spin_observable(np.pi / 2)),
                           (spin_observable(np.pi / 4), spin_observable(-np.pi / 4)))


# ---------------------------------------------------------------------------
# maximum entropy behaviors
# ---------------------------------------------------------------------------

def behavior_space() -> EventSpace:
    return EventSpace.classical(16)


def _chsh_row(k: int = 0) -> np.ndarray:
    """S_k as a linear functional of the joint q = P/4 (hence the factor 4)."""
    c = CHSH_COEFFICIENTS[k]
    r = np.zeros((2, 2, 2, 2))
    for x, y in itertools.product(range(2), repeat=2):
        r[x, y] = 4.0 * c[x, y] * _parity()
    return r.ravel()


def behavior_constraints(chsh_target: Optional[float] = None, variant: int = 0):
    """Normalization per context and no-signal equalities on q = P/4, plus CHSH."""
    cons = []
    for x, y in itertools.product(range(2), repeat=2):
        r = np.zeros((2, 2, 2, 2))
        r[x, y] = 1.0
        cons.append(moment(r.ravel(), 0.25, f"context {x}{y}"))
    for i, row in enumerate(NOSIGNAL_ROWS):
        cons.append(moment(row, 0.0, f"no-signal {i}"))
    if chsh_target is not None:
        cons.append(moment(_chsh_row(variant), chsh_target, "chsh"))
    return cons


@dataclass
class MaxEntBehavior:
    behavior: Behavior
    entropy: float
    solution: object


def maxent_behavior(chsh_target: float, extra=(), group: Optional[GroupSpec] = None,
                    options: Optional[SolverOptions] = None, variant: int = 0) -> MaxEntBehavior:
    """Maximize the joint Shannon entropy of P(ab|xy)/4 under no-signal and CHSH = target.

    ``extra`` takes further constraints over the 16-entry joint; ``group`` may
    be any permutation group of those 16 cells (relabelings of parties, inputs
    or outputs).
    """
    if abs(chsh_target) > 4.0 + 1e-12:
        raise Infeasible(f"CHSH target {chsh_target} outside [-4, 4]")
    cons = behavior_constraints(chsh_target, variant) + list(extra)
    prob = Problem(behavior_space(), group or GroupSpec.trivial(), cons, "shannon",
                   options or SolverOptions())
    if all(c.is_linear and c.is_equality for c in cons):
        sol = solve_linear(prob)
    else:
        sol = solve_general(prob)
    q = np.clip(np.asarray(sol.state.data), 0.0, None)
    table = (4.0 * q).reshape(2, 2, 2, 2)
    table = table / table.sum(axis=(2, 3), keepdims=True)
    return MaxEntBehavior(Behavior(table), sol.entropy_value, sol)


def chsh_face_unique(target: float = 4.0, variant: int = 0, tol: float = 1e-9) -> dict:
    """LP min/max of each cell over no-signal behaviors with CHSH = target.

    Returns the per-cell ranges; the face is a single point when every range
    is below ``tol``.
    """
    rows = [c.observable for c in behavior_constraints(target, variant)]
    rhs = [c.target for c in behavior_constraints(target, variant)]
    a_eq = np.array(rows)
    b_eq = np.array(rhs)
    spans = np.zeros(16)
    for i in range(16):
        e = np.zeros(16)
        e[i] = 1.0
        lo = lp_minimize(e, a_eq, b_eq)
        hi = lp_minimize(-e, a_eq, b_eq)
        if lo.status != "optimal" or hi.status != "optimal":
            return {"unique": False, "status": (lo.status, hi.status)}
        spans[i] = -hi.objective - lo.objective
    return {"unique": bool(np.max(spans) <= tol), "spans": spans}
