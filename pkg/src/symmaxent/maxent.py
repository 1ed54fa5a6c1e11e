"""Maximum-entropy states over invariant states that satisfy constraints.

Pipeline: :func:`symmetry_reduce` twirls every constraint observable onto the
invariant subspace (and flags constraints no invariant state can meet);
:func:`solve_linear` handles mean-value constraints through the convex dual,
whose minimizer gives the Gibbs form exp(-sum lambda_i A_i)/Z; and
:func:`solve_general` adds nonlinear (variance) equalities and linear
inequalities with a multi-start outer loop.
"""
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from . import entropy as _entropy
from .errors import Infeasible, MaxIterations, SpaceMismatch
from .events import Event, EventSpace, State, expectation
from .numerics import (hermitize, lp_feasible, project_density, project_simplex,
                       random_hermitian)
from .symmetry import (GroupSpec, commutative_blocks, complement_basis, from_real,
                       invariant_basis, orbits, to_real, twirl_observable)

MOMENT = "moment"
LINEAR_EVENT = "linear_event"
VARIANCE = "variance_saturation"
INEQUALITY = "linear_inequality"
CONSTRAINT_KINDS = (MOMENT, LINEAR_EVENT, VARIANCE, INEQUALITY)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITER = "max_iter"
DEGENERATE = "degenerate"

SYMMETRY_TOL = 1e-10
HESSIAN_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# problem description
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Constraint:
    """One prior-information condition on the unknown state.

    * ``moment``: <observable> = target
    * ``linear_event``: sum_j coefficients[j] * nu(events[j]) = target
    * ``variance_saturation``: <A^2> - <A>^2 = target
    * ``linear_inequality``: <observable> (sense) target, sense in {"<=", ">="}
    """

    kind: str
    observable: Optional[np.ndarray] = None
    target: float = 0.0
    events: tuple = ()
    coefficients: tuple = ()
    sense: str = "<="
    second_moment: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in CONSTRAINT_KINDS:
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        if not np.isfinite(self.target):
            raise ValueError("constraint target must be finite")
        if self.kind == INEQUALITY and self.sense not in ("<=", ">="):
            raise ValueError("sense must be '<=' or '>='")
        if self.kind == LINEAR_EVENT:
            if len(self.events) != len(self.coefficients) or not self.events:
                raise ValueError("one coefficient per event required")
            obs = sum(float(c) * e.as_observable() for c, e in zip(self.coefficients, self.events))
            object.__setattr__(self, "observable", np.asarray(obs))
        elif self.observable is None:
            raise ValueError(f"{self.kind} constraint needs an observable")
        obs = np.asarray(self.observable)
        obs = hermitize(obs) if obs.ndim == 2 else obs.astype(float)
        object.__setattr__(self, "observable", obs)
        if self.kind == VARIANCE and self.second_moment is None:
            sq = obs @ obs if obs.ndim == 2 else obs * obs
            object.__setattr__(self, "second_moment", sq)
        object.__setattr__(self, "target", float(self.target))

    @property
    def is_equality(self) -> bool:
        return self.kind != INEQUALITY

    @property
    def is_linear(self) -> bool:
        return self.kind != VARIANCE

    def value(self, state: State) -> float:
        if self.kind == VARIANCE:
            m = expectation(state, self.observable)
            return expectation(state, self.second_moment) - m * m
        return expectation(state, self.observable)

    def residual(self, state: State) -> float:
        """Signed violation for equalities; positive part of the violation for inequalities."""
        v = self.value(state) - self.target
        if self.kind == INEQUALITY:
            return max(0.0, v if self.sense == "<=" else -v)
        return v

    def upper_form(self):
        """(G, u) with the inequality written as <G> <= u."""
        if self.sense == "<=":
            return self.observable, self.target
        return -self.observable, -self.target


def moment(observable, target, label="") -> Constraint:
    return Constraint(MOMENT, np.asarray(observable), target, label=label)


def linear_event(events: Sequence[Event], coefficients, rhs, label="") -> Constraint:
    return Constraint(LINEAR_EVENT, None, rhs, tuple(events), tuple(float(c) for c in coefficients),
                      label=label)


def variance_saturation(observable, target, label="") -> Constraint:
    return Constraint(VARIANCE, np.asarray(observable), target, label=label)


def linear_inequality(observable, bound, sense="<=", label="") -> Constraint:
    return Constraint(INEQUALITY, np.asarray(observable), bound, sense=sense, label=label)


@dataclass
class SolverOptions:
    tol: float = 1e-8
    grad_tol: float = 1e-9
    max_newton: int = 500
    max_outer: int = 200
    seed: int = 0
    starts: int = 8


@dataclass(frozen=True, eq=False)
class Problem:
    space: EventSpace
    group: GroupSpec = field(default_factory=GroupSpec.trivial)
    constraints: tuple = ()
    entropy: str = "auto"
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        self.group.check_space(self.space)
        shape = (self.space.size, self.space.size) if self.space.is_quantum else (self.space.size,)
        seen_var = []
        for c in self.constraints:
            if c.observable.shape != shape:
                raise SpaceMismatch(f"observable of shape {c.observable.shape}, space needs {shape}")
            if c.kind == VARIANCE:
                for other in seen_var:
                    if np.allclose(other, c.observable):
                        raise ValueError("duplicate variance_saturation constraint on one observable")
                seen_var.append(c.observable)
        allowed = {"auto", "measurement", "von_neumann" if self.space.is_quantum else "shannon"}
        if self.entropy not in allowed:
            raise ValueError(f"entropy {self.entropy!r} not defined on a {self.space.kind} space")

    def with_options(self, **kw) -> "Problem":
        return replace(self, options=replace(self.options, **kw))


@dataclass
class Solution:
    state: Optional[State]
    entropy_value: float
    multipliers: np.ndarray
    residuals: np.ndarray
    status: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals))) if self.residuals.size else 0.0


# ---------------------------------------------------------------------------
# symmetry reduction
# ---------------------------------------------------------------------------

@dataclass
class ReducedProblem:
    problem: Problem
    original: Problem
    basis: list
    conflicts: list

    @property
    def feasible_by_symmetry(self) -> bool:
        return not self.conflicts


def _identity(space: EventSpace) -> np.ndarray:
    return np.eye(space.size, dtype=complex) if space.is_quantum else np.ones(space.size)


def _constant_part(a: np.ndarray, space: EventSpace):
    """(c, ||a - c*1||) with c the mean eigenvalue / mean entry."""
    c = float(np.trace(a).real / space.size) if space.is_quantum else float(np.mean(a))
    return c, float(np.linalg.norm(a - c * _identity(space)))


def symmetry_reduce(problem: Problem) -> ReducedProblem:
    """Twirl every constraint observable and record the invariant basis.

    For an invariant state the mean of A equals the mean of its twirl, so
    the twirled problem has the same feasible set within the invariant
    states.  A constraint whose twirled observable is a multiple of the
    identity pins its value on every invariant state; if that value misses
    the target the whole problem is infeasible by symmetry.
    """
    space, group = problem.space, problem.group
    basis = invariant_basis(group, space)
    tol = problem.options.tol
    reduced, conflicts = [], []
    for i, c in enumerate(problem.constraints):
        a = twirl_observable(c.observable, group, space)
        if c.kind == VARIANCE:
            a2 = twirl_observable(c.second_moment, group, space)
            new = Constraint(VARIANCE, a, c.target, second_moment=a2, label=c.label)
            c1, r1 = _constant_part(a, space)
            c2, r2 = _constant_part(a2, space)
            scale = max(1.0, float(np.linalg.norm(c.second_moment)))
            if r1 <= SYMMETRY_TOL * scale and r2 <= SYMMETRY_TOL * scale:
                pinned = c2 - c1 * c1
                if abs(pinned - c.target) > tol:
                    conflicts.append({"index": i, "kind": c.kind, "twirled_norm": float(np.linalg.norm(a)),
                                      "nonconstant_norm": max(r1, r2), "pinned_value": pinned,
                                      "target": c.target})
        else:
            new = Constraint(c.kind if c.kind != LINEAR_EVENT else MOMENT, a, c.target,
                             sense=c.sense, label=c.label)
            const, resid = _constant_part(a, space)
            scale = max(1.0, float(np.linalg.norm(c.observable)))
            if resid <= SYMMETRY_TOL * scale:
                if c.kind == INEQUALITY:
                    g, u = new.upper_form()
                    bad = (const if c.sense == "<=" else -const) > u + tol
                else:
                    bad = abs(const - c.target) > tol
                if bad:
                    conflicts.append({"index": i, "kind": c.kind, "twirled_norm": float(np.linalg.norm(a)),
                                      "nonconstant_norm": resid, "pinned_value": const,
                                      "target": c.target})
        reduced.append(new)
    return ReducedProblem(replace(problem, constraints=tuple(reduced)), problem, basis, conflicts)


def explicit_invariance_constraints(group: GroupSpec, space: EventSpace) -> List[Constraint]:
    """Moment constraints <X> = 0 over the complement of the invariant observables.

    Imposing these on the trivial-group problem confines it to invariant states
    without twirling anything; used to cross-check the reduction.
    """
    return [moment(x, 0.0, label=f"invariance[{k}]")
            for k, x in enumerate(complement_basis(group, space))]


# ---------------------------------------------------------------------------
# Gibbs families and the dual Newton engine
# ---------------------------------------------------------------------------

def _phi(e: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Divided differences of exp(-x)/Z on the spectrum (Kubo-Mori kernel)."""
    gap = np.abs(e[:, None] - e[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(gap > 0, -np.expm1(-gap) / gap, 1.0)
    return np.maximum(p[:, None], p[None, :]) * f


class _GibbsFamily:
    """States exp(-(h0 + sum_i x_i O_i))/Z with derivatives of ln Z."""

    def __init__(self, space: EventSpace, observables, h0=None):
        self.space = space
        self.k = len(observables)
        if space.is_quantum:
            d = space.size
            self.obs = np.array(observables, dtype=complex).reshape(self.k, d, d)
            self.h0 = np.zeros((d, d), dtype=complex) if h0 is None else np.asarray(h0, dtype=complex)
        else:
            n = space.size
            self.obs = np.array(observables, dtype=float).reshape(self.k, n)
            self.h0 = np.zeros(n) if h0 is None else np.asarray(h0, dtype=float)

    def evaluate(self, x, derivatives=True):
        if self.space.is_quantum:
            h = self.h0 + np.tensordot(x, self.obs, axes=1) if self.k else self.h0
            e, v = np.linalg.eigh(hermitize(h))
            w = np.exp(-(e - e[0]))
            z = w.sum()
            p = w / z
            logz = -e[0] + np.log(z)
            rho = (v * p) @ v.conj().T
            if not derivatives:
                return logz, None, None, rho
            if not self.k:
                return logz, np.zeros(0), np.zeros((0, 0)), hermitize(rho)
            bt = np.einsum("ji,kjl,lm->kim", v.conj(), self.obs, v, optimize=True)
            means = np.real(np.einsum("kii,i->k", bt, p))
            phi = _phi(e, p)
            flat = bt.reshape(self.k, -1)
            cov = np.real((flat * phi.ravel()) @ flat.conj().T) - np.outer(means, means)
            return logz, means, 0.5 * (cov + cov.T), hermitize(rho)
        h = self.h0 + (x @ self.obs if self.k else 0.0)
        hmin = float(np.min(h))
        w = np.exp(-(h - hmin))
        z = w.sum()
        p = w / z
        logz = -hmin + np.log(z)
        if not derivatives:
            return logz, None, None, p
        means = self.obs @ p
        cov = (self.obs * p) @ self.obs.T - np.outer(means, means)
        return logz, means, 0.5 * (cov + cov.T), p


@dataclass
class _DualResult:
    state: np.ndarray
    x: np.ndarray
    grad_norm: float
    iterations: int
    converged: bool
    dual_value: float


class _InfeasibleDual(Exception):
    def __init__(self, x, value):
        super().__init__("dual objective below every primal value")
        self.x = x
        self.value = value


def _dual_newton(family: _GibbsFamily, targets: np.ndarray, n_eq: int, opts: SolverOptions,
                 x0=None, lower_bound: float = 0.0, finish_check=None) -> _DualResult:
    """Minimize ln Z(x) + x . targets (+ barrier on the inequality block).

    Coordinates ``x[:n_eq]`` are free; ``x[n_eq:]`` multiply ``<= `` constraints
    and stay positive under a log barrier whose weight is driven to 1e-12.
    ``lower_bound`` is a value no feasible primal point can fall below; the
    plain dual dropping under it certifies infeasibility.
    """
    k = family.k
    n_in = k - n_eq
    x = np.zeros(k) if x0 is None else np.array(x0, dtype=float)
    if n_in:
        x[n_eq:] = np.maximum(x[n_eq:], 1e-3)
        schedule = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12]
    else:
        schedule = [0.0]
    total = 0
    gnorm = np.inf
    rho = None
    dual0 = np.nan
    for stage, mu in enumerate(schedule):
        last = stage == len(schedule) - 1
        gtol = opts.grad_tol if last else max(opts.grad_tol, 1e-7)

        def objective(y):
            logz, means, cov, st = family.evaluate(y)
            val = logz + y @ targets
            grad = targets - means
            hess = cov
            if n_in:
                nu = y[n_eq:]
                val -= mu * np.sum(np.log(nu))
                grad = grad.copy()
                grad[n_eq:] -= mu / nu
                hess = cov.copy()
                hess[n_eq:, n_eq:] += np.diag(mu / nu ** 2)
            return val, grad, hess, st, logz + y @ targets

        val, grad, hess, rho, dual0 = objective(x)
        while True:
            if dual0 < lower_bound - 1e-9 * max(1.0, abs(lower_bound)):
                raise _InfeasibleDual(x, dual0)
            gnorm = float(np.linalg.norm(grad))
            if gnorm <= gtol and (not last or finish_check is None or finish_check(rho)):
                break
            if total >= opts.max_newton:
                return _DualResult(rho, x, gnorm, total, False, dual0)
            w, v = np.linalg.eigh(hess)
            floor = HESSIAN_FLOOR * max(1.0, float(w[-1]))
            gv = v.T @ grad
            # Newton on the well-conditioned part, plain gradient elsewhere
            step = -(v @ np.where(w > floor, gv / np.where(w > floor, w, 1.0), gv))
            tmax = 1.0
            if n_in:
                dn = step[n_eq:]
                neg = dn < 0
                if np.any(neg):
                    tmax = min(1.0, 0.99 * float(np.min(-x[n_eq:][neg] / dn[neg])))
            t = tmax
            slope = float(grad @ step)
            accepted = False
            for _ in range(60):
                cand = x + t * step
                cval, cgrad, chess, crho, cdual0 = objective(cand)
                if np.isfinite(cval) and (cval <= val + 1e-4 * t * slope or
                                          (t == tmax and np.linalg.norm(cgrad) <= 0.9 * gnorm
                                           and cval <= val + 1e-12 * max(1.0, abs(val)))):
                    accepted = True
                    break
                t *= 0.5
            total += 1
            if not accepted or (t < 1e-6 and gnorm <= gtol):
                # floating-point floor: the last iterate is as good as it gets
                if gnorm <= 10 * gtol and (finish_check is None or finish_check(rho)):
                    break
                return _DualResult(rho, x, gnorm, total, False, dual0)
            x, val, grad, hess, rho, dual0 = cand, cval, cgrad, chess, crho, cdual0
            if np.max(np.abs(x)) > 1e8:
                return _DualResult(rho, x, float(np.linalg.norm(grad)), total, False, dual0)
    return _DualResult(rho, x, gnorm, total, True, dual0)


@dataclass
class _LinearSystem:
    """Equality constraints reduced to orthonormal traceless observables."""

    observables: list
    targets: np.ndarray
    to_original: np.ndarray  # maps reduced multipliers to per-constraint ones
    inconsistency: float


def _reduce_equalities(space: EventSpace, observables, targets, tol=1e-9) -> _LinearSystem:
    m = len(observables)
    ident = _identity(space)
    ri = to_real(ident)
    if m == 0:
        return _LinearSystem([], np.zeros(0), np.zeros((0, 0)), 0.0)
    rows = np.array([to_real(a) for a in observables])
    consts = rows @ ri / (ri @ ri)
    centered = rows - np.outer(consts, ri)
    t = np.asarray(targets, dtype=float) - consts
    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol * max(smax, 1e-300))) if smax > 1e-12 else 0
    u, s, vt = u[:, :rank], s[:rank], vt[:rank]
    resid = t - u @ (u.T @ t)
    incons = float(np.linalg.norm(resid))
    obs = [from_real(row, space) for row in vt]
    red_t = (u.T @ t) / s if rank else np.zeros(0)
    to_orig = u / s if rank else np.zeros((m, 0))
    return _LinearSystem(obs, red_t, to_orig, incons)


@dataclass
class _SubResult:
    state: np.ndarray
    eq_multipliers: np.ndarray
    dual: _DualResult
    reduction: _LinearSystem


def _solve_dual(space: EventSpace, eq_obs, eq_t, in_obs, in_u, opts: SolverOptions,
                h0=None, warm=None, equality_tol=None) -> _SubResult:
    """Max entropy (minus <h0>) under linear equalities and ``<=`` inequalities.

    Raises ``Infeasible`` on a linear inconsistency or a dual certificate and
    ``MaxIterations`` when Newton stalls.
    """
    tol = opts.tol if equality_tol is None else equality_tol
    scale = max([1.0] + [abs(float(t)) for t in eq_t])
    red = _reduce_equalities(space, eq_obs, eq_t)
    if red.inconsistency > tol * scale:
        raise Infeasible(f"equality constraints are inconsistent (residual {red.inconsistency:.3e})",
                         certificate={"inconsistency": red.inconsistency})
    observables = list(red.observables) + list(in_obs)
    targets = np.concatenate([red.targets, np.asarray(in_u, dtype=float)])
    family = _GibbsFamily(space, observables, h0)
    n_eq = len(red.observables)
    lower = 0.0
    if h0 is not None:
        hh = np.asarray(h0)
        lower = -float(np.max(np.linalg.eigvalsh(hh) if space.is_quantum else hh))
    eq_obs_arr = list(eq_obs)
    eq_t_arr = np.asarray(eq_t, dtype=float)

    def finish(rho):
        if not eq_obs_arr:
            return True
        vals = np.array([_expect(space, rho, a) for a in eq_obs_arr])
        return float(np.max(np.abs(vals - eq_t_arr))) <= tol

    x0 = None
    if warm is not None and len(warm) == family.k:
        x0 = warm
    try:
        res = _dual_newton(family, targets, n_eq, opts, x0=x0, lower_bound=lower, finish_check=finish)
    except _InfeasibleDual as exc:
        raise Infeasible("dual objective certifies infeasibility",
                         certificate={"dual_point": exc.x.tolist(), "dual_value": exc.value,
                                      "lower_bound": lower}) from None
    if not res.converged:
        vals = [_expect(space, res.state, a) for a in eq_obs_arr]
        err = max([0.0] + [abs(v - t) for v, t in zip(vals, eq_t_arr)])
        if np.max(np.abs(res.x)) > 1e7 and err > 1e-6 * scale:
            raise Infeasible("dual multipliers diverge; target outside the attainable range",
                             certificate={"dual_point": res.x.tolist()})
        raise MaxIterations(f"dual Newton stopped after {res.iterations} iterations "
                            f"(gradient {res.grad_norm:.3e})", certificate={"result": res})
    mult = red.to_original @ res.x[:n_eq] if n_eq else np.zeros(len(eq_obs_arr))
    return _SubResult(res.state, mult, res, red)


def _expect(space: EventSpace, data: np.ndarray, a: np.ndarray) -> float:
    if space.is_quantum:
        return float(np.real(np.sum(data * np.asarray(a).T)))
    return float(np.dot(data, a))


def _entropy_value(space: EventSpace, data: np.ndarray) -> float:
    if space.is_quantum:
        return _entropy.von_neumann(data)
    return _entropy.shannon(data)


def _make_state(space: EventSpace, data: np.ndarray) -> State:
    if space.is_quantum:
        return State(space, hermitize(data))
    p = np.clip(np.asarray(data, dtype=float), 0.0, None)
    return State(space, p / p.sum())


def _residuals(problem: Problem, state: State) -> np.ndarray:
    return np.array([c.residual(state) for c in problem.constraints])


def _symmetry_failure(reduced: ReducedProblem) -> Infeasible:
    sol = Solution(None, float("nan"), np.zeros(0), np.zeros(0), INFEASIBLE,
                   {"symmetry_conflicts": reduced.conflicts})
    return Infeasible("constraints cannot be met by any invariant state", solution=sol,
                      certificate={"symmetry": reduced.conflicts})


# ---------------------------------------------------------------------------
# exact linear feasibility in invariant coordinates
# ---------------------------------------------------------------------------

def _invariant_atoms(space: EventSpace, group: GroupSpec):
    """Extreme invariant states when the invariant set is a simplex, else None."""
    if not space.is_quantum:
        atoms = []
        for orb in orbits(group, space.size):
            p = np.zeros(space.size)
            p[orb] = 1.0 / len(orb)
            atoms.append(p)
        return atoms
    blocks = commutative_blocks(group, space)
    if blocks is None:
        return None
    return [hermitize(v @ v.conj().T / v.shape[1]) for v in blocks]


def _lp_check(space: EventSpace, group: GroupSpec, constraints: Sequence[Constraint]):
    """LP feasibility over mixtures of invariant atoms; None if not applicable."""
    atoms = _invariant_atoms(space, group)
    if atoms is None:
        return None
    k = len(atoms)
    a_eq = [np.ones(k)]
    b_eq = [1.0]
    a_ub, b_ub = [], []
    for c in constraints:
        if c.kind == INEQUALITY:
            g, u = c.upper_form()
            a_ub.append([_expect(space, at, g) for at in atoms])
            b_ub.append(u)
        else:
            a_eq.append([_expect(space, at, c.observable) for at in atoms])
            b_eq.append(c.target)
    res = lp_feasible(np.array(a_eq), np.array(b_eq),
                      np.array(a_ub) if a_ub else None, np.array(b_ub) if b_ub else None,
                      n=k)
    if res.feasible:
        w = np.clip(res.point, 0.0, None)
        w = w / w.sum()
        witness = sum(wi * at for wi, at in zip(w, atoms))
        return True, witness, res
    return False, None, res


# ---------------------------------------------------------------------------
# public solvers
# ---------------------------------------------------------------------------

def _split(constraints):
    eq = [c for c in constraints if c.kind in (MOMENT, LINEAR_EVENT)]
    ineq = [c for c in constraints if c.kind == INEQUALITY]
    nonlin = [c for c in constraints if c.kind == VARIANCE]
    return eq, ineq, nonlin


def _build_solution(problem, reduced, data, eq_index, eq_mult, status, diag) -> Solution:
    state = _make_state(problem.space, data)
    mult = np.full(len(problem.constraints), np.nan)
    for i, m in zip(eq_index, eq_mult):
        mult[i] = m
    diag = dict(diag)
    diag["invariant_dimension"] = len(reduced.basis) - 1
    return Solution(state, _entropy.entropy_of(state, problem.entropy), mult,
                    _residuals(problem, state), status, diag)


def solve_linear(problem: Problem) -> Solution:
    """MaxEnt under mean-value constraints by safeguarded Newton on the dual.

    The dual is min_lambda ln Z(lambda) + lambda . r with the twirled
    observables; the primal state is the Gibbs form exp(-sum lambda_i A_i)/Z.
    """
    if any(c.kind not in (MOMENT, LINEAR_EVENT) for c in problem.constraints):
        raise ValueError("solve_linear accepts moment and linear_event constraints only")
    reduced = symmetry_reduce(problem)
    if reduced.conflicts:
        raise _symmetry_failure(reduced)
    opts = problem.options
    cons = reduced.problem.constraints
    space = problem.space
    if not space.is_quantum:
        check = _lp_check(space, problem.group, cons)
        if check is not None and not check[0]:
            sol = Solution(None, float("nan"), np.full(len(cons), np.nan), np.zeros(0), INFEASIBLE,
                           {"lp_certificate": check[2].certificate})
            raise Infeasible("no probability vector satisfies the constraints", solution=sol,
                             certificate=check[2].certificate)
    try:
        sub = _solve_dual(space, [c.observable for c in cons], [c.target for c in cons], [], [], opts)
    except Infeasible as exc:
        exc.solution = Solution(None, float("nan"), np.zeros(0), np.zeros(0), INFEASIBLE,
                                {"certificate": exc.certificate})
        raise
    except MaxIterations as exc:
        res = exc.certificate["result"]
        sol = _build_solution(problem, reduced, res.state, range(len(cons)), np.full(len(cons), np.nan),
                              MAX_ITER, {"newton_iterations": res.iterations,
                                         "dual_gradient_norm": res.grad_norm})
        raise MaxIterations(str(exc), solution=sol) from None
    diag = {"newton_iterations": sub.dual.iterations, "dual_gradient_norm": sub.dual.grad_norm,
            "dual_value": sub.dual.dual_value, "method": "dual_newton"}
    sol = _build_solution(problem, reduced, sub.state, range(len(cons)), sub.eq_multipliers,
                          OPTIMAL, diag)
    if sol.max_residual > opts.tol:
        sol.status = MAX_ITER
        raise MaxIterations("residuals above tolerance at exit", solution=sol)
    return sol


def _random_invariant_tilt(space, basis, rng, scale=1.0):
    coeffs = rng.normal(size=len(basis))
    h = sum(c * b for c, b in zip(coeffs, basis))
    norm = float(np.linalg.norm(h))
    return scale * h / max(norm, 1e-300)


def _project_state(space, data):
    return project_density(data) if space.is_quantum else project_simplex(data)


def _penalty(space, data, eq, ineq, nonlin):
    """Squared residual and its gradient (as an observable) at ``data``."""
    val = 0.0
    grad = np.zeros_like(data)
    for c in eq:
        r = _expect(space, data, c.observable) - c.target
        val += r * r
        grad = grad + 2 * r * c.observable
    for c in ineq:
        g, u = c.upper_form()
        r = _expect(space, data, g) - u
        if r > 0:
            val += r * r
            grad = grad + 2 * r * g
    for c in nonlin:
        m = _expect(space, data, c.observable)
        r = _expect(space, data, c.second_moment) - m * m - c.target
        val += r * r
        grad = grad + 2 * r * (c.second_moment - 2 * m * c.observable)
    if space.is_quantum:
        grad = hermitize(grad)
    return val, grad


def restore_feasibility(space, data, eq, ineq, nonlin, iters=2000, tol=1e-16):
    """Projected gradient descent on the squared constraint residual.

    Works over the (invariant) state set: gradients built from twirled
    observables are themselves invariant, and the Euclidean projection onto
    the simplex / density matrices preserves invariance.
    """
    x = np.array(data)
    val, grad = _penalty(space, x, eq, ineq, nonlin)
    step = 1.0 / max(1.0, float(np.linalg.norm(grad)))
    prev_x, prev_g = None, None
    for _ in range(iters):
        if val <= tol:
            break
        if prev_x is not None:
            s = (x - prev_x).ravel()
            y = (grad - prev_g).ravel()
            sy = float(np.real(np.vdot(s, y)))
            if sy > 0:
                step = float(np.real(np.vdot(s, s))) / sy
        while True:
            cand = _project_state(space, x - step * grad)
            cval, cgrad = _penalty(space, cand, eq, ineq, nonlin)
            if cval <= val - 1e-4 * float(np.real(np.vdot(grad, x - cand))) or step < 1e-16:
                break
            step *= 0.5
        if step < 1e-16:
            break
        prev_x, prev_g = x, grad
        x, val, grad = cand, cval, cgrad
    return x, val


def _linearize(space, data, nonlin, relax):
    """Linear model of each variance constraint around ``data``.

    With m = <A> the variance residual c satisfies
    c(rho') = c(rho) + <A^2 - 2 m A>_(rho' - rho) - (<A>_rho' - m)^2, so the
    linearized condition keeps a fraction (1 - relax) of the current residual.
    """
    obs, targets = [], []
    for c in nonlin:
        m = _expect(space, data, c.observable)
        cur = _expect(space, data, c.second_moment) - m * m - c.target
        obs.append(c.second_moment - 2 * m * c.observable)
        targets.append(c.target - m * m + (1.0 - relax) * cur)
    return obs, targets


def _nonlin_residual(space, data, nonlin):
    out = []
    for c in nonlin:
        m = _expect(space, data, c.observable)
        out.append(_expect(space, data, c.second_moment) - m * m - c.target)
    return np.array(out)


def _lcl_run(space, eq, ineq, nonlin, start, opts: SolverOptions):
    """Outer loop for one start: linearize, solve the linear subproblem, damp.

    Step acceptance uses the augmented Lagrangian
    -S + mu . c + (beta/2)|c|^2 as merit, mu taken from the subproblem's
    multipliers of the linearized rows.
    """
    data = np.array(start)
    mu = np.zeros(len(nonlin))
    beta = 10.0
    warm = None
    in_obs = [c.upper_form()[0] for c in ineq]
    in_u = [c.upper_form()[1] for c in ineq]
    n_lin = len(eq)
    linear_ok = True
    history = []

    def merit(x):
        c = _nonlin_residual(space, x, nonlin)
        return -_entropy_value(space, x) + mu @ c + 0.5 * beta * c @ c, c

    for outer in range(1, opts.max_outer + 1):
        sub = None
        for relax in (1.0, 0.5, 0.25, 0.125, 1 / 16, 1 / 64):
            lin_obs, lin_t = _linearize(space, data, nonlin, relax)
            try:
                sub = _solve_dual(space, [c.observable for c in eq] + lin_obs,
                                  [c.target for c in eq] + lin_t, in_obs, in_u, opts, warm=warm)
                break
            except (Infeasible, MaxIterations):
                warm = None
                continue
        if sub is None:
            data, pen = restore_feasibility(space, data, eq, ineq, nonlin)
            history.append(("restore", pen))
            linear_ok = False
            if pen > opts.tol ** 2 and outer > 3:
                return {"state": data, "status": INFEASIBLE, "iterations": outer,
                        "residual": float(np.sqrt(pen)), "history": history}
            continue
        warm = sub.dual.x
        mu = sub.eq_multipliers[n_lin:]
        direction = sub.state - data
        phi0, c0 = merit(data)
        t = 1.0
        if linear_ok:
            for _ in range(30):
                cand = data + t * direction
                phi1, c1 = merit(cand)
                if phi1 <= phi0 + 1e-12 * max(1.0, abs(phi0)) or \
                        np.linalg.norm(c1) <= 0.5 * np.linalg.norm(c0):
                    break
                t *= 0.5
        new = data + t * direction
        linear_ok = True
        c_new = _nonlin_residual(space, new, nonlin)
        if np.linalg.norm(c_new) > 0.25 * np.linalg.norm(c0):
            beta = min(beta * 10.0, 1e12)
        moved = float(np.linalg.norm(new - data))
        data = hermitize(new) if space.is_quantum else new
        history.append((relax, t, float(np.max(np.abs(c_new))) if c_new.size else 0.0, moved))
        lin_res = max([0.0] + [abs(_expect(space, data, c.observable) - c.target) for c in eq])
        ineq_res = max([0.0] + [_expect(space, data, g) - u for g, u in zip(in_obs, in_u)])
        if relax == 1.0 and t == 1.0 and np.max(np.abs(c_new), initial=0.0) <= opts.tol \
                and lin_res <= opts.tol and ineq_res <= opts.tol and moved <= 1e-7:
            return {"state": data, "status": OPTIMAL, "iterations": outer,
                    "residual": float(np.max(np.abs(c_new), initial=0.0)), "history": history,
                    "multipliers": sub.eq_multipliers, "dual_gradient_norm": sub.dual.grad_norm}
    return {"state": data, "status": MAX_ITER, "iterations": opts.max_outer,
            "residual": float(np.max(np.abs(_nonlin_residual(space, data, nonlin)), initial=0.0)),
            "history": history}


def _start_states(space, basis, eq, ineq, opts: SolverOptions):
    """Deterministic multi-start points satisfying the linear constraints."""
    seqs = np.random.SeedSequence(opts.seed).spawn(max(1, opts.starts))
    in_obs = [c.upper_form()[0] for c in ineq]
    in_u = [c.upper_form()[1] for c in ineq]
    for k, seq in enumerate(seqs):
        rng = np.random.default_rng(seq)
        h0 = None if k == 0 else _random_invariant_tilt(space, basis, rng, scale=2.0)
        try:
            sub = _solve_dual(space, [c.observable for c in eq], [c.target for c in eq],
                              in_obs, in_u, opts, h0=h0)
            yield k, sub.state
        except MaxIterations:
            data = _project_state(space, rng.random(space.size) if not space.is_quantum
                                  else hermitize(sum(rng.normal() * b for b in basis)))
            yield k, data


def solve_general(problem: Problem) -> Solution:
    """MaxEnt with any mix of linear, variance and inequality constraints.

    Each start is driven by an outer loop that linearizes the variance
    equalities around the current iterate and solves the resulting linear
    MaxEnt subproblem exactly (inequalities through a vanishing log barrier
    in the dual).  The best feasible start wins; two feasible starts with
    equal entropy but different states are reported as ``degenerate``.
    """
    reduced = symmetry_reduce(problem)
    if reduced.conflicts:
        raise _symmetry_failure(reduced)
    space, opts = problem.space, problem.options
    eq, ineq, nonlin = _split(reduced.problem.constraints)
    index_eq = [i for i, c in enumerate(reduced.problem.constraints) if c.kind in (MOMENT, LINEAR_EVENT)]
    index_nl = [i for i, c in enumerate(reduced.problem.constraints) if c.kind == VARIANCE]

    if not space.is_quantum or _invariant_atoms(space, problem.group) is not None:
        linear_part = eq + ineq
        check = _lp_check(space, problem.group, linear_part)
        if check is not None and not check[0]:
            sol = Solution(None, float("nan"), np.zeros(0), np.zeros(0), INFEASIBLE,
                           {"lp_certificate": check[2].certificate})
            raise Infeasible("linear constraints admit no invariant state", solution=sol,
                             certificate=check[2].certificate)

    if not nonlin:
        in_obs = [c.upper_form()[0] for c in ineq]
        in_u = [c.upper_form()[1] for c in ineq]
        try:
            sub = _solve_dual(space, [c.observable for c in eq], [c.target for c in eq],
                              in_obs, in_u, opts)
        except Infeasible as exc:
            exc.solution = Solution(None, float("nan"), np.zeros(0), np.zeros(0), INFEASIBLE,
                                    {"certificate": exc.certificate})
            raise
        except MaxIterations as exc:
            res = exc.certificate["result"]
            sol = _build_solution(problem, reduced, res.state, [], [], MAX_ITER,
                                  {"newton_iterations": res.iterations})
            raise MaxIterations(str(exc), solution=sol) from None
        diag = {"newton_iterations": sub.dual.iterations, "dual_gradient_norm": sub.dual.grad_norm,
                "outer_iterations": 1, "starts": 1, "method": "dual_newton_barrier"}
        sol = _build_solution(problem, reduced, sub.state, index_eq, sub.eq_multipliers, OPTIMAL, diag)
        return _finalize(sol, problem)

    runs = []
    for k, start in _start_states(space, reduced.basis, eq, ineq, opts):
        run = _lcl_run(space, eq, ineq, nonlin, start, opts)
        run["start"] = k
        run["entropy"] = _entropy_value(space, run["state"])
        runs.append(run)

    feasible = [r for r in runs if r["status"] == OPTIMAL]
    optima = [{"start": r["start"], "status": r["status"], "entropy": r["entropy"],
               "residual": r["residual"], "iterations": r["iterations"]} for r in runs]
    if not feasible:
        best = min(runs, key=lambda r: r["residual"])
        status = INFEASIBLE if all(r["residual"] >= 1e-6 for r in runs) else MAX_ITER
        sol = _build_solution(problem, reduced, _project_state(space, best["state"]), [], [], status,
                              {"optima": optima})
        if status == INFEASIBLE:
            raise Infeasible(f"residual floor {best['residual']:.3e} after {opts.max_outer} outer iterations",
                             solution=sol)
        raise MaxIterations("no start reached the constraint tolerance", solution=sol)
    best = max(feasible, key=lambda r: (r["entropy"], -r["start"]))
    status = OPTIMAL
    for r in feasible:
        if r is best:
            continue
        if abs(r["entropy"] - best["entropy"]) <= 1e-8 and \
                np.linalg.norm(r["state"] - best["state"]) >= 1e-4:
            status = DEGENERATE
    mult = best["multipliers"]
    eq_mult = list(mult[: len(eq)]) + list(mult[len(eq):])
    diag = {"outer_iterations": best["iterations"], "starts": len(runs), "best_start": best["start"],
            "dual_gradient_norm": best["dual_gradient_norm"], "optima": optima,
            "method": "linearized_augmented_lagrangian"}
    sol = _build_solution(problem, reduced, best["state"], index_eq + index_nl, eq_mult, status, diag)
    return _finalize(sol, problem)


def _finalize(sol: Solution, problem: Problem) -> Solution:
    if sol.status in (OPTIMAL, DEGENERATE) and sol.max_residual > problem.options.tol:
        sol.status = MAX_ITER
        raise MaxIterations(f"residual {sol.max_residual:.3e} above tolerance", solution=sol)
    return sol


def solve(problem: Problem) -> Solution:
    """Dispatch to the linear solver when every constraint is a mean value."""
    if all(c.kind in (MOMENT, LINEAR_EVENT) for c in problem.constraints):
        return solve_linear(problem)
    return solve_general(problem)


# ---------------------------------------------------------------------------
# feasibility
# ---------------------------------------------------------------------------

@dataclass
class FeasibilityReport:
    status: str  # "feasible" | "infeasible" | "unknown"
    witness: Optional[State] = None
    certificate: Optional[dict] = None


def feasibility_check(problem: Problem) -> FeasibilityReport:
    """Exact LP answer for linear constraint sets over a simplex of invariant
    states; otherwise multi-start residual minimization."""
    reduced = symmetry_reduce(problem)
    if reduced.conflicts:
        return FeasibilityReport("infeasible", certificate={"symmetry": reduced.conflicts})
    space, opts = problem.space, problem.options
    eq, ineq, nonlin = _split(reduced.problem.constraints)
    check = _lp_check(space, problem.group, eq + ineq)
    if check is not None:
        if not check[0]:
            return FeasibilityReport("infeasible", certificate=check[2].certificate)
        if not nonlin:
            return FeasibilityReport("feasible", witness=_make_state(space, check[1]))
    elif not nonlin:
        try:
            in_obs = [c.upper_form()[0] for c in ineq]
            in_u = [c.upper_form()[1] for c in ineq]
            sub = _solve_dual(space, [c.observable for c in eq], [c.target for c in eq], in_obs, in_u, opts)
            return FeasibilityReport("feasible", witness=_make_state(space, sub.state))
        except Infeasible as exc:
            return FeasibilityReport("infeasible", certificate=exc.certificate)
        except MaxIterations:
            return FeasibilityReport("unknown")

    best = np.inf
    for k, start in _start_states(space, reduced.basis, eq, ineq, opts):
        data, pen = restore_feasibility(space, start, eq, ineq, nonlin)
        res = np.sqrt(pen)
        best = min(best, res)
        if res <= opts.tol:
            return FeasibilityReport("feasible", witness=_make_state(space, data),
                                     certificate={"residual": float(res), "start": k})
    try:
        sol = solve_general(problem)
        return FeasibilityReport("feasible", witness=sol.state,
                                 certificate={"residual": sol.max_residual})
    except Infeasible as exc:
        if exc.certificate is not None:
            return FeasibilityReport("infeasible", certificate=exc.certificate)
    except MaxIterations:
        pass
    return FeasibilityReport("unknown", certificate={"best_residual": float(best)})
