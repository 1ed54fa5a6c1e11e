"""JSON problem/solution/state files.

Matrices are nested arrays of ``[re, im]`` pairs, classical vectors are plain
number lists, permutations are 0-based index arrays.  Output floats are
written with 17 significant digits so identical runs give identical bytes.
"""
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import MaxEntError, ProblemFormatError
from .events import Event, EventSpace, State, validate_state
from .maxent import (CONSTRAINT_KINDS, INEQUALITY, LINEAR_EVENT, MOMENT, VARIANCE, Constraint,
                     Problem, Solution, SolverOptions)
from .symmetry import GroupSpec, KINDS as GROUP_KINDS

SOLVER_KEYS = {"tol", "max_iter", "max_outer", "seed", "starts"}


# ---------------------------------------------------------------------------
# writing
# ---------------------------------------------------------------------------

def format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    if x == 0:
        return "0.0"
    text = format(x, ".17g")
    return text if any(c in text for c in ".en") else text + ".0"


def plain(obj):
    """Convert numpy containers and scalars to JSON-ready Python values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return complex_to_pairs(obj)
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if obj is None or isinstance(obj, str):
        return obj
    return repr(obj)


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON with fixed float formatting."""
    def emit(v, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(v, dict):
            if not v:
                return "{}"
            items = [f"{pad}{json.dumps(k)}: {emit(x, level + 1)}" for k, x in v.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(v, list):
            if not v:
                return "[]"
            if all(not isinstance(x, (dict, list)) for x in v):
                return "[" + ", ".join(emit(x, level + 1) for x in v) + "]"
            return "[\n" + ",\n".join(pad + emit(x, level + 1) for x in v) + "\n" + end + "]"
        if isinstance(v, bool) or v is None:
            return json.dumps(v)
        if isinstance(v, int):
            return str(v)
        if isinstance(v, float):
            return format_float(v)
        return json.dumps(v)

    return emit(plain(obj), 0) + "\n"


def complex_to_pairs(m) -> list:
    m = np.asarray(m, dtype=complex)
    return np.stack([m.real, m.imag], axis=-1).tolist()


# ---------------------------------------------------------------------------
# reading
# ---------------------------------------------------------------------------

def _number(v, what) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ProblemFormatError(f"{what}: expected a number, got {v!r}")
    if not math.isfinite(v):
        raise ProblemFormatError(f"{what}: non-finite value")
    return float(v)


def pairs_to_matrix(data, d: Optional[int] = None, what: str = "matrix") -> np.ndarray:
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError):
        raise ProblemFormatError(f"{what}: ragged or non-numeric entries") from None
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ProblemFormatError(f"{what}: expected a square array of [re, im] pairs, got shape {arr.shape}")
    if d is not None and arr.shape[0] != d:
        raise ProblemFormatError(f"{what}: dimension {arr.shape[0]} != {d}")
    if not np.all(np.isfinite(arr)):
        raise ProblemFormatError(f"{what}: non-finite entries")
    return arr[..., 0] + 1j * arr[..., 1]


def pairs_to_vector(data, what: str = "vector") -> np.ndarray:
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError):
        raise ProblemFormatError(f"{what}: ragged or non-numeric entries") from None
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ProblemFormatError(f"{what}: expected a list of [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


def real_vector(data, n: Optional[int] = None, what: str = "vector") -> np.ndarray:
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError):
        raise ProblemFormatError(f"{what}: ragged or non-numeric entries") from None
    if arr.ndim != 1 or (n is not None and arr.size != n):
        raise ProblemFormatError(f"{what}: expected {n if n is not None else 'a list of'} numbers")
    if not np.all(np.isfinite(arr)):
        raise ProblemFormatError(f"{what}: non-finite entries")
    return arr


def parse_space(obj) -> EventSpace:
    if not isinstance(obj, dict) or "kind" not in obj or "size" not in obj:
        raise ProblemFormatError("space needs 'kind' and 'size'")
    try:
        return EventSpace(obj["kind"], obj["size"])
    except (ValueError, TypeError) as exc:
        raise ProblemFormatError(f"space: {exc}") from None


def parse_group(obj, space: Optional[EventSpace] = None) -> GroupSpec:
    if obj is None:
        return GroupSpec.trivial()
    if not isinstance(obj, dict) or obj.get("kind") not in GROUP_KINDS:
        raise ProblemFormatError(f"group kind must be one of {GROUP_KINDS}")
    kind = obj["kind"]
    gens = obj.get("generators", [])
    if not isinstance(gens, list):
        raise ProblemFormatError("group generators must be a list")
    try:
        if kind == "trivial":
            spec = GroupSpec.trivial()
        elif kind == "permutations":
            perms = []
            for g in gens:
                if not isinstance(g, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in g):
                    raise ProblemFormatError("permutations must be arrays of 0-based integers")
                perms.append(g)
            spec = GroupSpec.permutations(*perms)
        else:
            mats = [pairs_to_matrix(g, space.size if space else None, "group generator") for g in gens]
            spec = GroupSpec.unitaries(*mats) if kind == "unitaries" else GroupSpec.one_parameter(*mats)
        if space is not None:
            spec.check_space(space)
    except ProblemFormatError:
        raise
    except (MaxEntError, ValueError, TypeError) as exc:
        raise ProblemFormatError(f"group: {exc}") from None
    return spec


def parse_observable(data, space: EventSpace, what: str):
    if space.is_quantum:
        return pairs_to_matrix(data, space.size, what)
    return real_vector(data, space.size, what)


def parse_event(obj, space: EventSpace) -> Event:
    try:
        if isinstance(obj, dict) and "indices" in obj:
            return Event.subset(space, obj["indices"])
        if isinstance(obj, dict) and "projector" in obj and space.is_quantum:
            return Event.projector(space, pairs_to_matrix(obj["projector"], space.size, "event projector"))
    except MaxEntError as exc:
        raise ProblemFormatError(f"event: {exc}") from None
    raise ProblemFormatError("event needs 'indices' (or 'projector' on quantum spaces)")


def parse_constraint(obj, space: EventSpace, k: int) -> Constraint:
    what = f"constraints[{k}]"
    if not isinstance(obj, dict) or obj.get("kind") not in CONSTRAINT_KINDS:
        raise ProblemFormatError(f"{what}: kind must be one of {CONSTRAINT_KINDS}")
    kind = obj["kind"]
    label = str(obj.get("label", ""))
    try:
        if kind == LINEAR_EVENT:
            events = [parse_event(e, space) for e in obj.get("events", [])]
            coeffs = [_number(c, what) for c in obj.get("coefficients", [])]
            return Constraint(LINEAR_EVENT, None, _number(obj.get("rhs"), what), tuple(events),
                              tuple(coeffs), label=label)
        obs = parse_observable(obj.get("observable"), space, f"{what}.observable")
        if kind == INEQUALITY:
            return Constraint(INEQUALITY, obs, _number(obj.get("bound"), what),
                              sense=obj.get("sense", "<="), label=label)
        return Constraint(kind, obs, _number(obj.get("target"), what), label=label)
    except ProblemFormatError:
        raise
    except (MaxEntError, ValueError) as exc:
        raise ProblemFormatError(f"{what}: {exc}") from None


def parse_options(obj, overrides: Optional[dict] = None) -> SolverOptions:
    obj = dict(obj or {})
    unknown = set(obj) - SOLVER_KEYS
    if unknown:
        raise ProblemFormatError(f"unknown solver keys {sorted(unknown)}")
    obj.update({k: v for k, v in (overrides or {}).items() if v is not None})
    opts = SolverOptions()
    try:
        if "tol" in obj:
            opts.tol = _number(obj["tol"], "solver.tol")
        if "max_iter" in obj:
            opts.max_newton = int(obj["max_iter"])
        if "max_outer" in obj:
            opts.max_outer = int(obj["max_outer"])
        if "seed" in obj:
            opts.seed = int(obj["seed"])
        if "starts" in obj:
            opts.starts = int(obj["starts"])
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"solver: {exc}") from None
    if opts.tol <= 0 or opts.max_newton < 1 or opts.max_outer < 1 or opts.starts < 1 or opts.seed < 0:
        raise ProblemFormatError("solver settings must be positive")
    return opts


@dataclass
class ProblemFile:
    problem: Optional[Problem]
    behavior: Optional[dict]
    options: SolverOptions
    hbar: float


def parse_problem(obj, overrides: Optional[dict] = None) -> ProblemFile:
    if not isinstance(obj, dict):
        raise ProblemFormatError("problem file must hold a JSON object")
    opts = parse_options(obj.get("solver"), overrides)
    hbar = _number(obj.get("hbar", 1.0), "hbar")
    if "behavior" in obj:
        beh = obj["behavior"]
        if not isinstance(beh, dict) or "chsh_target" not in beh:
            raise ProblemFormatError("behavior problems need 'chsh_target'")
        _number(beh["chsh_target"], "behavior.chsh_target")
        return ProblemFile(None, beh, opts, hbar)
    space = parse_space(obj.get("space"))
    group = parse_group(obj.get("group"), space)
    cons_raw = obj.get("constraints", [])
    if not isinstance(cons_raw, list):
        raise ProblemFormatError("constraints must be a list")
    cons = [parse_constraint(c, space, k) for k, c in enumerate(cons_raw)]
    try:
        prob = Problem(space, group, cons, obj.get("entropy", "auto"), opts)
    except (MaxEntError, ValueError) as exc:
        raise ProblemFormatError(str(exc)) from None
    return ProblemFile(prob, None, opts, hbar)


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ProblemFormatError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# states and solutions
# ---------------------------------------------------------------------------

def state_payload(state: State) -> dict:
    data = complex_to_pairs(state.data) if state.space.is_quantum else state.data
    return {"space": {"kind": state.space.kind, "size": state.space.size}, "state": data}


def parse_state(obj) -> State:
    if not isinstance(obj, dict) or "state" not in obj:
        raise ProblemFormatError("state file needs 'space' and 'state'")
    space = parse_space(obj.get("space"))
    data = parse_observable(obj["state"], space, "state")
    rep = validate_state(data, space.kind)
    if not rep.ok:
        raise ProblemFormatError(f"state fails validation: {rep.violations}")
    return State(space, data)


def solution_payload(sol: Solution, space: EventSpace) -> dict:
    out = {"status": sol.status}
    if sol.state is not None:
        out.update(state_payload(sol.state))
    else:
        out.update({"space": {"kind": space.kind, "size": space.size}, "state": None})
    out["entropy_value"] = sol.entropy_value
    out["multipliers"] = sol.multipliers
    out["residuals"] = sol.residuals
    out["diagnostics"] = sol.diagnostics
    return out


def check_solution(solution_obj, problem: Problem, tol: float = 1e-8) -> dict:
    """Reload a solution payload, re-validate the state and recompute residuals."""
    state = parse_state(solution_obj)
    fresh = np.array([c.residual(state) for c in problem.constraints])
    stored = np.array([np.nan if v is None else v for v in solution_obj.get("residuals", [])], dtype=float)
    ok = bool(validate_state(state).ok)
    if solution_obj.get("status") == "optimal":
        ok = ok and bool(np.all(np.abs(fresh) <= tol))
    return {"ok": ok, "residuals": fresh, "stored_residuals": stored}
