"""Command-line front end: ``symmaxent {solve,twirl,entropy,polytope,coherent}``.

Exit codes: 0 success, 2 infeasible, 3 numerical failure (max_iter or
degenerate), 4 bad input.
"""
import argparse
import sys

from . import coherent, polytope, schema
from .entropy import entropy_of
from .errors import (BadDimension, BadSpin, Infeasible, MaxEntError, MaxIterations, ProblemFormatError,
                     QuadratureTooCoarse, SpaceMismatch, TruncationTooSmall)
from .maxent import DEGENERATE, OPTIMAL, solve
from .symmetry import twirl

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_NUMERICAL = 3
EXIT_BAD_INPUT = 4

STATUS_EXIT = {OPTIMAL: EXIT_OK, "infeasible": EXIT_INFEASIBLE, "max_iter": EXIT_NUMERICAL,
               DEGENERATE: EXIT_NUMERICAL}


def _emit(payload, out):
    text = schema.dumps(payload)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _overrides(args) -> dict:
    return {"tol": args.tol, "seed": args.seed, "max_iter": args.max_iter, "starts": args.starts}


def _solve_behavior(pf: schema.ProblemFile):
    target = float(pf.behavior["chsh_target"])
    try:
        res = polytope.maxent_behavior(target, options=pf.options)
        sol = res.solution
        payload = schema.solution_payload(sol, polytope.behavior_space())
        payload["behavior"] = res.behavior.flat()
        payload["chsh_values"] = polytope.chsh_values(res.behavior)
        return payload, sol.status
    except (Infeasible, MaxIterations) as exc:
        status = "infeasible" if isinstance(exc, Infeasible) else "max_iter"
        sol = exc.solution
        payload = schema.solution_payload(sol, polytope.behavior_space()) if sol is not None else \
            {"status": status, "state": None}
        payload["status"] = status
        payload["message"] = str(exc)
        return payload, status


def cmd_solve(args) -> int:
    pf = schema.parse_problem(schema.load_json(args.problem), _overrides(args))
    if pf.behavior is not None:
        payload, status = _solve_behavior(pf)
    else:
        try:
            sol = solve(pf.problem)
            status = sol.status
            payload = schema.solution_payload(sol, pf.problem.space)
        except (Infeasible, MaxIterations) as exc:
            status = "infeasible" if isinstance(exc, Infeasible) else "max_iter"
            if exc.solution is not None:
                payload = schema.solution_payload(exc.solution, pf.problem.space)
            else:
                payload = {"status": status, "state": None}
            payload["status"] = status
            payload["message"] = str(exc)
            if exc.certificate is not None:
                payload["certificate"] = exc.certificate
            print(f"{status}: {exc}", file=sys.stderr)
    if status == DEGENERATE:
        payload.setdefault("diagnostics", {})["degenerate"] = True
        print("degenerate: several starts reach the same entropy at distinct states", file=sys.stderr)
    _emit(payload, args.out)
    return STATUS_EXIT[status]


def cmd_twirl(args) -> int:
    state = schema.parse_state(schema.load_json(args.state))
    gobj = schema.load_json(args.group)
    if isinstance(gobj, dict) and "group" in gobj:
        gobj = gobj["group"]
    spec = schema.parse_group(gobj, state.space)
    _emit(schema.state_payload(twirl(state, spec)), args.out)
    return EXIT_OK


def cmd_entropy(args) -> int:
    state = schema.parse_state(schema.load_json(args.state))
    value = entropy_of(state, args.kind)
    if args.out:
        _emit({"kind": args.kind, "entropy": value}, args.out)
    else:
        print(schema.format_float(value))
    return EXIT_OK


def _load_behavior(path) -> polytope.Behavior:
    obj = schema.load_json(path)
    if isinstance(obj, dict):
        obj = obj.get("behavior")
    values = schema.real_vector(obj, 16, "behavior")
    try:
        return polytope.Behavior.from_flat(values)
    except MaxEntError as exc:
        raise ProblemFormatError(f"behavior: {exc}") from None


def cmd_polytope(args) -> int:
    b = _load_behavior(args.behavior)
    payload = {"chsh_values": polytope.chsh_values(b), "nosignal_residual": polytope.nosignal_residual(b)}
    if args.membership:
        m = polytope.membership(b, args.membership)
        payload["membership"] = {"polytope": args.membership, "inside": m.inside, "witness": m.witness}
        print("inside" if m.inside else "outside")
    else:
        print(" ".join(schema.format_float(float(v)) for v in payload["chsh_values"]))
    if args.out:
        _emit(payload, args.out)
    return EXIT_OK


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise ProblemFormatError(f"cannot parse complex number {text!r}") from None


def cmd_coherent(args) -> int:
    if args.su2 is not None:
        fam = coherent.su2_family(args.su2, args.order)
        payload = {"j": fam.j, "order": fam.order, "reference": schema.complex_to_pairs(fam.reference),
                   "directions": fam.directions, "weights": fam.weights,
                   "kets": schema.complex_to_pairs(fam.kets.T),
                   "resolution_residual": coherent.resolution_of_identity(fam)}
        _emit(payload, args.out)
        return EXIT_OK
    ops = coherent.build_oscillator(args.dim, args.hbar)
    if args.alpha is not None:
        state = coherent.coherent_state_vector(_parse_complex(args.alpha), ops)
        payload = schema.state_payload(state)
        payload["saturation_residuals"] = list(coherent.saturation_residual(state, ops))
        _emit(payload, args.out)
        return EXIT_OK
    q0, p0 = args.saturate
    opts = schema.parse_options({}, _overrides(args))
    try:
        sol = coherent.solve_saturated(ops, q0, p0, opts)
    except (Infeasible, MaxIterations) as exc:
        status = "infeasible" if isinstance(exc, Infeasible) else "max_iter"
        print(f"{status}: {exc}", file=sys.stderr)
        payload = {"status": status, "message": str(exc)}
        if exc.solution is not None:
            payload = schema.solution_payload(exc.solution, ops.space)
            payload["status"] = status
        _emit(payload, args.out)
        return STATUS_EXIT[status]
    payload = schema.solution_payload(sol, ops.space)
    payload["saturation_residuals"] = list(coherent.saturation_residual(sol.state, ops))
    _emit(payload, args.out)
    return STATUS_EXIT[sol.status]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="constraint tolerance")
    common.add_argument("--seed", type=int, default=None, help="multi-start seed")
    common.add_argument("--max-iter", dest="max_iter", type=int, default=None, help="Newton iteration cap")
    common.add_argument("--starts", type=int, default=None, help="number of multi-start points")
    common.add_argument("--out", default=None, help="output file (default: stdout)")

    parser = argparse.ArgumentParser(prog="symmaxent",
                                     description="Maximum-entropy states under symmetry and constraints.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="solve a problem file")
    p.add_argument("problem")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("twirl", parents=[common], help="average a state over a group")
    p.add_argument("state")
    p.add_argument("group")
    p.set_defaults(func=cmd_twirl)

    p = sub.add_parser("entropy", parents=[common], help="entropy of a state file")
    p.add_argument("state")
    p.add_argument("--kind", default="auto", choices=["auto", "measurement", "shannon", "von_neumann"])
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("polytope", parents=[common], help="CHSH values and polytope membership")
    p.add_argument("behavior")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--membership", choices=[polytope.LOCAL, polytope.NOSIGNAL])
    g.add_argument("--chsh", action="store_true", help="print the 8 CHSH values (default)")
    p.set_defaults(func=cmd_polytope)

    p = sub.add_parser("coherent", parents=[common], help="coherent states")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--alpha", help="complex amplitude, e.g. 1+0i")
    g.add_argument("--saturate", nargs=2, type=float, metavar=("Q0", "P0"))
    g.add_argument("--su2", type=float, metavar="J")
    p.add_argument("--dim", type=int, default=40, help="Fock truncation")
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--order", type=int, default=None, help="sphere quadrature order for --su2")
    p.set_defaults(func=cmd_coherent)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_BAD_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ProblemFormatError, SpaceMismatch, BadDimension, BadSpin, TruncationTooSmall,
            QuadratureTooCoarse) as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except MaxEntError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
