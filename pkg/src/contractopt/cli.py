"""Command-line front end with exact-rational JSON documents.

Every number in every document is a string like "3/4" or "7"; JSON numeric
literals are rejected outright so no value ever passes through a float.
Documents are emitted with sorted keys and a fixed indent, making runs
byte-for-byte reproducible.  Exit codes: 1 for invalid input, 2 for an
enumeration that would exceed the LP budget, 3 for a failed internal
guarantee or diagnostic.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from contractopt.agent import verify_ic
from contractopt.core import (
    Contract,
    Menu,
    MultiParamInstance,
    RandomizedMenu,
    SingleParamInstance,
    SolveReport,
    validate,
)
from contractopt.errors import (
    BudgetExceededError,
    TheoryViolationError,
    ValidationError,
)
from contractopt.gap import build_gap_instance, build_gap_menu
from contractopt.lifting import (
    BackwardReport,
    LiftTrace,
    backward_diagnostics,
    exact_recover,
    lift_backward,
    lift_forward,
)
from contractopt.rational import decimal_str, format_rational, is_perfect_square, parse_rational
from contractopt.reduction import ReductionMap, reduce_instance
from contractopt.solvers import (
    solve_optimal_menu,
    solve_optimal_single,
    solve_randomized_menu,
)
from contractopt.unrestricted import solve_unrestricted


def _reject_number(literal: str):
    raise ValidationError(
        (f'JSON numbers are not allowed; write "{literal}" as a rational string',)
    )


def _load_doc(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError((f"cannot read {path}: {exc}",))
    try:
        doc = json.loads(
            text,
            parse_int=_reject_number,
            parse_float=_reject_number,
            parse_constant=_reject_number,
        )
    except json.JSONDecodeError as exc:
        raise ValidationError((f"{path} is not valid JSON: {exc}",))
    if not isinstance(doc, dict):
        raise ValidationError((f"{path}: top-level value must be an object",))
    return doc


def _write_doc(path: str, doc: dict) -> None:
    Path(path).write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _rat(doc, key: str) -> Fraction:
    try:
        return parse_rational(doc[key])
    except KeyError:
        raise ValidationError((f"missing field {key!r}",))
    except ValueError as exc:
        raise ValidationError((f"field {key!r}: {exc}",))


def _rat_list(values, where: str) -> tuple[Fraction, ...]:
    if not isinstance(values, list):
        raise ValidationError((f"{where}: expected a list",))
    try:
        return tuple(parse_rational(v) for v in values)
    except ValueError as exc:
        raise ValidationError((f"{where}: {exc}",))


def _index_list(values, where: str) -> tuple[int, ...]:
    out = []
    for v in values:
        f = parse_rational(v) if isinstance(v, str) else None
        if f is None or f.denominator != 1:
            raise ValidationError((f"{where}: {v!r} is not an integer literal",))
        out.append(f.numerator)
    return tuple(out)


def _fmt_list(values) -> list[str]:
    return [format_rational(v) for v in values]


def parse_instance(doc: dict):
    kind = doc.get("kind")
    if kind == "multi":
        return MultiParamInstance(
            rewards=_rat_list(doc.get("rewards"), "rewards"),
            type_labels=doc.get("type_labels", ()),
            transitions=tuple(
                tuple(_rat_list(row, f"transitions[{k}][{i}]") for i, row in enumerate(mat))
                for k, mat in enumerate(doc.get("transitions", ()))
            ),
            costs=tuple(
                _rat_list(row, f"costs[{k}]") for k, row in enumerate(doc.get("costs", ()))
            ),
            prior=_rat_list(doc.get("prior"), "prior"),
        )
    if kind == "single":
        return SingleParamInstance(
            rewards=_rat_list(doc.get("rewards"), "rewards"),
            transitions=tuple(
                _rat_list(row, f"transitions[{i}]")
                for i, row in enumerate(doc.get("transitions", ()))
            ),
            unit_costs=_rat_list(doc.get("unit_costs"), "unit_costs"),
            types=_rat_list(doc.get("types"), "types"),
            prior=_rat_list(doc.get("prior"), "prior"),
        )
    raise ValidationError((f'instance "kind" must be "multi" or "single", got {kind!r}',))


def instance_doc(instance) -> dict:
    if isinstance(instance, MultiParamInstance):
        return {
            "kind": "multi",
            "rewards": _fmt_list(instance.rewards),
            "type_labels": list(instance.type_labels),
            "transitions": [[_fmt_list(row) for row in mat] for mat in instance.transitions],
            "costs": [_fmt_list(row) for row in instance.costs],
            "prior": _fmt_list(instance.prior),
        }
    return {
        "kind": "single",
        "rewards": _fmt_list(instance.rewards),
        "transitions": [_fmt_list(row) for row in instance.transitions],
        "unit_costs": _fmt_list(instance.unit_costs),
        "types": _fmt_list(instance.types),
        "prior": _fmt_list(instance.prior),
    }


def parse_menu(doc: dict) -> Menu:
    if doc.get("kind") != "menu":
        raise ValidationError(('menu document must have "kind": "menu"',))
    contracts = [
        Contract(_rat_list(row, f"contracts[{k}]"))
        for k, row in enumerate(doc.get("contracts", ()))
    ]
    return Menu(contracts, _index_list(doc.get("actions", ()), "actions"))


def menu_doc(menu: Menu) -> dict:
    return {
        "kind": "menu",
        "contracts": [_fmt_list(c.payments) for c in menu.contracts],
        "actions": [str(a) for a in menu.actions],
    }


def randomized_doc(rmenu: RandomizedMenu) -> dict:
    return {
        "kind": "randomized-menu",
        "weights": [_fmt_list(row) for row in rmenu.weights],
        "payments": [[_fmt_list(p) for p in row] for row in rmenu.payments],
    }


def certificate_doc(certificate) -> dict:
    def violation(v):
        return {
            "type": str(v.type_index),
            "reported_type": str(v.reported_type_index),
            "action": None if v.action is None else str(v.action),
            "deficit": format_rational(v.deficit),
        }

    return {
        "eta": format_rational(certificate.eta),
        "passed": certificate.passed,
        "constraints_checked": str(certificate.constraints_checked),
        "misreport_constraints_checked": str(certificate.misreport_constraints_checked),
        "ir_checked": certificate.ir_checked,
        "constant_menu": certificate.constant_menu,
        "tie_break": certificate.tie_break,
        "violations": [violation(v) for v in certificate.violations],
        "ir_violations": [
            {"type": str(k), "deficit": format_rational(d)}
            for k, d in certificate.ir_violations
        ],
    }


def report_doc(report: SolveReport) -> dict:
    solution = report.solution
    return {
        "kind": "report",
        "objective": format_rational(report.objective),
        "objective_decimal": decimal_str(report.objective),
        "solution": (
            menu_doc(solution) if isinstance(solution, Menu) else randomized_doc(solution)
        ),
        "agent_utilities": _fmt_list(report.agent_utilities),
        "principal_utilities": _fmt_list(report.principal_utilities),
        "profile": None if report.profile is None else [str(a) for a in report.profile],
        "certificate": None if report.certificate is None else certificate_doc(report.certificate),
        "notes": list(report.notes),
    }


def reduction_doc(rmap: ReductionMap) -> dict:
    return {
        "kind": "reduction",
        "epsilon": format_rational(rmap.params.epsilon),
        "source": instance_doc(rmap.source),
        "reduced": instance_doc(rmap.reduced),
        "params": {
            "l": str(rmap.params.l),
            "alpha": format_rational(rmap.params.alpha),
            "H": format_rational(rmap.params.H),
            "mu_min": format_rational(rmap.params.mu_min),
        },
        "dummy_action": str(rmap.dummy_action),
        "dummy_outcome": str(rmap.dummy_outcome),
        "aux_type_index": str(rmap.aux_type_index),
    }


def parse_reduction(doc: dict) -> ReductionMap:
    if doc.get("kind") != "reduction":
        raise ValidationError(('reduction document must have "kind": "reduction"',))
    source = parse_instance(doc.get("source", {}))
    if not isinstance(source, MultiParamInstance):
        raise ValidationError(("reduction source must be a multi-parameter instance",))
    epsilon = _rat(doc, "epsilon")
    rmap = reduce_instance(source, epsilon)
    stored = parse_instance(doc.get("reduced", {}))
    if stored != rmap.reduced:
        raise ValidationError(
            ("stored reduced instance does not match the rebuilt one; document edited?",)
        )
    return rmap


def trace_doc(trace: LiftTrace) -> dict:
    def opt_menu(menu):
        return None if menu is None else menu_doc(menu)

    return {
        "kind": "lift-trace",
        "case": trace.case,
        "epsilon": format_rational(trace.epsilon),
        "eta": format_rational(trace.eta),
        "gamma": format_rational(trace.gamma),
        "delta": format_rational(trace.delta),
        "sqrt_eps_upper": format_rational(trace.sqrt_eps_upper),
        "sqrt_eps_excess": format_rational(trace.sqrt_eps_excess),
        "nu_upper": format_rational(trace.nu_upper),
        "theta_hat": [str(k) for k in trace.theta_hat],
        "theta_hat_1": [str(k) for k in trace.theta_hat_1],
        "theta_hat_2": [str(k) for k in trace.theta_hat_2],
        "reassigned_contracts": [[str(k), str(t)] for k, t in trace.reassigned_contracts],
        "p_breve": opt_menu(trace.p_breve),
        "p_breve_star": opt_menu(trace.p_breve_star),
        "p_hat_star": opt_menu(trace.p_hat_star),
        "u_single": format_rational(trace.u_single),
        "u_multi": format_rational(trace.u_multi),
        "notes": list(trace.notes),
    }


def diagnostics_doc(report: BackwardReport) -> dict:
    return {
        "kind": "backward-report",
        "vacuous": report.vacuous,
        "reason": report.reason,
        "predicates": [
            {
                "name": p.name,
                "passed": p.passed,
                "slack": format_rational(p.slack),
                "witness": p.witness,
            }
            for p in report.predicates
        ],
    }


def _print_objective(value: Fraction) -> None:
    print(f"objective = {format_rational(value)} ({decimal_str(value)})")


def _emit_report(report: SolveReport, out: str | None) -> None:
    _print_objective(report.objective)
    if report.profile is not None:
        print("profile = " + " ".join(str(a) for a in report.profile))
    for note in report.notes:
        print("note: " + note)
    if out:
        _write_doc(out, report_doc(report))


def cmd_validate(args) -> int:
    instance = parse_instance(_load_doc(args.instance))
    issues = validate(instance)
    if issues:
        for issue in issues:
            print(issue, file=sys.stderr)
        return 1
    print("instance is well-formed")
    return 0


def cmd_solve_menu(args) -> int:
    instance = parse_instance(_load_doc(args.instance))
    report = solve_optimal_menu(
        instance,
        limited_liability=args.limited_liability,
        budget=args.budget,
        workers=args.workers,
    )
    _emit_report(report, args.out)
    return 0


def cmd_solve_single(args) -> int:
    instance = parse_instance(_load_doc(args.instance))
    report = solve_optimal_single(
        instance,
        limited_liability=args.limited_liability,
        budget=args.budget,
        workers=args.workers,
    )
    _emit_report(report, args.out)
    return 0


def _require_single(instance, label: str) -> SingleParamInstance:
    if not isinstance(instance, SingleParamInstance):
        raise ValidationError((f"{label} requires a single-parameter instance",))
    return instance


def cmd_solve_randomized(args) -> int:
    instance = _require_single(parse_instance(_load_doc(args.instance)), "solve-randomized")
    report = solve_randomized_menu(instance, limited_liability=args.limited_liability)
    _emit_report(report, args.out)
    return 0


def cmd_solve_unrestricted(args) -> int:
    instance = _require_single(parse_instance(_load_doc(args.instance)), "solve-unrestricted")
    report = solve_unrestricted(
        instance,
        weight_by_mass=not args.pool_by_index,
        compare_randomized=args.compare_randomized,
    )
    _emit_report(report, args.out)
    return 0


def cmd_reduce(args) -> int:
    instance = parse_instance(_load_doc(args.instance))
    if not isinstance(instance, MultiParamInstance):
        raise ValidationError(("reduce requires a multi-parameter instance",))
    epsilon = parse_rational(args.epsilon)
    if args.require_square and not is_perfect_square(epsilon):
        raise ValidationError(
            (
                f"epsilon {args.epsilon} is not a perfect rational square; "
                "pass --no-require-square to use it anyway",
            )
        )
    rmap = reduce_instance(instance, epsilon)
    reduced = rmap.reduced
    print(
        f"reduced instance: {reduced.num_actions} actions, "
        f"{reduced.num_outcomes} outcomes, {reduced.num_types} types"
    )
    print(f"l = {rmap.params.l}, alpha = {format_rational(rmap.params.alpha)}")
    if args.out:
        _write_doc(args.out, reduction_doc(rmap))
    return 0


def _finish_lift(menu: Menu, trace: LiftTrace, args) -> int:
    print(f"case = {trace.case}")
    print(
        f"image value = {format_rational(trace.u_single)} ({decimal_str(trace.u_single)})"
    )
    print(
        f"source value = {format_rational(trace.u_multi)} ({decimal_str(trace.u_multi)})"
    )
    if args.out:
        _write_doc(args.out, menu_doc(menu))
    if args.trace:
        _write_doc(args.trace, trace_doc(trace))
    return 0


def cmd_lift_forward(args) -> int:
    rmap = parse_reduction(_load_doc(args.map))
    menu = parse_menu(_load_doc(args.menu))
    lifted, trace = lift_forward(menu, rmap)
    return _finish_lift(lifted, trace, args)


def cmd_lift_backward(args) -> int:
    rmap = parse_reduction(_load_doc(args.map))
    menu = parse_menu(_load_doc(args.menu))
    lifted, trace = lift_backward(menu, rmap)
    return _finish_lift(lifted, trace, args)


def cmd_exact_recover(args) -> int:
    rmap = parse_reduction(_load_doc(args.map))
    menu = parse_menu(_load_doc(args.menu))
    report = exact_recover(rmap.source, menu, rmap)
    _emit_report(report, args.out)
    return 0


def cmd_gap_instance(args) -> int:
    instance, spec = build_gap_instance(args.n, pad_even=args.pad_even)
    menu = build_gap_menu(args.n, pad_even=args.pad_even)
    print(f"normalizer C = {format_rational(spec.normalizer)}")
    print(
        f"certified menu value = {format_rational(spec.menu_value)} "
        f"({decimal_str(spec.menu_value)})"
    )
    print(
        f"single-contract bound 3/C = {format_rational(spec.single_value_bound)} "
        f"({decimal_str(spec.single_value_bound)})"
    )
    if args.out:
        _write_doc(args.out, instance_doc(instance))
    if args.menu_out:
        _write_doc(args.menu_out, menu_doc(menu))
    return 0


def cmd_verify_ic(args) -> int:
    instance = parse_instance(_load_doc(args.instance))
    menu = parse_menu(_load_doc(args.menu))
    eta = parse_rational(args.eta)
    certificate = verify_ic(instance, menu, eta)
    if certificate.passed:
        print(
            f"incentive compatible at slack {format_rational(eta)} "
            f"({certificate.constraints_checked} constraints)"
        )
        return 0
    for v in certificate.violations:
        action = "opt-out" if v.action is None else str(v.action)
        print(
            f"violated: type {v.type_index} reports {v.reported_type_index} "
            f"action {action}, gains {format_rational(v.deficit)}",
            file=sys.stderr,
        )
    return 1


def cmd_diagnose_backward(args) -> int:
    rmap = parse_reduction(_load_doc(args.map))
    menu = parse_menu(_load_doc(args.menu))
    report = backward_diagnostics(menu, rmap)
    if args.out:
        _write_doc(args.out, diagnostics_doc(report))
    if report.vacuous:
        print(f"vacuous: {report.reason}")
        return 0
    failed = False
    for p in report.predicates:
        mark = "pass" if p.passed else "FAIL"
        print(f"{mark} {p.name} (slack {format_rational(p.slack)}): {p.witness}")
        failed = failed or not p.passed
    return 3 if failed else 0


def _add_solver_flags(parser) -> None:
    parser.add_argument("--budget", type=int, default=None, help="profile LP cap")
    parser.add_argument("--workers", type=int, default=1, help="parallel LP workers")
    parser.add_argument(
        "--limited-liability",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="require non-negative payments",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contractopt",
        description="Exact solvers and transformations for contract design instances.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an instance document")
    p.add_argument("instance")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("solve-menu", help="optimal deterministic menu")
    p.add_argument("instance")
    _add_solver_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_solve_menu)

    p = sub.add_parser("solve-single", help="optimal single contract")
    p.add_argument("instance")
    _add_solver_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_solve_single)

    p = sub.add_parser("solve-randomized", help="optimal randomized menu")
    p.add_argument("instance")
    p.add_argument(
        "--limited-liability",
        action=argparse.BooleanOptionalAction,
        default=True,
    )
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_solve_randomized)

    p = sub.add_parser(
        "solve-unrestricted", help="optimal single contract without liability"
    )
    p.add_argument("instance")
    p.add_argument("--pool-by-index", action="store_true")
    p.add_argument(
        "--compare-randomized",
        action=argparse.BooleanOptionalAction,
        default=True,
    )
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_solve_unrestricted)

    p = sub.add_parser("reduce", help="embed into a single-parameter instance")
    p.add_argument("instance")
    p.add_argument("--epsilon", required=True, help='precision, e.g. "1/400"')
    p.add_argument(
        "--require-square",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="insist epsilon is a perfect rational square",
    )
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_reduce)

    p = sub.add_parser("lift-forward", help="carry a source menu into the image")
    p.add_argument("map", help="reduction document")
    p.add_argument("menu")
    p.add_argument("--out", default=None)
    p.add_argument("--trace", default=None)
    p.set_defaults(handler=cmd_lift_forward)

    p = sub.add_parser("lift-backward", help="pull an image menu back to the source")
    p.add_argument("map", help="reduction document")
    p.add_argument("menu")
    p.add_argument("--out", default=None)
    p.add_argument("--trace", default=None)
    p.set_defaults(handler=cmd_lift_backward)

    p = sub.add_parser("exact-recover", help="recover a source optimum from the image")
    p.add_argument("map", help="reduction document")
    p.add_argument("menu")
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_exact_recover)

    p = sub.add_parser("gap-instance", help="menu-vs-single separation family")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--pad-even", action="store_true")
    p.add_argument("--out", default=None)
    p.add_argument("--menu-out", default=None)
    p.set_defaults(handler=cmd_gap_instance)

    p = sub.add_parser("verify-ic", help="check a menu's incentive constraints")
    p.add_argument("instance")
    p.add_argument("menu")
    p.add_argument("--eta", default="0", help="allowed slack")
    p.set_defaults(handler=cmd_verify_ic)

    p = sub.add_parser(
        "diagnose-backward", help="audit the backward-lift structural bounds"
    )
    p.add_argument("map", help="reduction document")
    p.add_argument("menu")
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_diagnose_backward)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ValidationError as exc:
        for line in exc.violations:
            print(line, file=sys.stderr)
        return 1
    except BudgetExceededError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except TheoryViolationError as exc:
        print(str(exc), file=sys.stderr)
        return 3
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
