"""Transports menus across the single-parameter embedding, both ways.

Forward: shift an incentive-compatible source menu by a small constant and
place it block by block into the image, or fall back to the zero menu when
some expected payment is too large to be worth carrying over.  Backward: a
staged pipeline that strips dummy payments, pulls every type back into its
own action block, neutralizes types that would hurt the principal, and
finishes with a blend-based repair restoring exact incentive compatibility.
Every inequality the theory promises is re-checked exactly and a violation
raises rather than returning a silently wrong menu.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from contractopt.agent import best_menu_choice, best_response, verify_ic
from contractopt.core import (
    Contract,
    Menu,
    MultiParamInstance,
    SingleParamInstance,
    SolveReport,
    principal_type_utility,
    principal_utility,
)
from contractopt.errors import TheoryViolationError, ValidationError
from contractopt.rational import exact_sqrt, is_perfect_square, pow2, sqrt_upper_bound
from contractopt.reduction import ReductionMap
from contractopt.solvers import (
    build_report,
    require_valid,
    solve_menu_for_profile,
    solve_single_for_profile,
)

ZERO = Fraction(0)
ONE = Fraction(1)

FORWARD_BLOWUP = "forward-zero-menu"
FORWARD_SHIFT = "forward-payment-shift"
BACKWARD_NEGATIVE = "backward-zero-menu"
BACKWARD_PIPELINE = "backward-pipeline"


@dataclass(frozen=True)
class LiftTrace:
    """Audit record of one lift: which branch ran and every intermediate."""

    case: str
    epsilon: Fraction
    eta: Fraction  # dummy-payment ceiling, alpha / (1 - alpha)
    gamma: Fraction  # cross-block utility ceiling, 2^-l
    delta: Fraction  # residual slack handed to the repair, 3 epsilon
    sqrt_eps_upper: Fraction  # exact root when epsilon is a perfect square
    sqrt_eps_excess: Fraction  # sqrt_eps_upper^2 - epsilon, zero when exact
    nu_upper: Fraction  # 13 epsilon / 4 + 4 sqrt_eps_upper
    theta_hat: tuple[int, ...]
    theta_hat_1: tuple[int, ...]
    theta_hat_2: tuple[int, ...]
    reassigned_contracts: tuple[tuple[int, int], ...]  # (type, contract it took)
    p_breve: Menu | None
    p_breve_star: Menu | None
    p_hat_star: Menu | None
    u_single: Fraction
    u_multi: Fraction
    notes: tuple[str, ...]


def _sqrt_upper(value: Fraction) -> tuple[Fraction, Fraction]:
    """Exact square root when possible, else a certified rational cover."""
    if is_perfect_square(value):
        root = exact_sqrt(value)
    else:
        root = sqrt_upper_bound(value)
    return root, root * root - value


def _constants(rmap: ReductionMap) -> tuple[Fraction, Fraction, Fraction]:
    params = rmap.params
    eta = params.alpha / (ONE - params.alpha)
    gamma = pow2(-params.l)
    delta = 3 * params.epsilon
    return eta, gamma, delta


def _reject_not_ic(certificate, label: str) -> None:
    if certificate.passed:
        return
    lines = [f"{label} is not incentive compatible"]
    for v in certificate.violations[:8]:
        action = "opt-out" if v.action is None else f"action {v.action}"
        lines.append(
            f"type {v.type_index} gains {v.deficit} via report "
            f"{v.reported_type_index}, {action}"
        )
    raise ValidationError(tuple(lines))


def lift_forward(menu: Menu, rmap: ReductionMap) -> tuple[Menu, LiftTrace]:
    """Carry an IC, limited-liability source menu into the image instance.

    Normal branch: every payment gains 2 epsilon on real outcomes, nothing
    on the dummy one, and each type is pointed at its own block's copy of
    its old action; the extra type gets the zero contract (or the shared
    shifted contract when the input is a single contract, preserving
    single-contract form).  Fallback branch: when some cross pair's
    expected payment exceeds 2 / mu_min the source menu earns the
    principal a negative value, so the all-zero menu is returned instead.
    The image's value is checked to be at least H (value - 2 epsilon)
    either way.
    """
    source = rmap.source
    reduced = rmap.reduced
    require_valid(source)
    if menu.num_types != source.num_types:
        raise ValueError("menu and source instance disagree on the number of types")
    if not menu.limited_liability:
        raise ValidationError(("forward lift requires non-negative payments",))
    _reject_not_ic(verify_ic(source, menu, 0), "input menu")

    params = rmap.params
    eta, gamma, delta = _constants(rmap)
    sqrt_eps, sqrt_excess = _sqrt_upper(params.epsilon)
    nu_upper = Fraction(13, 4) * params.epsilon + 4 * sqrt_eps
    K = source.num_types
    n = source.num_actions
    m = source.num_outcomes
    u_multi = principal_utility(source, menu)
    floor = params.H * (u_multi - 2 * params.epsilon)

    threshold = 2 / params.mu_min
    blown = None
    for k in range(K):
        for rep in range(K):
            contract = menu.contracts[rep]
            for i in range(n):
                paid = contract.expected_payment(source.transition_row(k, i))
                if paid > threshold:
                    blown = (k, rep, i, paid)
                    break
            if blown:
                break
        if blown:
            break

    if blown:
        zero = Contract((ZERO,) * (m + 1))
        lifted = Menu([zero] * (K + 1), [rmap.dummy_action] * (K + 1))
        u_single = principal_utility(reduced, lifted)
        notes = (
            f"type {blown[0]} action {blown[2]} under contract {blown[1]} "
            f"pays {blown[3]} > {threshold}",
        )
        case = FORWARD_BLOWUP
    else:
        shift = 2 * params.epsilon
        contracts = []
        actions = []
        for k in range(K):
            payments = tuple(p + shift for p in menu.contracts[k].payments) + (ZERO,)
            contracts.append(Contract(payments))
            actions.append(rmap.action_row(k, menu.actions[k]))
        if menu.is_constant:
            contracts.append(contracts[0])
        else:
            contracts.append(Contract((ZERO,) * (m + 1)))
        actions.append(rmap.dummy_action)
        lifted = Menu(contracts, actions)
        certificate = verify_ic(reduced, lifted, 0)
        if not certificate.passed:
            worst = max(v.deficit for v in certificate.violations)
            raise TheoryViolationError(
                f"shifted menu fails incentive compatibility by {worst}"
            )
        u_single = principal_utility(reduced, lifted)
        notes = ()
        case = FORWARD_SHIFT

    if u_single < floor:
        raise TheoryViolationError(
            f"lifted value {u_single} below the guaranteed floor {floor}"
        )
    trace = LiftTrace(
        case=case,
        epsilon=params.epsilon,
        eta=eta,
        gamma=gamma,
        delta=delta,
        sqrt_eps_upper=sqrt_eps,
        sqrt_eps_excess=sqrt_excess,
        nu_upper=nu_upper,
        theta_hat=(),
        theta_hat_1=(),
        theta_hat_2=(),
        reassigned_contracts=(),
        p_breve=None,
        p_breve_star=None,
        p_hat_star=None,
        u_single=u_single,
        u_multi=u_multi,
        notes=notes,
    )
    return lifted, trace


def _canonical_image_actions(menu_bar: Menu, rmap: ReductionMap) -> list[int]:
    reduced = rmap.reduced
    return [
        best_response(reduced, t, menu_bar.contracts[t]).action
        for t in range(reduced.num_types)
    ]


def ic_repair(
    instance: MultiParamInstance,
    menu: Menu,
    delta: Fraction,
    blend_weight: Fraction | None = None,
) -> Menu:
    """Convert a delta-IC limited-liability menu into an exactly IC one.

    Blends every contract with the reward vector at weight s (by default
    the exact or covering rational root of delta), then hands each type its
    favorite blended contract with its canonical action.  s must satisfy
    s^2 >= delta and s <= 1; the measured principal loss is checked against
    s + delta / s.  delta = 0 with the default weight verifies and returns
    the input untouched.
    """
    require_valid(instance)
    if delta < 0:
        raise ValueError(f"slack must be non-negative, got {delta}")
    if not menu.limited_liability:
        raise ValidationError(("repair requires non-negative payments",))
    if menu.num_types != instance.num_types:
        raise ValueError("menu and instance disagree on the number of types")
    _reject_not_ic(verify_ic(instance, menu, delta), f"input menu at slack {delta}")

    if delta == 0 and blend_weight is None:
        return menu

    if blend_weight is None:
        s = exact_sqrt(delta) if is_perfect_square(delta) else sqrt_upper_bound(delta)
    else:
        s = Fraction(blend_weight)
    if not 0 < s <= 1:
        raise ValueError(f"blend weight must lie in (0, 1], got {s}")
    if s * s < delta:
        raise ValueError(f"blend weight {s} squared must cover the slack {delta}")

    blended = [
        Contract(tuple((ONE - s) * p + s * r for p, r in zip(c.payments, instance.rewards)))
        for c in menu.contracts
    ]
    scratch = Menu(blended, menu.actions)
    contracts = []
    actions = []
    for k in range(instance.num_types):
        index, br = best_menu_choice(instance, k, scratch)
        contracts.append(blended[index])
        actions.append(br.action)
    repaired = Menu(contracts, actions)

    certificate = verify_ic(instance, repaired, 0)
    if not certificate.passed:
        worst = max(v.deficit for v in certificate.violations)
        raise TheoryViolationError(f"repaired menu still leaks {worst} of slack")
    loss = principal_utility(instance, menu) - principal_utility(instance, repaired)
    bound = s + delta / s
    if loss > bound:
        raise TheoryViolationError(f"repair lost {loss}, above the bound {bound}")
    return repaired


def lift_backward(menu_bar: Menu, rmap: ReductionMap) -> tuple[Menu, LiftTrace]:
    """Pull an IC, limited-liability image menu back to the source.

    Stages: (a) a negative image value short-circuits to the zero menu with
    opt-out recommendations; (b) dummy payments are zeroed and every type's
    canonical image best response recorded; (c) types whose best response
    escaped upward or to the idle action are collected; (d) each such type
    is handed whichever stripped contract its source self likes best, with
    its canonical source action; (e) escaped types that would now hurt the
    principal are moved to opt-out; (f) the result, provably within
    3 epsilon of incentive compatibility, is repaired exactly.  The image
    value is checked against H (source value + nu) at the end.
    """
    source = rmap.source
    reduced = rmap.reduced
    require_valid(source)
    if menu_bar.num_types != reduced.num_types:
        raise ValueError("menu and image instance disagree on the number of types")
    if not menu_bar.limited_liability:
        raise ValidationError(("backward lift requires non-negative payments",))
    _reject_not_ic(verify_ic(reduced, menu_bar, 0), "input menu")

    params = rmap.params
    eta, gamma, delta = _constants(rmap)
    sqrt_eps, sqrt_excess = _sqrt_upper(params.epsilon)
    nu_upper = Fraction(13, 4) * params.epsilon + 4 * sqrt_eps
    K = source.num_types
    n = source.num_actions
    m = source.num_outcomes

    image_actions = _canonical_image_actions(menu_bar, rmap)
    u_single = principal_utility(reduced, Menu(menu_bar.contracts, image_actions))

    def finish(case, lifted, u_multi, *, theta_hat=(), theta_hat_1=(), theta_hat_2=(),
               reassigned=(), p_breve=None, p_breve_star=None, p_hat_star=None,
               notes=()):
        ceiling = params.H * (u_multi + nu_upper)
        if u_single > ceiling:
            raise TheoryViolationError(
                f"image value {u_single} exceeds the guaranteed ceiling {ceiling}"
            )
        trace = LiftTrace(
            case=case,
            epsilon=params.epsilon,
            eta=eta,
            gamma=gamma,
            delta=delta,
            sqrt_eps_upper=sqrt_eps,
            sqrt_eps_excess=sqrt_excess,
            nu_upper=nu_upper,
            theta_hat=tuple(theta_hat),
            theta_hat_1=tuple(theta_hat_1),
            theta_hat_2=tuple(theta_hat_2),
            reassigned_contracts=tuple(reassigned),
            p_breve=p_breve,
            p_breve_star=p_breve_star,
            p_hat_star=p_hat_star,
            u_single=u_single,
            u_multi=u_multi,
            notes=tuple(notes),
        )
        return lifted, trace

    if u_single < 0:
        zero = Contract((ZERO,) * m)
        lifted = Menu([zero] * K, [0] * K)
        return finish(
            BACKWARD_NEGATIVE,
            lifted,
            principal_utility(source, lifted),
            notes=(f"image value {u_single} is negative",),
        )

    breve_contracts = [
        Contract(c.payments[:m] + (ZERO,)) for c in menu_bar.contracts
    ]
    p_breve = Menu(breve_contracts, image_actions)

    if image_actions[rmap.aux_type_index] != rmap.dummy_action:
        raise TheoryViolationError(
            "the auxiliary type's best response is not the idle action despite "
            "a non-negative image value"
        )
    theta_hat = []
    for k in range(K):
        act = image_actions[k]
        if act == rmap.dummy_action:
            theta_hat.append(k)
            continue
        block = act // n
        if block < k:
            raise TheoryViolationError(
                f"type {k} best-responds inside lower block {block} despite a "
                "non-negative image value"
            )
        if block > k:
            theta_hat.append(k)

    projected = [Contract(c.payments[:m]) for c in breve_contracts]
    star_contracts = []
    star_actions = []
    reassigned = []
    for k in range(K):
        if k in theta_hat:
            best = None
            for t in range(K + 1):
                br = best_response(source, k, projected[t])
                if best is None or br.agent_utility > best[1].agent_utility:
                    best = (t, br)
            star_contracts.append(projected[best[0]])
            star_actions.append(best[1].action)
            reassigned.append((k, best[0]))
        else:
            star_contracts.append(projected[k])
            star_actions.append(rmap.action_pair(image_actions[k])[1])
    p_breve_star = Menu(star_contracts, star_actions)

    theta_hat_2 = [
        k
        for k in theta_hat
        if principal_type_utility(source, k, star_contracts[k], star_actions[k]) < 0
    ]
    theta_hat_1 = [k for k in theta_hat if k not in theta_hat_2]
    hat_actions = [
        0 if k in theta_hat_2 else star_actions[k] for k in range(K)
    ]
    p_hat_star = Menu(star_contracts, hat_actions)

    slack_cert = verify_ic(source, p_hat_star, delta)
    if not slack_cert.passed:
        worst = max(v.deficit for v in slack_cert.violations)
        raise TheoryViolationError(
            f"pipeline menu misses the {delta} slack bound by {worst - delta}"
        )
    lifted = ic_repair(source, p_hat_star, delta, blend_weight=2 * sqrt_eps)
    if menu_bar.is_constant and not lifted.is_constant:
        raise TheoryViolationError("single-contract input produced a proper menu")
    return finish(
        BACKWARD_PIPELINE,
        lifted,
        principal_utility(source, lifted),
        theta_hat=theta_hat,
        theta_hat_1=theta_hat_1,
        theta_hat_2=theta_hat_2,
        reassigned=reassigned,
        p_breve=p_breve,
        p_breve_star=p_breve_star,
        p_hat_star=p_hat_star,
    )


def exact_recover(
    instance: MultiParamInstance, menu_bar: Menu, rmap: ReductionMap
) -> SolveReport:
    """Recover a source optimum from an exactly optimal image menu.

    Pulls the menu back, reads off the action profile it lands on, and
    re-solves the payment program for that single profile; when the input
    is one shared contract the single-contract program is used instead.
    Optimality of the input is the caller's responsibility and is not
    re-verified here; with an optimal input the returned value equals the
    source optimum.
    """
    if instance != rmap.source:
        raise ValueError("instance is not the one this reduction embedded")
    lifted, trace = lift_backward(menu_bar, rmap)
    profile = lifted.actions
    solver = solve_single_for_profile if menu_bar.is_constant else solve_menu_for_profile
    solution = solver(instance, profile)
    if solution.status != "optimal":
        raise TheoryViolationError(
            f"profile {profile} has no feasible payments, yet the pulled-back "
            "menu witnesses feasibility"
        )
    certificate = verify_ic(instance, solution.menu, 0)
    if not certificate.passed:
        raise TheoryViolationError("profile re-solve produced a non-IC menu")
    notes = (
        f"profile {' '.join(str(a) for a in profile)} read from the pulled-back menu",
        f"pipeline case {trace.case}",
    )
    return build_report(
        instance,
        solution.value,
        solution.menu,
        certificate=certificate,
        profile=profile,
        notes=notes,
    )


@dataclass(frozen=True)
class PredicateResult:
    """One audited inequality: its margin and where it was tightest."""

    name: str
    passed: bool
    slack: Fraction
    witness: str


@dataclass(frozen=True)
class BackwardReport:
    vacuous: bool
    reason: str | None
    predicates: tuple[PredicateResult, ...]

    @property
    def all_passed(self) -> bool:
        return not self.vacuous and all(p.passed for p in self.predicates)


def backward_diagnostics(menu_bar: Menu, rmap: ReductionMap) -> BackwardReport:
    """Audit the six structural bounds behind the backward pipeline.

    Requires an IC, limited-liability image menu with non-negative value;
    anything else yields a vacuous report rather than raising, since the
    bounds are only promised under that gate.
    """
    source = rmap.source
    reduced = rmap.reduced
    params = rmap.params
    eta, gamma, delta = _constants(rmap)
    K = source.num_types
    n = source.num_actions
    m = source.num_outcomes

    if menu_bar.num_types != reduced.num_types:
        return BackwardReport(True, "menu size does not match the image instance", ())
    if not menu_bar.limited_liability:
        return BackwardReport(True, "menu pays negative amounts", ())
    if not verify_ic(reduced, menu_bar, 0).passed:
        return BackwardReport(True, "menu is not incentive compatible", ())
    image_actions = _canonical_image_actions(menu_bar, rmap)
    u_single = principal_utility(reduced, Menu(menu_bar.contracts, image_actions))
    if u_single < 0:
        return BackwardReport(True, f"image value {u_single} is negative", ())

    predicates = []

    worst_type = max(
        range(K + 1), key=lambda t: menu_bar.contracts[t].payments[rmap.dummy_outcome]
    )
    worst_pay = menu_bar.contracts[worst_type].payments[rmap.dummy_outcome]
    predicates.append(
        PredicateResult(
            "dummy_payment_bound",
            worst_pay <= eta,
            eta - worst_pay,
            f"type {worst_type} pays {worst_pay} on the dummy outcome",
        )
    )

    escapes = []
    for k in range(K):
        act = image_actions[k]
        if act != rmap.dummy_action and act // n < k:
            escapes.append(f"type {k} -> block {act // n}")
    if image_actions[K] != rmap.dummy_action:
        escapes.append("auxiliary type -> non-idle action")
    predicates.append(
        PredicateResult(
            "no_lower_block_best_response",
            not escapes,
            ZERO,
            "; ".join(escapes) if escapes else "every best response stays at or above its block",
        )
    )

    bound = 4 / params.mu_min
    worst_paid, worst_at = ZERO, "idle everywhere"
    for t in range(K + 1):
        act = image_actions[t]
        if act == rmap.dummy_action:
            continue
        row = reduced.transitions[act]
        paid = sum(
            (row[w] * menu_bar.contracts[t].payments[w] for w in range(m)), ZERO
        )
        if paid > worst_paid:
            worst_paid, worst_at = paid, f"type {t} at action {act} collects {paid}"
    predicates.append(
        PredicateResult(
            "nondummy_payment_bound", worst_paid <= bound, bound - worst_paid, worst_at
        )
    )

    breve = Menu(
        [Contract(c.payments[:m] + (ZERO,)) for c in menu_bar.contracts],
        image_actions,
    )
    cert = verify_ic(reduced, breve, 0)
    worst_deficit = max((v.deficit for v in cert.violations), default=ZERO)
    predicates.append(
        PredicateResult(
            "zeroed_menu_slack_ic",
            worst_deficit <= eta,
            eta - worst_deficit,
            f"largest incentive deficit after zeroing dummy payments: {worst_deficit}",
        )
    )

    theta_hat = [
        k
        for k in range(K)
        if image_actions[k] == rmap.dummy_action or image_actions[k] // n > k
    ]
    if theta_hat:
        slack_p = None
        witness_p = ""
        slack_a = None
        witness_a = ""
        projected = [Contract(c.payments[:m]) for c in breve.contracts]
        for k in theta_hat:
            per_type = reduced.prior[k] * principal_type_utility(
                reduced, k, breve.contracts[k], image_actions[k]
            )
            cap = source.prior[k] * params.H * gamma
            if slack_p is None or cap - per_type < slack_p:
                slack_p = cap - per_type
                witness_p = f"type {k} yields {per_type} against cap {cap}"
            gained = max(
                best_response(source, k, projected[t]).agent_utility
                for t in range(K + 1)
            )
            if slack_a is None or delta - gained < slack_a:
                slack_a = delta - gained
                witness_a = f"type {k} can extract {gained}"
        predicates.append(
            PredicateResult(
                "reassigned_type_principal_utility_bound",
                slack_p >= 0,
                slack_p,
                witness_p,
            )
        )
        predicates.append(
            PredicateResult(
                "reassigned_type_agent_utility_bound", slack_a >= 0, slack_a, witness_a
            )
        )
    else:
        for name in (
            "reassigned_type_principal_utility_bound",
            "reassigned_type_agent_utility_bound",
        ):
            predicates.append(
                PredicateResult(name, True, ZERO, "no type escapes its block")
            )

    return BackwardReport(False, None, tuple(predicates))
