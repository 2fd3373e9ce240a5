"""Deterministic LOCC conversions between truly multipartite rank-2 states.

Three families are decided here, after both points are moved to the
representative with ``|z| >= 1``:

* the target has a vanishing cosine (``Rule.VANISHING_TARGET``): cosines and
  ``|z|`` may only grow;
* neither point has a vanishing cosine (``Rule.NONZERO_COSINES``): cosines may
  only grow and ``n(z) c`` and ``s(z) c`` are conserved, where ``c`` is the
  cosine product;
* only the source has a vanishing cosine (``Rule.VANISHING_SOURCE``): the source
  must have ``|z| = 1`` and the target a purely imaginary ``z``.

:func:`plan_protocol` turns a feasible pair into a chain of single-party
measurements, at most one per party, each deterministic on its own.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from . import extended_complex as ec
from ._config import resolve
from .extended_complex import SpecialS
from .lambda_space import (
    LambdaPoint,
    canonical,
    conjugate,
    has_vanishing_cosine,
    is_truly_multipartite,
    lu_equivalent,
    normalization,
    xi,
)
from .local_ops import (
    LocalOperation,
    OutcomeFirst,
    OutcomeSecond,
    apply_symbolic,
    conjugate_operation,
    first_to_second,
    second_form_residuals,
    second_to_first,
    validate_second,
)


class Rule(enum.Enum):
    VANISHING_TARGET = "vanishing_target"
    NONZERO_COSINES = "nonzero_cosines"
    VANISHING_SOURCE = "vanishing_source"
    NEW_VANISHING_COSINE = "new_vanishing_cosine"
    OUT_OF_SCOPE = "out_of_scope"


FEASIBLE_RULES = (Rule.VANISHING_TARGET, Rule.NONZERO_COSINES, Rule.VANISHING_SOURCE)


@dataclass(frozen=True)
class FeasibilityVerdict:
    feasible: bool
    rule: Rule
    detail: str = ""

    def __post_init__(self):
        if self.feasible and self.rule not in FEASIBLE_RULES:
            raise ValueError(f"a feasible verdict cannot carry rule {self.rule}")

    def __bool__(self) -> bool:
        return self.feasible

    def to_json(self) -> dict:
        return {"feasible": self.feasible, "rule": self.rule.value, "detail": self.detail}


class InfeasibleTransformation(ValueError):
    def __init__(self, verdict: FeasibilityVerdict):
        super().__init__(verdict.detail or verdict.rule.value)
        self.verdict = verdict


def _cosine_violations(a: LambdaPoint, b: LambdaPoint, tol: float) -> list[str]:
    return [
        f"cosine of party {k + 1} would decrease ({ca:.12g} -> {cb:.12g})"
        for k, (ca, cb) in enumerate(zip(a.cosines, b.cosines))
        if cb < ca - tol
    ]


def _ns_violations(a: LambdaPoint, b: LambdaPoint, tol: float) -> list[str]:
    out = []
    ca, cb = a.cosine_product, b.cosine_product
    lhs, rhs = ec.n_of(b.z) * cb, ec.n_of(a.z) * ca
    if abs(lhs - rhs) > tol:
        out.append(f"n ratio violated: n'c' = {lhs:.12g} but n c = {rhs:.12g}")
    if ec.is_plus_minus_one(a.z, tol):
        return out
    if ec.on_unit_circle(a.z, tol):
        if not ec.on_unit_circle(b.z, tol):
            out.append("s ratio violated: source lies on the unit circle |z|=1 but the target does not")
        return out
    if ec.on_unit_circle(b.z, tol):
        out.append("s ratio violated: target lies on the unit circle |z|=1 but the source does not")
        return out
    # s blows up near the unit circle, so compare the z it predicts instead:
    # z_from_ns is well conditioned there.
    sa, sb = ec.s_of(a.z, tol) * ca, ec.s_of(b.z, tol) * cb
    predicted = ec.z_from_ns(ec.n_of(b.z), sa / cb)
    if abs(predicted - b.z) > tol * max(1.0, abs(b.z)):
        out.append(f"s ratio violated: s'c' = {sb:.12g} but s c = {sa:.12g}")
    return out


def check_feasible(lam: LambdaPoint, target: LambdaPoint, tol: float | None = None) -> FeasibilityVerdict:
    tol = resolve(tol)
    if lam.parties != target.parties:
        raise ValueError("points have different numbers of parties")
    for name, point in (("source", lam), ("target", target)):
        if not is_truly_multipartite(point, tol):
            return FeasibilityVerdict(False, Rule.OUT_OF_SCOPE, f"{name} is not truly multipartite")
    a, b = canonical(lam, tol), canonical(target, tol)
    va, vb = has_vanishing_cosine(a, tol), has_vanishing_cosine(b, tol)
    problems = _cosine_violations(a, b, tol)
    if vb and not va:
        return FeasibilityVerdict(
            False, Rule.NEW_VANISHING_COSINE, "; ".join(problems) or "target has a vanishing cosine the source lacks"
        )
    if vb:
        rule = Rule.VANISHING_TARGET
        if abs(b.z) < abs(a.z) * (1.0 - tol):
            problems.append(f"|z| would decrease ({abs(a.z):.12g} -> {abs(b.z):.12g})")
    elif not va:
        rule = Rule.NONZERO_COSINES
        problems += _ns_violations(a, b, tol)
    else:
        rule = Rule.VANISHING_SOURCE
        if not ec.on_unit_circle(a.z, tol):
            problems.append(f"|z|=1 required for a source with a vanishing cosine (|z| = {abs(a.z):.12g})")
        if abs(b.z.real) > tol * max(1.0, abs(b.z)):
            problems.append(f"target z must be purely imaginary (Re z' = {b.z.real:.12g})")
    if problems:
        return FeasibilityVerdict(False, rule, "; ".join(problems))
    return FeasibilityVerdict(True, rule, "")


# --- protocol synthesis -------------------------------------------------------


@dataclass(frozen=True)
class PlanStep:
    party: int
    op: LocalOperation
    expected: LambdaPoint

    def to_json(self) -> dict:
        return {"party": self.party + 1, "op": self.op.to_json(), "expected": self.expected.to_json()}


@dataclass(frozen=True)
class ProtocolPlan:
    initial: LambdaPoint
    target: LambdaPoint
    rule: Rule
    steps: tuple[PlanStep, ...]

    @property
    def final(self) -> LambdaPoint:
        return self.steps[-1].expected if self.steps else self.initial

    def to_json(self) -> dict:
        return {
            "initial": self.initial.to_json(),
            "target": self.target.to_json(),
            "rule": self.rule.value,
            "steps": [s.to_json() for s in self.steps],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ProtocolPlan":
        initial = LambdaPoint.from_json(obj["initial"])
        target = LambdaPoint.from_json(obj["target"])
        steps = []
        current = initial
        for s in obj["steps"]:
            op = LocalOperation.from_json(s["op"], current)
            expected = LambdaPoint.from_json(s["expected"])
            steps.append(PlanStep(int(s["party"]) - 1, op, expected))
            current = expected
        return cls(initial, target, Rule(obj.get("rule", Rule.NONZERO_COSINES.value)), tuple(steps))


def z_raiser(lam: LambdaPoint, party: int, new_modulus: float) -> LocalOperation:
    """Two-outcome measurement by a vanishing-cosine party raising |z| to ``new_modulus``."""
    a, b = abs(lam.z), new_modulus
    if not (1.0 - 1e-9 <= a < b):
        raise ValueError("need 1 <= |z| < new modulus")
    d = b**4 - 1.0
    u = math.sqrt(max(0.0, b * b * a * a - 1.0) / d)
    v = math.sqrt((b * b - a * a) / d)
    outs = (OutcomeFirst(u, b / a * u, 0.0, 0.0), OutcomeFirst(b * v, v / a, 0.0, 0.0))
    return LocalOperation(party, lam, outs)


def cosine_raiser(lam: LambdaPoint, party: int, new_cosine: float) -> LocalOperation:
    """Two-outcome measurement raising one cosine; deterministic when a cosine vanishes."""
    c = lam.cosines[party]
    g = math.acos(min(1.0, c / new_cosine))
    h = 1.0 / math.sqrt(2.0)
    return LocalOperation(party, lam, (OutcomeFirst(h, h, new_cosine, g), OutcomeFirst(h, h, new_cosine, -g)))


def _two_outcome(lam: LambdaPoint, party: int, p_plus: float, cosine: float, z_plus, z_minus) -> LocalOperation:
    if not (-1e-12 <= p_plus <= 1.0 + 1e-12):
        raise AssertionError(f"synthesized probability {p_plus} outside [0, 1]")
    p_plus = min(1.0, max(0.0, p_plus))
    outs = (OutcomeSecond(p_plus, cosine, z_plus), OutcomeSecond(1.0 - p_plus, cosine, z_minus))
    return LocalOperation(party, lam, outs)


def chain_step(lam: LambdaPoint, party: int, new_cosine: float, z_next: complex, tol: float | None = None) -> LocalOperation:
    """Deterministic step for the no-vanishing-cosine family, moving z to ``z_next``."""
    tol = resolve(tol)
    z_prev = lam.z
    ratio = lam.cosines[party] / new_cosine
    if ec.is_plus_minus_one(z_prev, tol):
        return _two_outcome(lam, party, 0.5, new_cosine, z_next, 1.0 / z_next)
    if ec.is_plus_minus_i(z_prev, tol):
        return _two_outcome(lam, party, 0.5 * (1.0 + ratio), new_cosine, 1j, -1j)
    if ec.on_unit_circle(z_prev, tol):
        t_prev = math.tan(ec.polar(z_prev)[1])
        t_next = math.tan(ec.polar(z_next)[1])
        return _two_outcome(lam, party, 0.5 * (1.0 + t_prev / t_next), new_cosine, z_next, 1.0 / z_next)
    h_prev = math.tanh(ec.polar(z_prev)[0])
    h_next = math.tanh(ec.polar(z_next)[0])
    if abs(h_prev) > abs(h_next) * (1.0 + tol):
        raise AssertionError("chain step would shrink |z|")
    return _two_outcome(lam, party, 0.5 * (1.0 + h_prev / h_next), new_cosine, z_next, 1.0 / z_next)


def _chain_targets(a: LambdaPoint, b: LambdaPoint, raising: list[int], tol: float) -> list[complex]:
    """Intermediate z values after each raising party, ending at ``b.z``."""
    n = ec.n_of(a.z)
    circle = ec.on_unit_circle(b.z, tol)
    s_target = None if circle else ec.s_of(b.z, tol)
    zs = []
    for idx, k in enumerate(raising):
        n *= a.cosines[k] / b.cosines[k]
        if idx == len(raising) - 1:
            zs.append(b.z)
            break
        if circle:
            zs.append(ec.z_from_ns(n, SpecialS.PLUS_MINUS_INFINITY))
        else:
            s = s_target * math.prod(b.cosines[j] / a.cosines[j] for j in raising[idx + 1 :])
            zs.append(ec.z_from_ns(n, s))
    return zs


def _step(current: LambdaPoint, op: LocalOperation, expected: LambdaPoint, tol: float) -> PlanStep:
    if op.form == "first":
        op = first_to_second(op)
    if not validate_second(op, tol):
        raise AssertionError(f"synthesized step fails the outcome relations: {second_form_residuals(op)}")
    for _, out in apply_symbolic(op):
        if not lu_equivalent(out, expected, max(tol, 1e-9)):
            raise AssertionError(f"step outcome {out} is not equivalent to {expected}")
    return PlanStep(op.party, op, expected)


def plan_protocol(lam: LambdaPoint, target: LambdaPoint, tol: float | None = None) -> ProtocolPlan:
    """Measurement chain converting ``lam`` into ``target``.

    Parties act in ascending order; step parameters depend on that order.
    Both endpoints are stored in their ``|z| >= 1`` representative.
    """
    tol = resolve(tol)
    verdict = check_feasible(lam, target, tol)
    if not verdict.feasible:
        raise InfeasibleTransformation(verdict)
    a, b = canonical(lam, tol), canonical(target, tol)
    p = a.parties
    steps: list[PlanStep] = []
    current = a

    def raise_cosine(k: int) -> None:
        nonlocal current
        if b.cosines[k] > current.cosines[k] + tol:
            expected = current.replace(party=k, cosine=b.cosines[k])
            steps.append(_step(current, cosine_raiser(current, k, b.cosines[k]), expected, tol))
            current = expected

    if verdict.rule is Rule.VANISHING_TARGET:
        pivot = next(k for k in range(p) if b.cosines[k] <= tol)
        for k in range(p):
            if k != pivot:
                raise_cosine(k)
            elif abs(b.z) > abs(current.z) * (1.0 + tol):
                expected = current.replace(z=current.z * abs(b.z) / abs(current.z))
                steps.append(_step(current, z_raiser(current, k, abs(b.z)), expected, tol))
                current = expected
    elif verdict.rule is Rule.VANISHING_SOURCE:
        pivot = next(k for k in range(p) if a.cosines[k] <= tol)
        for k in range(p):
            if k != pivot:
                raise_cosine(k)
        cos = b.cosines[pivot]
        op = LocalOperation(pivot, current, (OutcomeSecond(0.5, cos, b.z), OutcomeSecond(0.5, cos, 1.0 / b.z)))
        expected = current.replace(z=b.z, party=pivot, cosine=cos)
        steps.append(_step(current, op, expected, tol))
        current = expected
    else:
        raising = [k for k in range(p) if b.cosines[k] > a.cosines[k] + tol]
        for k, z_next in zip(raising, _chain_targets(a, b, raising, tol)):
            op = chain_step(current, k, b.cosines[k], z_next, tol)
            expected = current.replace(z=z_next, party=k, cosine=b.cosines[k])
            steps.append(_step(current, op, expected, tol))
            current = expected
    plan = ProtocolPlan(a, b, verdict.rule, tuple(steps))
    if not lu_equivalent(plan.final, b, max(tol, 1e-9)):
        raise AssertionError(f"plan ends at {plan.final}, not at {b}")
    return plan


# --- consistent symbolic tracking --------------------------------------------


def _close(x: LambdaPoint, y: LambdaPoint, tol: float) -> bool:
    return all(abs(u - v) <= tol for u, v in zip(x.cosines, y.cosines)) and abs(x.z - y.z) <= tol * max(
        1.0, abs(x.z)
    )


def reexpress(op: LocalOperation, point: LambdaPoint, tol: float | None = None) -> LocalOperation:
    """First-form description of ``op`` relative to an equivalent ``point``.

    ``op`` was parametrized for ``op.acting_on``; ``point`` is that point, its
    conjugate, or (with a vanishing cosine) a phase-shifted variant of either.
    """
    tol = max(resolve(tol), 1e-9)
    base = second_to_first(op) if op.form == "second" else op
    ref = base.acting_on
    if _close(point, ref, tol):
        return base
    if _close(point, conjugate(ref), tol):
        return conjugate_operation(base)
    if not has_vanishing_cosine(ref, tol):
        raise ValueError(f"{point} is not a description of {ref}")
    if abs(abs(point.z) - abs(ref.z)) > abs(abs(point.z) - 1.0 / abs(ref.z)):
        base = conjugate_operation(base)
        ref = base.acting_on
    k = base.party
    others_vanish = any(c <= tol for j, c in enumerate(ref.cosines) if j != k)
    if others_vanish:
        return LocalOperation(k, point, base.outcomes)
    phi = ec.polar(point.z / ref.z)[1]
    outs = tuple(OutcomeFirst(o.A, o.B, o.C, o.gamma - phi) for o in base.outcomes)
    return LocalOperation(k, point, outs)


def symbolic_branches(plan: ProtocolPlan, tol: float | None = None):
    """Leaves ``(path, prob, point)`` of the plan with no relabelling between steps."""
    branches = [((), 1.0, plan.initial)]
    for step in plan.steps:
        nxt = []
        for path, prob, point in branches:
            op = reexpress(step.op, point, tol)
            for idx, (q, out) in enumerate(apply_symbolic(op, point)):
                nxt.append((path + (idx,), prob * q, out))
        branches = nxt
    return branches


def aggregate_residuals(plan: ProtocolPlan, tol: float | None = None) -> dict[str, float]:
    """Residuals of the whole-protocol sums of p/N, p|z|^2/N and p z c/N over the leaves."""
    lam = plan.initial
    n0 = normalization(lam)
    s1 = s2 = 0.0
    s3 = 0j
    for _, prob, out in symbolic_branches(plan, tol):
        n = normalization(out)
        s1 += prob / n
        s2 += prob * abs(out.z) ** 2 / n
        s3 += prob * out.z * out.cosine_product / n
    return {
        "total": abs(1.0 / n0 - s1),
        "modulus": abs(abs(lam.z) ** 2 / n0 - s2),
        "phase": abs(lam.z * lam.cosine_product / n0 - s3),
    }


# --- invariant classes -------------------------------------------------------


def ns_pair(lam: LambdaPoint, tol: float | None = None):
    return ec.n_of(lam.z), ec.s_of(lam.z, tol)


def in_l_i(lam: LambdaPoint, tol: float | None = None) -> bool:
    tol = resolve(tol)
    return not has_vanishing_cosine(lam, tol) and ec.is_plus_minus_i(lam.z, tol)


def invariant_class(lam: LambdaPoint, tol: float | None = None) -> tuple[float, bool]:
    if not is_truly_multipartite(lam, tol):
        raise ValueError("invariant classes are defined for truly multipartite points")
    return xi(lam), in_l_i(lam, tol)


def ghz_point(parties: int) -> LambdaPoint:
    return LambdaPoint(1.0, (0.0,) * parties)


def is_ancestor(lam: LambdaPoint, tol: float | None = None) -> bool:
    """True for the most entangled members of a conserved class."""
    tol = resolve(tol)
    value, _ = invariant_class(lam, tol)
    if abs(value) <= tol:
        return lu_equivalent(lam, ghz_point(lam.parties), tol)
    z = canonical(lam, tol).z
    return abs(z - (1.0 if value > 0 else -1.0)) <= tol
