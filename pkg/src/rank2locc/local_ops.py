"""Single-party generalized measurements on rank-2 states.

An operation by party ``k`` is described relative to a reference point
``acting_on`` in one of two forms:

* first form, one :class:`OutcomeFirst` ``(A, B, C, gamma)`` per outcome, with
  ``A = ||M a_k||``, ``B = ||M b_k||`` and ``C e^{i gamma} = <a_k|M^+M|b_k>/(AB)``;
* second form, one :class:`OutcomeSecond` ``(prob, C, z_out)`` per outcome,
  naming the collapsed point directly.

The first form is constrained by ``sum A^2 = sum B^2 = 1``,
``sum A B C e^{i gamma} = c_k`` and ``C <= 1``. The second form is constrained by

    sum p / N(out)          = 1 / N(in)
    sum p |z_out|^2 / N(out) = |z|^2 / N(in)      (implied by the other two)
    sum p z_out C / N(out)   = z c_k / N(in)
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import scipy.linalg

from . import extended_complex as ec
from ._config import resolve
from .extended_complex import INF, ExtendedComplex
from .lambda_space import LambdaPoint, normalization, w_vector

NULL_PROBABILITY = 1e-12


@dataclass(frozen=True)
class OutcomeFirst:
    A: float
    B: float
    C: float
    gamma: float

    def to_json(self) -> dict:
        return {"A": self.A, "B": self.B, "C": self.C, "gamma": self.gamma}


@dataclass(frozen=True)
class OutcomeSecond:
    prob: float
    C: float
    z_out: ExtendedComplex

    def to_json(self) -> dict:
        return {"p": self.prob, "C": self.C, "z": ec.to_json(self.z_out)}


Outcome = Union[OutcomeFirst, OutcomeSecond]


@dataclass(frozen=True)
class LocalOperation:
    party: int
    acting_on: LambdaPoint
    outcomes: tuple[Outcome, ...]

    def __post_init__(self):
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        if not self.outcomes:
            raise ValueError("a local operation needs at least one outcome")
        kinds = {type(o) for o in self.outcomes}
        if len(kinds) != 1:
            raise TypeError("outcomes must all use the same parametrization")
        if not 0 <= self.party < self.acting_on.parties:
            raise ValueError(f"party index {self.party} out of range")

    @property
    def form(self) -> str:
        return "first" if isinstance(self.outcomes[0], OutcomeFirst) else "second"

    @property
    def c_k(self) -> float:
        return self.acting_on.cosines[self.party]

    def to_json(self) -> dict:
        return {"party": self.party + 1, "outcomes": [o.to_json() for o in self.outcomes]}

    @classmethod
    def from_json(cls, obj: dict, acting_on: LambdaPoint) -> "LocalOperation":
        party = int(obj["party"]) - 1
        outs = []
        for o in obj["outcomes"]:
            if "A" in o:
                outs.append(OutcomeFirst(float(o["A"]), float(o["B"]), float(o["C"]), float(o["gamma"])))
            else:
                outs.append(OutcomeSecond(float(o["p"]), float(o["C"]), ec.from_json(o["z"])))
        return cls(party, acting_on, tuple(outs))


@dataclass(frozen=True)
class MeasurementOperators:
    party: int
    operators: tuple[np.ndarray, ...]

    def completeness_residual(self) -> float:
        total = sum(m.conj().T @ m for m in self.operators)
        return float(np.linalg.norm(total - np.eye(2), ord=2))


def identity_operation(party: int, lam: LambdaPoint) -> LocalOperation:
    return LocalOperation(party, lam, (OutcomeFirst(1.0, 1.0, lam.cosines[party], 0.0),))


def _wrap_angle(g: float) -> float:
    """Map an angle into (-pi, pi]."""
    g = math.remainder(g, 2.0 * math.pi)
    return math.pi if g <= -math.pi else g


def _require(op: LocalOperation, form: str) -> None:
    if op.form != form:
        raise TypeError(f"{form}-form operation expected, got {op.form}-form")


def _inverse_n_terms(lam: LambdaPoint) -> tuple[float, float, complex]:
    """(1/N, |z|^2/N, z/N), taking limits at z = inf."""
    if lam.z is INF:
        return 0.0, 1.0, 0j
    n = normalization(lam)
    return 1.0 / n, abs(lam.z) ** 2 / n, lam.z / n


def first_form_residuals(op: LocalOperation) -> dict[str, float]:
    _require(op, "first")
    a2 = sum(o.A**2 for o in op.outcomes)
    b2 = sum(o.B**2 for o in op.outcomes)
    cross = sum(o.A * o.B * o.C * cmath.exp(1j * o.gamma) for o in op.outcomes)
    return {
        "sum_A2": abs(a2 - 1.0),
        "sum_B2": abs(b2 - 1.0),
        "cross": abs(cross - op.c_k),
        "schwarz": max(0.0, max(o.C for o in op.outcomes) - 1.0),
        "negative": max(0.0, -min(min(o.A, o.B, o.C) for o in op.outcomes)),
    }


def validate_first(op: LocalOperation, tol: float | None = None) -> bool:
    tol = resolve(tol)
    return all(v <= tol for v in first_form_residuals(op).values())


def second_form_residuals(op: LocalOperation) -> dict[str, float]:
    _require(op, "second")
    lam = op.acting_on
    in_inv, in_z2, in_z = _inverse_n_terms(lam)
    rel1 = rel2 = 0.0
    rel3 = 0j
    for o in op.outcomes:
        out = lam.replace(z=o.z_out, party=op.party, cosine=o.C)
        inv, z2, zz = _inverse_n_terms(out)
        rel1 += o.prob * inv
        rel2 += o.prob * z2
        rel3 += o.prob * zz * o.C
    return {
        "prob_sum": abs(sum(o.prob for o in op.outcomes) - 1.0),
        "prob_range": max(max(0.0, -o.prob, o.prob - 1.0) for o in op.outcomes),
        "cosine_range": max(max(0.0, -o.C, o.C - 1.0) for o in op.outcomes),
        "rel1": abs(rel1 - in_inv),
        "rel2": abs(rel2 - in_z2),
        "rel3": abs(rel3 - in_z * op.c_k),
    }


def validate_second(op: LocalOperation, tol: float | None = None) -> bool:
    """Probabilities, cosine range and the first and third relations.

    The second relation follows from the others; a failure there with the rest
    passing indicates a bug and raises ``AssertionError``.
    """
    tol = resolve(tol)
    res = second_form_residuals(op)
    ok = all(res[key] <= tol for key in ("prob_sum", "prob_range", "cosine_range", "rel1", "rel3"))
    if ok and res["rel2"] > 10 * tol:
        raise AssertionError(f"second relation violated although the others hold: {res}")
    return ok


def second_to_first(op: LocalOperation) -> LocalOperation:
    _require(op, "second")
    lam = op.acting_on
    if lam.z is INF or abs(lam.z) <= 1e-12:
        raise ValueError("reference point must have z outside {0, inf}")
    n_in = normalization(lam)
    z = lam.z
    outs = []
    for o in op.outcomes:
        if o.prob < NULL_PROBABILITY:
            continue
        if o.z_out is INF:
            outs.append(OutcomeFirst(0.0, math.sqrt(o.prob * n_in) / abs(z), o.C, 0.0))
        elif abs(o.z_out) <= 1e-12:
            outs.append(OutcomeFirst(math.sqrt(o.prob * n_in), 0.0, o.C, 0.0))
        else:
            n_out = normalization(lam.replace(z=o.z_out, party=op.party, cosine=o.C))
            a = math.sqrt(o.prob * n_in / n_out)
            outs.append(OutcomeFirst(a, abs(o.z_out) / abs(z) * a, o.C, _wrap_angle(cmath.phase(o.z_out / z))))
    return LocalOperation(op.party, lam, tuple(outs))


def apply_symbolic(op: LocalOperation, lam: LambdaPoint | None = None, tol: float | None = None):
    """Outcome probabilities and collapsed points, as ``[(prob, point), ...]``."""
    tol = resolve(tol)
    ref = op.acting_on
    lam = ref if lam is None else lam
    k = op.party
    if lam.parties != ref.parties or abs(lam.cosines[k] - ref.cosines[k]) > tol:
        raise ValueError("operation was parametrized for a different cosine of the acting party")
    if op.form == "second":
        if lam == ref:
            return [(o.prob, lam.replace(z=o.z_out, party=k, cosine=o.C)) for o in op.outcomes if o.prob > 0]
        op = second_to_first(op)
    if lam.z is INF:
        raise ValueError("cannot act on a point with z = inf; use its conjugate")
    z = lam.z
    n_in = normalization(lam)
    others = math.prod(c for j, c in enumerate(lam.cosines) if j != k)
    result = []
    for o in op.outcomes:
        if o.A == 0.0 and o.B == 0.0:
            continue
        phase = cmath.exp(1j * o.gamma)
        prob = (o.A**2 + abs(z) ** 2 * o.B**2 + 2.0 * o.A * o.B * others * o.C * (z * phase).real) / n_in
        z_out = INF if o.A == 0.0 else z * o.B * phase / o.A
        result.append((prob, lam.replace(z=z_out, party=k, cosine=o.C)))
    return result


def first_to_second(op: LocalOperation) -> LocalOperation:
    _require(op, "first")
    outs = tuple(
        OutcomeSecond(prob, point.cosines[op.party], point.z)
        for prob, point in apply_symbolic(op)
        if prob >= NULL_PROBABILITY
    )
    return LocalOperation(op.party, op.acting_on, outs)


def conjugate_operation(op: LocalOperation) -> LocalOperation:
    """The same physical operation described relative to the conjugate point."""
    from .lambda_space import conjugate

    if op.form == "first":
        outs = tuple(OutcomeFirst(o.B, o.A, o.C, _wrap_angle(-o.gamma)) for o in op.outcomes)
    else:
        outs = tuple(OutcomeSecond(o.prob, o.C, ec.invert(o.z_out)) for o in op.outcomes)
    return LocalOperation(op.party, conjugate(op.acting_on), outs)


def merge_outcomes(op: LocalOperation, tol: float | None = None) -> LocalOperation:
    """Combine second-form outcomes that land on the same point (not merely equivalent ones)."""
    _require(op, "second")
    tol = resolve(tol)
    merged: list[OutcomeSecond] = []
    for o in op.outcomes:
        for i, m in enumerate(merged):
            same_z = (o.z_out is INF and m.z_out is INF) or (
                o.z_out is not INF and m.z_out is not INF and abs(o.z_out - m.z_out) < tol
            )
            if same_z and abs(o.C - m.C) < tol:
                merged[i] = OutcomeSecond(m.prob + o.prob, m.C, m.z_out)
                break
        else:
            merged.append(o)
    return LocalOperation(op.party, op.acting_on, tuple(merged))


def dual_basis(c: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectors dual to (|0>, w_c): <a_perp|0> = 1, <a_perp|w_c> = 0, and so on."""
    alpha = np.array([1.0, 0.0], dtype=complex)
    beta = w_vector(c)
    d = 1.0 - c * c
    return (alpha - c * beta) / d, (beta - c * alpha) / d


def psd_sqrt(p: np.ndarray) -> np.ndarray:
    """Square root of a 2x2 Hermitian PSD matrix via its spectral decomposition."""
    h = 0.5 * (p + p.conj().T)
    vals, vecs = np.linalg.eigh(h)
    floor = -1e-12 * max(1.0, float(np.trace(h).real))
    if vals.min() < floor:
        raise ValueError(f"matrix is not positive semidefinite (eigenvalue {vals.min():.3g})")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def build_measurement_operators(op: LocalOperation, tol: float | None = None) -> MeasurementOperators:
    """Operators ``M = sqrt(P)`` in the concrete basis where a_k = |0>, b_k = w_{c_k}.

    ``P = A^2 |a~><a~| + B^2 |b~><b~| + (A B C e^{i gamma} |a~><b~| + h.c.)`` on the
    dual basis ``(a~, b~)``.
    """
    tol = resolve(tol)
    if op.form == "second":
        op = second_to_first(op)
    c = op.c_k
    if c >= 1.0 - tol:
        raise ValueError("party is unentangled (c_k = 1); its operations do not change the state")
    if not validate_first(op, tol):
        raise ValueError(f"operation violates its constraints: {first_form_residuals(op)}")
    a_perp, b_perp = dual_basis(c)
    ops = []
    for o in op.outcomes:
        # P = F^+ F for this F, so the positive polar factor of F is sqrt(P).
        # Going through F keeps small eigenvalues of P accurate to relative
        # precision, which squaring and re-rooting would not.
        image_b = o.B * np.array([o.C * cmath.exp(1j * o.gamma), math.sqrt(max(0.0, 1.0 - o.C**2))])
        f = o.A * np.outer([1.0, 0.0], a_perp.conj()) + np.outer(image_b, b_perp.conj())
        ops.append(scipy.linalg.polar(f)[1])
    return MeasurementOperators(op.party, tuple(ops))


def extract_first_params(operators: Sequence[np.ndarray], c: float) -> list[OutcomeFirst]:
    """Read (A, B, C, gamma) off concrete operators for the pair (|0>, w_c).

    Outcomes with A = 0 or B = 0 have no meaningful C or gamma; both are reported as 0.
    """
    alpha = np.array([1.0, 0.0], dtype=complex)
    beta = w_vector(c)
    out = []
    for m in operators:
        ma, mb = m @ alpha, m @ beta
        a, b = float(np.linalg.norm(ma)), float(np.linalg.norm(mb))
        x = complex(np.vdot(ma, mb))
        if a * b > 1e-14:
            out.append(OutcomeFirst(a, b, min(1.0, abs(x) / (a * b)), _wrap_angle(cmath.phase(x))))
        else:
            out.append(OutcomeFirst(a, b, 0.0, 0.0))
    return out
