"""Brute-force validators and seeded random instances.

Everything here recomputes quantities from concrete 2x2 operators and dense
statevectors rather than from the closed-form parametrizations, so it can act
as ground truth for the rest of the package. All randomness flows through
``numpy.random.Generator`` objects built from integer seeds; suite reports
record the seed of every failing trial so it can be replayed alone.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import extended_complex as ec
from .extended_complex import INF, SpecialS
from .lambda_space import (
    LambdaPoint,
    canonical,
    has_vanishing_cosine,
    lu_equivalent,
    normalization,
    representative_state,
    w_vector,
)
from .local_ops import (
    LocalOperation,
    MeasurementOperators,
    OutcomeSecond,
    build_measurement_operators,
    extract_first_params,
    first_to_second,
    psd_sqrt,
    second_to_first,
)
from .simulator import apply_local, apply_unitaries, decompose, random_unitary
from .transform import chain_step, cosine_raiser, z_raiser

MAX_OUTCOMES = 6
STRICTNESS_MARGIN = 1e-10
NEAR_UNITARY = 1e-6


class PovmStyle(enum.Enum):
    GENERIC = "generic"
    RANDOM_UNITARIES = "random_unitaries"
    PROJECTOR_LIKE = "projector_like"


# --- random measurements -------------------------------------------------------


def _inv_sqrt(s: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (s + s.conj().T))
    return (vecs / np.sqrt(vals)) @ vecs.conj().T


def _complete(factors: list[np.ndarray], rng: np.random.Generator, room: np.ndarray | None = None):
    """Operators ``V_l sqrt(P_l)`` with ``P_l = R S^-1/2 F_l F_l^+ S^-1/2 R`` summing to ``R^2``.

    ``S`` is the sum of ``F_l F_l^+`` and ``room`` (``R``) defaults to the
    identity. ``sqrt(P_l)`` is the positive polar factor of ``(R S^-1/2 F_l)^+``,
    so rank-one fragments stay exactly rank one. ``V_l`` are random unitaries,
    which change no parameter but keep the operators from all being Hermitian.
    """
    factors = [f.reshape(2, -1) for f in factors]
    s_inv = _inv_sqrt(sum(f @ f.conj().T for f in factors))
    room = np.eye(2) if room is None else room
    ops = []
    for f in factors:
        root = scipy.linalg.polar((room @ s_inv @ f).conj().T)[1]
        ops.append(random_unitary(rng) @ root)
    return ops


def _gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_povm(outcome_count: int, seed: int | np.random.Generator, style=PovmStyle.GENERIC, party: int = 0):
    """A random qubit measurement with ``sum M^+ M = 1``.

    ``GENERIC`` uses full-rank random fragments, ``PROJECTOR_LIKE`` rank-one
    fragments (at least two outcomes) and ``RANDOM_UNITARIES`` scaled unitaries
    ``sqrt(q_l) U_l``.
    """
    style = PovmStyle(style)
    if not 1 <= outcome_count <= MAX_OUTCOMES:
        raise ValueError(f"outcome_count must lie in [1, {MAX_OUTCOMES}]")
    rng = np.random.default_rng(seed)
    if style is PovmStyle.RANDOM_UNITARIES:
        q = rng.dirichlet(np.ones(outcome_count))
        ops = [math.sqrt(w) * random_unitary(rng) for w in q]
    elif style is PovmStyle.PROJECTOR_LIKE:
        if outcome_count < 2:
            raise ValueError("rank-one outcomes need at least two of them")
        vs = [_gaussian(rng, 2) for _ in range(outcome_count)]
        ops = _complete(vs, rng)
    else:
        gs = [_gaussian(rng, (2, 2)) for _ in range(outcome_count)]
        ops = _complete(gs, rng)
    return MeasurementOperators(party, tuple(ops))


def projective_povm(vector: np.ndarray, party: int = 0) -> MeasurementOperators:
    """Projectors onto ``vector`` and its orthogonal complement."""
    v = np.asarray(vector, dtype=complex)
    v = v / np.linalg.norm(v)
    perp = np.array([-v[1].conjugate(), v[0].conjugate()])
    return MeasurementOperators(party, (np.outer(v, v.conj()), np.outer(perp, perp.conj())))


def povm_annihilating(vector: np.ndarray, outcome_count: int, rng: np.random.Generator, party: int = 0):
    """Random measurement whose first outcome sends ``vector`` to zero.

    With ``vector = |0>`` the first outcome has A = 0 (collapsed z at infinity);
    with ``vector = w_c`` it has B = 0 (collapsed z at zero).
    """
    if outcome_count < 2:
        raise ValueError("need at least two outcomes")
    v = np.asarray(vector, dtype=complex)
    v = v / np.linalg.norm(v)
    perp = np.array([-v[1].conjugate(), v[0].conjugate()])
    t = rng.uniform(0.2, 0.9)
    first = math.sqrt(t) * random_unitary(rng) @ np.outer(np.array([1.0, 0.0]), perp.conj())
    room = psd_sqrt(np.eye(2) - t * np.outer(perp, perp.conj()))
    gs = [_gaussian(rng, (2, 2)) for _ in range(outcome_count - 1)]
    return MeasurementOperators(party, (first, *_complete(gs, rng, room)))


def _scalar_distance(m: np.ndarray) -> float:
    h = m.conj().T @ m
    return float(np.linalg.norm(h - 0.5 * np.trace(h).real * np.eye(2)))


def is_near_unitary(op: MeasurementOperators) -> bool:
    """True when every ``M^+ M`` is within the filter distance of a multiple of the identity."""
    return all(_scalar_distance(m) <= NEAR_UNITARY for m in op.operators)


# --- random points and pairs ---------------------------------------------------------


def random_point(parties: int, rng: np.random.Generator, zero_parties=(), cos_range=(0.05, 0.9)) -> LambdaPoint:
    """Truly multipartite point with finite nonzero z and the given cosines set to zero."""
    cos = rng.uniform(*cos_range, size=parties)
    for k in zero_parties:
        cos[k] = 0.0
    r = math.exp(rng.uniform(-1.5, 1.5))
    return LambdaPoint(r * np.exp(1j * rng.uniform(-math.pi, math.pi)), tuple(cos))


def _raised(cos, rng: np.random.Generator, at_least_one=True, ceiling=0.95):
    """Cosines ``c' >= c``, each raised with probability one half (never past ``ceiling``)."""
    cos = np.array(cos, dtype=float)
    new = cos.copy()
    mask = rng.random(cos.size) < 0.5
    if at_least_one and not mask.any():
        mask[rng.integers(cos.size)] = True
    for k in np.flatnonzero(mask):
        if cos[k] < ceiling - 1e-3:
            new[k] = rng.uniform(cos[k] + 1e-3, ceiling)
    return new


FAMILIES = ("vanishing_target", "case_I", "case_II", "case_III", "case_V", "vanishing_source")


def random_feasible_pair(family: str, parties: int, rng: np.random.Generator) -> tuple[LambdaPoint, LambdaPoint]:
    """A source/target pair that is reachable, drawn from one protocol family.

    The ``case_*`` families have no vanishing cosine and differ in where the
    source z sits: off the unit circle (I), on it away from +-1 and +-i (II),
    at +-i (III) or at +-1 (V).
    """
    if family == "vanishing_target":
        zeros = sorted(int(k) for k in rng.choice(parties, size=rng.integers(1, parties + 1), replace=False))
        a = canonical(random_point(parties, rng, zero_parties=zeros))
        cos = _raised(a.cosines, rng, at_least_one=False)
        cos[list(zeros)] = 0.0
        modulus = abs(a.z) * math.exp(rng.uniform(0.0, 1.0)) if rng.random() < 0.8 else abs(a.z)
        return a, LambdaPoint(modulus * np.exp(1j * rng.uniform(-math.pi, math.pi)), tuple(cos))
    if family == "vanishing_source":
        zeros = sorted(int(k) for k in rng.choice(parties, size=rng.integers(1, parties + 1), replace=False))
        a = random_point(parties, rng, zero_parties=zeros)
        a = a.replace(z=np.exp(1j * rng.uniform(-math.pi, math.pi)))
        cos = _raised(a.cosines, rng, at_least_one=False)
        for k in zeros:
            cos[k] = rng.uniform(0.05, 0.95)
        y = math.exp(rng.uniform(-1.5, 1.5)) * rng.choice([-1.0, 1.0])
        return a, LambdaPoint(1j * y, tuple(cos))
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    a = random_point(parties, rng)
    sign = rng.choice([-1.0, 1.0])
    if family == "case_II":
        theta = rng.uniform(0.1, math.pi / 2 - 0.1) + rng.choice([0.0, math.pi / 2])
        a = a.replace(z=sign * np.exp(1j * theta))
    elif family == "case_III":
        a = a.replace(z=sign * 1j)
    elif family == "case_V":
        a = a.replace(z=sign)
    cos = _raised(a.cosines, rng)
    ratio = a.cosine_product / math.prod(cos)
    n = ec.n_of(a.z) * ratio
    if family == "case_V":
        s = SpecialS.PLUS_MINUS_INFINITY if rng.random() < 0.3 else rng.normal() * 2.0
    else:
        s = ec.s_of(a.z)
        if not isinstance(s, SpecialS):
            s = s * ratio
    return a, LambdaPoint(ec.z_from_ns(n, s), tuple(cos))


VIOLATIONS = ("ns_ratio", "source_modulus", "target_real_part")


def random_violating_pair(kind: str, parties: int, rng: np.random.Generator) -> tuple[LambdaPoint, LambdaPoint]:
    """A pair breaking exactly one reachability condition (cosines never decrease).

    ``ns_ratio`` breaks the n/s ratio law for points without vanishing cosines;
    ``source_modulus`` uses a vanishing-cosine source with |z| != 1 and
    ``target_real_part`` a target z with nonzero real part.
    """
    if kind == "ns_ratio":
        a, b = random_feasible_pair("case_I", parties, rng)
        scale = math.exp(rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 0.5))
        return a, b.replace(z=b.z * scale if rng.random() < 0.5 else b.z * np.exp(1j * rng.uniform(0.05, 0.5)))
    if kind in ("source_modulus", "target_real_part"):
        a, b = random_feasible_pair("vanishing_source", parties, rng)
        if kind == "source_modulus":
            return a.replace(z=a.z * math.exp(rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 1.0))), b
        return a, b.replace(z=b.z + rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 1.0))
    raise ValueError(f"unknown violation {kind!r}; expected one of {VIOLATIONS}")


def random_deterministic_step(lam: LambdaPoint, rng: np.random.Generator) -> LocalOperation:
    """A random single-party operation all of whose outcomes are equivalent.

    Acts on ``canonical(lam)`` and returns the operation in second form.
    """
    a = canonical(lam)
    free = [k for k, c in enumerate(a.cosines) if 0.0 < c < 0.98]
    if has_vanishing_cosine(a):
        zeros = [k for k, c in enumerate(a.cosines) if c == 0.0]
        pick = rng.integers(3)
        if pick == 0 and free:
            k = int(rng.choice(free))
            op = cosine_raiser(a, k, rng.uniform(a.cosines[k], 0.99))
        elif pick == 1 and ec.on_unit_circle(a.z):
            k = int(rng.choice(zeros))
            y = math.exp(rng.uniform(-1.5, 1.5))
            cos = rng.uniform(0.05, 0.95)
            op = LocalOperation(k, a, (OutcomeSecond(0.5, cos, 1j * y), OutcomeSecond(0.5, cos, -1j / y)))
        else:
            op = z_raiser(a, int(rng.choice(zeros)), abs(a.z) * math.exp(rng.uniform(0.01, 1.0)))
    else:
        k = int(rng.choice(free))
        c_new = rng.uniform(a.cosines[k] + 1e-3, 0.99)
        ratio = a.cosines[k] / c_new
        s = ec.s_of(a.z)
        if s is SpecialS.UNDEFINED:
            s = rng.normal() * 2.0
        elif not isinstance(s, SpecialS):
            s = s * ratio
        op = chain_step(a, k, c_new, ec.z_from_ns(ec.n_of(a.z) * ratio, s))
    return first_to_second(op) if op.form == "first" else op


# --- identity and outcome-bound checks ---------------------------------------------


@dataclass(frozen=True)
class RawOutcome:
    """Parameters read directly off one operator, without clamping."""

    A: float
    B: float
    C: float
    phase: complex
    prob: float


def _raw_params(op: MeasurementOperators, lam: LambdaPoint) -> list[RawOutcome]:
    c = lam.cosines[op.party]
    alpha, beta = np.array([1.0, 0.0], dtype=complex), w_vector(c)
    state = representative_state(lam)
    out = []
    for m in op.operators:
        ma, mb = m @ alpha, m @ beta
        a, b = float(np.linalg.norm(ma)), float(np.linalg.norm(mb))
        x = complex(np.vdot(ma, mb))
        prob, _ = apply_local(state, op.party, m)
        if a * b > 1e-14:
            out.append(RawOutcome(a, b, abs(x) / (a * b), x / abs(x) if x else 1.0, prob))
        else:
            out.append(RawOutcome(a, b, 0.0, 1.0, prob))
    return out


def verify_identities(op: MeasurementOperators, lam: LambdaPoint) -> dict[str, float]:
    """Residual of every parametrization identity for ``op`` acting on ``lam``.

    Keys: ``completeness``, ``sum_A2``, ``sum_B2``, ``cross``, ``schwarz``,
    ``rel1``, ``rel2``, ``rel3`` and ``probability`` (statevector against the
    closed-form outcome probability).
    """
    if lam.z is INF:
        raise ValueError("use a point with finite z")
    k = op.party
    z = lam.z
    n_in = normalization(lam)
    others = math.prod(c for j, c in enumerate(lam.cosines) if j != k)
    raw = _raw_params(op, lam)
    cross = sum(o.A * o.B * o.C * o.phase for o in raw)
    rel1 = rel2 = 0.0
    rel3 = 0j
    prob_gap = 0.0
    for o in raw:
        formula = (o.A**2 + abs(z) ** 2 * o.B**2 + 2.0 * o.A * o.B * others * o.C * (z * o.phase).real) / n_in
        prob_gap = max(prob_gap, abs(formula - o.prob))
        if o.A == 0.0:
            rel2 += o.prob
            continue
        z_out = z * o.B * o.phase / o.A
        n_out = 1.0 + abs(z_out) ** 2 + 2.0 * others * o.C * z_out.real
        rel1 += o.prob / n_out
        rel2 += o.prob * abs(z_out) ** 2 / n_out
        rel3 += o.prob * z_out * o.C / n_out
    return {
        "completeness": op.completeness_residual(),
        "sum_A2": abs(sum(o.A**2 for o in raw) - 1.0),
        "sum_B2": abs(sum(o.B**2 for o in raw) - 1.0),
        "cross": abs(cross - lam.cosines[k]),
        "schwarz": max(0.0, max(o.C for o in raw) - 1.0),
        "rel1": abs(rel1 - 1.0 / n_in),
        "rel2": abs(rel2 - abs(z) ** 2 / n_in),
        "rel3": abs(rel3 - z * lam.cosines[k] / n_in),
        "probability": prob_gap,
    }


def verify_outcome_cosines(op: MeasurementOperators, lam: LambdaPoint, tol: float = 1e-12) -> dict:
    """Report on the three outcome-cosine and modulus guarantees of a measurement.

    ``some_cosine_not_lower`` always applies. ``some_cosine_higher`` is checked
    (margin 1e-10) when c_k > 0 and the measurement is not within the
    near-unitary filter; ``some_modulus_not_lower`` when |z| >= 1. ``None``
    marks a check that does not apply.
    """
    c = lam.cosines[op.party]
    raw = _raw_params(op, lam)
    live = [o for o in raw if o.A * o.B > 1e-14]
    max_c = max((o.C for o in live), default=0.0)
    moduli = [math.inf if o.A == 0.0 else abs(lam.z) * o.B / o.A for o in raw if o.A + o.B > 0.0]
    near_unitary = is_near_unitary(op)
    report = {
        "c_k": c,
        "max_C": max_c,
        "cosine_spread": max((abs(o.C - c) for o in live), default=0.0),
        "near_unitary": near_unitary,
        "some_cosine_not_lower": max_c >= c - tol,
        "some_cosine_higher": None,
        "some_modulus_not_lower": None,
    }
    if c > 0.0 and not near_unitary:
        report["some_cosine_higher"] = max_c - c > STRICTNESS_MARGIN
    if lam.z is not INF and abs(lam.z) >= 1.0:
        report["max_modulus"] = max(moduli)
        report["some_modulus_not_lower"] = max(moduli) >= abs(lam.z) - tol
    return report


def operation_roundtrip_residual(op: LocalOperation) -> float:
    """Second form -> first form -> operators -> first form -> second form.

    Returns the largest discrepancy in (A, B, C, gamma) and in (p, C, z_out);
    C and gamma are ignored for outcomes with A = 0 or B = 0.
    """
    first = second_to_first(op)
    ops = build_measurement_operators(first)
    back = extract_first_params(ops.operators, first.c_k)
    worst = 0.0
    for o, r in zip(first.outcomes, back):
        worst = max(worst, abs(o.A - r.A), abs(o.B - r.B))
        if o.A * o.B > 1e-12:
            phase_gap = abs(np.exp(1j * o.gamma) - np.exp(1j * r.gamma))
            worst = max(worst, abs(o.C - r.C), phase_gap)
    again = first_to_second(LocalOperation(op.party, op.acting_on, tuple(back)))
    kept = [o for o in op.outcomes if o.prob >= 1e-12]
    if len(again.outcomes) != len(kept):
        return math.inf
    for o, r in zip(kept, again.outcomes):
        worst = max(worst, abs(o.prob - r.prob))
        if o.z_out is INF or r.z_out is INF:
            if not (o.z_out is INF and r.z_out is INF):
                return math.inf
            continue
        worst = max(worst, abs(o.z_out - r.z_out) / max(1.0, abs(o.z_out)))
        if abs(o.z_out) > 1e-12:
            worst = max(worst, abs(o.C - r.C))
    return worst


def random_second_form(lam: LambdaPoint, party: int, rng: np.random.Generator, limit: str | None = None):
    """A valid second-form operation, optionally with an outcome at z_out = 0 or infinity."""
    count = int(rng.integers(2, MAX_OUTCOMES + 1))
    if limit is None:
        style = (PovmStyle.GENERIC, PovmStyle.PROJECTOR_LIKE)[rng.integers(2)]
        ops = random_povm(count, rng, style, party)
    elif limit == "inf":
        ops = povm_annihilating(np.array([1.0, 0.0]), count, rng, party)
    elif limit == "zero":
        ops = povm_annihilating(w_vector(lam.cosines[party]), count, rng, party)
    else:
        raise ValueError("limit must be None, 'zero' or 'inf'")
    params = extract_first_params(ops.operators, lam.cosines[party])
    return first_to_second(LocalOperation(party, lam, tuple(params)))


def extraction_residual(lam: LambdaPoint, rng: np.random.Generator) -> float:
    """Distance between ``lam`` and the point read back from a locally rotated copy of its state."""
    state = apply_unitaries(representative_state(lam), [random_unitary(rng) for _ in range(lam.parties)])
    dec = decompose(state)
    if dec is None:
        return math.inf
    got = dec.point()
    gap = max(abs(a - b) for a, b in zip(got.cosines, lam.cosines))
    if has_vanishing_cosine(lam):
        r, s = abs(got.z), abs(lam.z)
        return max(gap, min(abs(r - s), abs(1.0 / r - s)) / max(1.0, s))
    zg = complex(got.z)
    return max(gap, min(abs(zg - lam.z), abs(1.0 / zg - lam.z)) / max(1.0, abs(lam.z)))


# --- seeded suites -------------------------------------------------------------------------


SUITES = ("identities", "outcome_cosines", "roundtrip", "extraction")


def _pick_style(rng, style) -> PovmStyle:
    return PovmStyle(style) if style else list(PovmStyle)[rng.integers(len(PovmStyle))]


def _identities_trial(rng, parties: int, style):
    lam = random_point(parties, rng)
    k = int(rng.integers(parties))
    style = _pick_style(rng, style)
    low = 2 if style is PovmStyle.PROJECTOR_LIKE else 1
    res = verify_identities(random_povm(int(rng.integers(low, MAX_OUTCOMES + 1)), rng, style, k), lam)
    bounds = {"probability": 1e-10}
    bad = [key for key, v in res.items() if v > bounds.get(key, 1e-9)]
    return res, bad


def _outcome_cosines_trial(rng, parties: int, style):
    lam = canonical(random_point(parties, rng))
    k = int(rng.integers(parties))
    style = _pick_style(rng, style)
    low = 2 if style is PovmStyle.PROJECTOR_LIKE else 1
    rep = verify_outcome_cosines(random_povm(int(rng.integers(low, MAX_OUTCOMES + 1)), rng, style, k), lam)
    bad = [key for key in ("some_cosine_not_lower", "some_cosine_higher", "some_modulus_not_lower") if rep[key] is False]
    residuals = {"cosine_shortfall": max(0.0, rep["c_k"] - rep["max_C"])}
    if style is PovmStyle.RANDOM_UNITARIES:
        residuals["cosine_spread"] = rep["cosine_spread"]
        if rep["cosine_spread"] > 1e-12:
            bad.append("cosine_spread")
    elif rep["some_cosine_higher"] is None and rep["c_k"] > 0.0:
        residuals["skipped_near_unitary"] = 1.0
    return residuals, bad


def _roundtrip_trial(rng, parties: int, style):
    lam = random_point(parties, rng)
    k = int(rng.integers(parties))
    limit = (None, None, "zero", "inf")[rng.integers(4)]
    res = operation_roundtrip_residual(random_second_form(lam, k, rng, limit))
    return {"roundtrip": res}, (["roundtrip"] if not res <= 1e-8 else [])


def _extraction_trial(rng, parties: int, style):
    p = parties if parties else int(rng.integers(3, 7))
    zeros = [int(rng.integers(p))] if rng.random() < 0.2 else []
    res = extraction_residual(random_point(p, rng, zero_parties=zeros), rng)
    return {"extraction": res}, (["extraction"] if not res <= 1e-8 else [])


_TRIALS = {
    "identities": _identities_trial,
    "outcome_cosines": _outcome_cosines_trial,
    "roundtrip": _roundtrip_trial,
    "extraction": _extraction_trial,
}


def run_suite(suite: str, trials: int, seed: int, parties: int = 3, style: str | None = None) -> dict:
    """Run ``trials`` independent trials with seeds ``seed, seed + 1, ...``.

    The report holds the largest value of each residual, the number of failing
    trials and their seeds (in seed order).
    """
    if suite not in _TRIALS:
        raise ValueError(f"unknown suite {suite!r}; expected one of {SUITES}")
    worst: dict[str, float] = {}
    offending = []
    for i in range(trials):
        trial_seed = seed + i
        residuals, bad = _TRIALS[suite](np.random.default_rng(trial_seed), parties, style)
        for key, v in residuals.items():
            worst[key] = max(worst.get(key, 0.0), float(v))
        if bad:
            offending.append(trial_seed)
    return {
        "suite": suite,
        "trials": trials,
        "seed": seed,
        "max_residual": worst,
        "violations": len(offending),
        "offending_seeds": offending,
    }
