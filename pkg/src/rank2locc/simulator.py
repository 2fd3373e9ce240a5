"""Dense statevector ground truth for rank-2 protocols.

States are complex numpy vectors of length ``2**p`` with party 0 as the most
significant qubit. :func:`decompose` recovers the (unique, for truly
multipartite states) two-term product decomposition of a state, which gives
both its parameter point and the local unitaries that bring it back to the
representative form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._config import resolve
from .lambda_space import (
    Kind,
    LambdaPoint,
    StateClass,
    canonical,
    has_vanishing_cosine,
    lu_equivalent,
    representative_state,
    w_vector,
)
from .local_ops import build_measurement_operators
from .transform import ProtocolPlan

MAX_PARTIES = 12
DET_TOL = 1e-10
ROOT_MATCH_TOL = 1e-6
RECONSTRUCTION_TOL = 1e-7
REALIGN_TOL = 1e-9


class DecompositionError(ValueError):
    """The state is not a superposition of two product states."""


class SimulationDivergence(RuntimeError):
    """A branch left the equivalence class the plan predicted."""


def num_parties(state: np.ndarray) -> int:
    p = int(round(math.log2(state.size)))
    if 2**p != state.size:
        raise ValueError("state length is not a power of two")
    return p


def _split(state: np.ndarray, party: int) -> np.ndarray:
    p = num_parties(state)
    return state.reshape(2**party, 2, 2 ** (p - party - 1))


def apply_operator(state: np.ndarray, party: int, op: np.ndarray) -> np.ndarray:
    """``(op on party) |state>`` without renormalization."""
    return np.einsum("ij,ajb->aib", op, _split(state, party)).reshape(-1)


def apply_local(state: np.ndarray, party: int, m: np.ndarray):
    """Measurement outcome with operator ``m``: ``(prob, collapsed state)``.

    A zero-probability outcome returns ``(0.0, None)``.
    """
    out = apply_operator(state, party, m)
    prob = float(np.vdot(out, out).real)
    if prob <= 1e-300:
        return 0.0, None
    return prob, out / math.sqrt(prob)


def apply_unitaries(state: np.ndarray, unitaries) -> np.ndarray:
    for k, u in enumerate(unitaries):
        if u is not None:
            state = apply_operator(state, k, u)
    return state


def reduced_density(state: np.ndarray, party: int) -> np.ndarray:
    t = _split(state, party)
    return np.einsum("aib,ajb->ij", t, t.conj())


def random_unitary(rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _det2(m: np.ndarray) -> complex:
    return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]


@dataclass
class Rank2Decomposition:
    """``state = x * (f1[0] x ... x f1[p-1]) + y * (f2[0] x ... x f2[p-1])``.

    Local vectors are normalized with ``<f1[k]|f2[k]> = cosines[k] >= 0``.
    """

    f1: np.ndarray
    f2: np.ndarray
    x: complex
    y: complex
    cosines: np.ndarray

    @property
    def z(self) -> complex:
        return self.y / self.x

    def point(self) -> LambdaPoint:
        return LambdaPoint(self.z, tuple(float(c) for c in self.cosines))


def _factor_product(t: np.ndarray, count: int):
    """Normalized factors and scale of a product tensor, read off slices through its largest entry."""
    t = t.reshape((2,) * count)
    idx = np.unravel_index(np.argmax(np.abs(t)), t.shape)
    factors = []
    denom = 1.0 + 0j
    for j in range(count):
        sl = list(idx)
        sl[j] = slice(None)
        v = t[tuple(sl)]
        v = v / np.linalg.norm(v)
        factors.append(v)
        denom *= v[idx[j]]
    return factors, complex(t[idx] / denom)


def _pencil_vectors(psi: np.ndarray, k: int, m: int) -> np.ndarray:
    """Party-k vectors of the two product terms, as columns of a 2x2 matrix.

    Contracting the other parties onto the two-dimensional support of the
    (k, m | rest) cut leaves a pencil W0 + mu W1 over (m, rest). It is singular
    exactly when mu cancels one of the two terms on party k.
    """
    t = np.moveaxis(psi, (k, m), (0, 1)).reshape(4, -1)
    _, sv, vh = np.linalg.svd(t, full_matrices=False)
    if sv.size < 2 or sv[1] <= 1e-12 * sv[0]:
        raise DecompositionError("rest of the system has one-dimensional support")
    if sv.size > 2 and sv[2] > 1e-7 * sv[0]:
        raise DecompositionError("state has tensor rank above two")
    w = (t @ vh[:2].conj().T).reshape(2, 2, 2)
    hom = scipy.linalg.eigvals(w[0], -w[1], homogeneous_eigvals=True)
    alpha, beta = hom[0], hom[1]
    vecs = np.array([alpha, -beta])
    return vecs / np.linalg.norm(vecs, axis=0)


def _match_roots(ref: np.ndarray, other: np.ndarray) -> float:
    """Largest angular distance between two root pairs under the better of the two pairings."""

    def dist(u, v):
        return math.sqrt(max(0.0, 1.0 - abs(np.vdot(u, v)) ** 2))

    straight = max(dist(ref[:, 0], other[:, 0]), dist(ref[:, 1], other[:, 1]))
    swapped = max(dist(ref[:, 0], other[:, 1]), dist(ref[:, 1], other[:, 0]))
    return min(straight, swapped)


def decompose(state: np.ndarray) -> Rank2Decomposition | None:
    """Two-term product decomposition, or ``None`` for a product state."""
    state = np.asarray(state, dtype=complex)
    p = num_parties(state)
    psi = state.reshape((2,) * p)
    dets = [float(_det2(reduced_density(state, k)).real) for k in range(p)]
    entangled = [k for k in range(p) if dets[k] > DET_TOL]
    if not entangled:
        return None
    if len(entangled) == 1:
        raise DecompositionError("a single entangled party is impossible for a pure state")
    order = sorted(entangled, key=lambda k: -dets[k])
    k = order[0]
    if len(entangled) == 2:
        rho = reduced_density(state, k)
        _, vecs = np.linalg.eigh(rho)
        party_vecs = vecs[:, ::-1]
    else:
        party_vecs = _pencil_vectors(psi, k, order[1])
        for m in order[2:]:
            gap = _match_roots(party_vecs, _pencil_vectors(psi, k, m))
            if gap > ROOT_MATCH_TOL:
                raise DecompositionError(f"product-term roots disagree between parties (gap {gap:.3g})")
    if abs(_det2(party_vecs)) < ROOT_MATCH_TOL:
        raise DecompositionError("product-term roots coincide; the state is not a sum of two product states")
    tk = np.moveaxis(psi, k, 0).reshape(2, -1)
    coeffs = np.linalg.solve(party_vecs, tk)
    rest1, x = _factor_product(coeffs[0], p - 1)
    rest2, y = _factor_product(coeffs[1], p - 1)
    f1 = np.array(rest1[:k] + [party_vecs[:, 0]] + rest1[k:])
    f2 = np.array(rest2[:k] + [party_vecs[:, 1]] + rest2[k:])
    cosines = np.empty(p)
    for j in range(p):
        ov = complex(np.vdot(f1[j], f2[j]))
        cosines[j] = min(1.0, abs(ov))
        if abs(ov) > 1e-15:
            ph = ov / abs(ov)
            f2[j] = f2[j] * ph.conjugate()
            y *= ph
    recon = x * _kron_rows(f1) + y * _kron_rows(f2)
    if np.linalg.norm(recon - state) > RECONSTRUCTION_TOL * max(1.0, np.linalg.norm(state)):
        raise DecompositionError("state is not a sum of two product states")
    return Rank2Decomposition(f1, f2, x, y, cosines)


def _kron_rows(rows: np.ndarray) -> np.ndarray:
    out = rows[0]
    for r in rows[1:]:
        out = np.multiply.outer(out, r)
    return out.reshape(-1)


def extract_lambda(state: np.ndarray, tol: float | None = None):
    """Canonical parameter point of a rank-2 state, or ``StateClass(PRODUCT)``."""
    dec = decompose(state)
    if dec is None:
        return StateClass(Kind.PRODUCT)
    return canonical(dec.point(), tol)


def _to_representative(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Unitary sending a -> |0> and b -> w_c, where c = <a|b> is real."""
    c = float(np.vdot(a, b).real)
    rest = b - c * a
    nr = np.linalg.norm(rest)
    a_perp = rest / nr if nr > 1e-12 else np.array([-a[1].conjugate(), a[0].conjugate()])
    return np.array([a.conj(), a_perp.conj()])


def realign(state: np.ndarray, expected: LambdaPoint, tol: float | None = None, dec=None):
    """Local unitaries taking ``state`` onto ``representative_state(expected)``.

    Returns ``(aligned state, distance)`` where ``distance`` is the norm of the
    difference from the representative after removing the global phase. A
    decomposition already computed for ``state`` may be passed as ``dec``.
    """
    tol = resolve(tol)
    if dec is None:
        dec = decompose(state)
    if dec is None:
        raise SimulationDivergence("branch collapsed to a product state")
    target_z = expected.z
    options = [(dec.f1, dec.f2, dec.z), (dec.f2, dec.f1, 1.0 / dec.z)]
    vanishing = has_vanishing_cosine(expected, max(tol, 1e-9))
    if vanishing:
        first, second, z_val = min(options, key=lambda o: abs(abs(o[2]) - abs(target_z)))
    else:
        first, second, z_val = min(options, key=lambda o: abs(o[2] - target_z))
    unitaries = [_to_representative(a, b) for a, b in zip(first, second)]
    if vanishing:
        m = int(np.argmin(expected.cosines))
        phi = np.angle(target_z / z_val)
        unitaries[m] = np.diag([1.0, np.exp(1j * phi)]) @ unitaries[m]
    aligned = apply_unitaries(state, unitaries)
    ref = representative_state(expected)
    ov = complex(np.vdot(ref, aligned))
    if abs(ov) > 0:
        aligned = aligned * (ov.conjugate() / abs(ov))
    return aligned, float(np.linalg.norm(aligned - ref))


@dataclass(frozen=True)
class BranchResult:
    path: tuple[int, ...]
    probability: float
    final_lambda: LambdaPoint

    def to_json(self) -> dict:
        return {"path": list(self.path), "prob": self.probability, "lambda": self.final_lambda.to_json()}


def execute_protocol(plan: ProtocolPlan, tol: float = 1e-8) -> list[BranchResult]:
    """Run every outcome path of ``plan`` on statevectors.

    After each outcome the branch is checked against the step's expected point
    and rotated back to its representative state. Once the rotation lands
    within ``REALIGN_TOL`` of that state, the branch continues from the exact
    representative, so rounding drift does not compound along long chains of
    unlikely outcomes. Outcome indices in paths are 0-based.
    """
    p = plan.initial.parties
    if p > MAX_PARTIES:
        raise ValueError(f"at most {MAX_PARTIES} parties are supported")
    frontier = [((), 1.0, representative_state(plan.initial))]
    for n, step in enumerate(plan.steps):
        ops = build_measurement_operators(step.op).operators
        nxt = []
        for path, prob, st in frontier:
            for idx, m in enumerate(ops):
                q, collapsed = apply_local(st, step.party, m)
                if q < 1e-14:
                    continue
                dec = decompose(collapsed)
                got = StateClass(Kind.PRODUCT) if dec is None else canonical(dec.point(), tol)
                if not isinstance(got, LambdaPoint) or not lu_equivalent(got, step.expected, tol):
                    raise SimulationDivergence(
                        f"step {n + 1}, path {path + (idx,)}: reached {got}, expected {step.expected}"
                    )
                _, gap = realign(collapsed, step.expected, tol, dec=dec)
                if gap > REALIGN_TOL:
                    raise SimulationDivergence(f"step {n + 1}, path {path + (idx,)}: realignment misses by {gap:.3g}")
                nxt.append((path + (idx,), prob * q, representative_state(step.expected)))
        frontier = nxt
    results = []
    for path, prob, st in frontier:
        got = extract_lambda(st, tol)
        if not isinstance(got, LambdaPoint) or not lu_equivalent(got, plan.target, tol):
            raise SimulationDivergence(f"path {path}: final point {got} is not equivalent to {plan.target}")
        results.append(BranchResult(path, prob, got))
    return results


def certify(plan: ProtocolPlan, branches: list[BranchResult], tol: float = 1e-8) -> tuple[bool, str]:
    total = sum(b.probability for b in branches)
    if abs(total - 1.0) > 1e-9:
        return False, f"branch probabilities sum to {total!r}"
    bad = [b.path for b in branches if not lu_equivalent(b.final_lambda, plan.target, tol)]
    if bad:
        return False, f"{len(bad)} branches not LU-equivalent to target"
    return True, "all branches LU-equivalent to target"


def branch_report(branches: list[BranchResult]) -> list[dict]:
    return [b.to_json() for b in branches]
