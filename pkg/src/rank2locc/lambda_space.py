"""Parameter points for rank-2 multipartite pure states.

A state ``(|a_1 ... a_p> + z |b_1 ... b_p>) / sqrt(N)`` with normalized local
vectors and real non-negative overlaps ``c_k = <a_k|b_k>`` is labelled by the
point ``(z; c_1, ..., c_p)``. Points with the same label are related by local
unitaries, so a label names a whole local-unitary class.

Party indices are 0-based in Python and 1-based in every JSON document.
Amplitude vectors use party 0 as the most significant qubit.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import extended_complex as ec
from ._config import resolve
from .extended_complex import INF, ExtendedComplex


@dataclass(frozen=True)
class LambdaPoint:
    z: ExtendedComplex
    cosines: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "z", ec.as_extended(self.z))
        cos = []
        for c in self.cosines:
            c = float(c)
            if not (-1e-9 <= c <= 1.0 + 1e-9):
                raise ValueError(f"cosine {c} outside [0, 1]")
            cos.append(min(1.0, max(0.0, c)))
        if len(cos) < 3:
            raise ValueError("at least three parties are required")
        object.__setattr__(self, "cosines", tuple(cos))
        if self.z is not INF and self.z == -1 and all(c == 1.0 for c in cos):
            raise ValueError("(-1; 1, ..., 1) is not a state")

    @property
    def parties(self) -> int:
        return len(self.cosines)

    @property
    def cosine_product(self) -> float:
        return math.prod(self.cosines)

    def replace(self, z=None, party: int | None = None, cosine: float | None = None) -> "LambdaPoint":
        cos = list(self.cosines)
        if party is not None:
            cos[party] = cosine
        return LambdaPoint(self.z if z is None else z, tuple(cos))

    def to_json(self) -> dict:
        return {"z": ec.to_json(self.z), "cosines": [float(c) for c in self.cosines]}

    @classmethod
    def from_json(cls, obj: dict) -> "LambdaPoint":
        return cls(ec.from_json(obj["z"]), tuple(float(c) for c in obj["cosines"]))

    def __str__(self) -> str:
        z = "inf" if self.z is INF else f"{self.z.real:.6g}{self.z.imag:+.6g}j"
        return f"({z}; " + ", ".join(f"{c:.6g}" for c in self.cosines) + ")"


class Kind(enum.Enum):
    PRODUCT = "product"
    BIPARTITE = "bipartite"
    TRULY_MULTIPARTITE = "truly_multipartite"


@dataclass(frozen=True)
class StateClass:
    kind: Kind
    pair: tuple[int, int] | None = field(default=None)

    def to_json(self) -> dict:
        out = {"kind": self.kind.value}
        if self.pair is not None:
            out["parties"] = [self.pair[0] + 1, self.pair[1] + 1]
        return out


def _is_one(c: float, tol: float) -> bool:
    return c >= 1.0 - tol


def _z_degenerate(z: ExtendedComplex) -> bool:
    return z is INF or abs(z) <= 1e-12


def classify(lam: LambdaPoint, tol: float | None = None) -> StateClass:
    tol = resolve(tol)
    below = [k for k, c in enumerate(lam.cosines) if not _is_one(c, tol)]
    if _z_degenerate(lam.z) or len(below) <= 1:
        return StateClass(Kind.PRODUCT)
    if len(below) == 2:
        return StateClass(Kind.BIPARTITE, (below[0], below[1]))
    return StateClass(Kind.TRULY_MULTIPARTITE)


def is_truly_multipartite(lam: LambdaPoint, tol: float | None = None) -> bool:
    return classify(lam, tol).kind is Kind.TRULY_MULTIPARTITE


def has_vanishing_cosine(lam: LambdaPoint, tol: float | None = None) -> bool:
    tol = resolve(tol)
    return any(c <= tol for c in lam.cosines)


def normalization(lam: LambdaPoint) -> float:
    """N = 1 + |z|^2 + c_1...c_p (z + z*)."""
    if lam.z is INF:
        raise ValueError("N is undefined at z = inf; use the conjugate point")
    z = lam.z
    return 1.0 + abs(z) ** 2 + 2.0 * lam.cosine_product * z.real


def concurrence(lam: LambdaPoint, k: int) -> float:
    if _z_degenerate(lam.z):
        return 0.0
    others = math.prod(c for j, c in enumerate(lam.cosines) if j != k)
    ck = lam.cosines[k]
    val = (
        2.0 * abs(lam.z)
        * math.sqrt(max(0.0, 1.0 - ck * ck))
        * math.sqrt(max(0.0, 1.0 - others * others))
        / normalization(lam)
    )
    return min(1.0, val)


def concurrences(lam: LambdaPoint) -> list[float]:
    return [concurrence(lam, k) for k in range(lam.parties)]


def xi(lam: LambdaPoint) -> float:
    """Cosine product times n(z); conserved by deterministic transformations."""
    return lam.cosine_product * ec.n_of(lam.z)


def conjugate(lam: LambdaPoint) -> LambdaPoint:
    return LambdaPoint(ec.invert(lam.z), lam.cosines)


def canonical(lam: LambdaPoint, tol: float | None = None) -> LambdaPoint:
    """The member of {lam, conjugate(lam)} with |z| >= 1 (Im z >= 0 on the unit circle).

    With a vanishing cosine only |z| matters, and z is replaced by a positive real.
    """
    z = lam.z
    if z is INF:
        return lam
    if has_vanishing_cosine(lam, tol) and abs(z) > 0:
        r = abs(z)
        return LambdaPoint(max(r, 1.0 / r), lam.cosines)
    if ec.on_unit_circle(z, tol):
        return lam if z.imag >= 0 else conjugate(lam)
    return lam if abs(z) > 1.0 else conjugate(lam)


def _z_close(a: ExtendedComplex, b: ExtendedComplex, tol: float) -> bool:
    if a is INF or b is INF:
        return a is b
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def lu_equivalent(lam: LambdaPoint, other: LambdaPoint, tol: float | None = None) -> bool:
    tol = resolve(tol)
    if lam.parties != other.parties:
        return False
    cls_a, cls_b = classify(lam, tol), classify(other, tol)
    if cls_a.kind is not cls_b.kind:
        return False
    if cls_a.kind is Kind.PRODUCT:
        return True
    if cls_a.kind is Kind.BIPARTITE:
        if cls_a.pair != cls_b.pair:
            return False
        k = cls_a.pair[0]
        return abs(concurrence(lam, k) - concurrence(other, k)) <= tol
    if any(abs(a - b) > tol for a, b in zip(lam.cosines, other.cosines)):
        return False
    za, zb = lam.z, other.z
    if has_vanishing_cosine(lam, tol) or has_vanishing_cosine(other, tol):
        ra, rb = abs(za), abs(zb)
        return abs(ra - rb) <= tol * max(1.0, ra) or abs(ra * rb - 1.0) <= tol * max(1.0, ra * rb)
    return _z_close(za, zb, tol) or _z_close(za, ec.invert(zb), tol)


def w_vector(c: float) -> np.ndarray:
    return np.array([c, math.sqrt(max(0.0, 1.0 - c * c))], dtype=complex)


def kron_all(vectors) -> np.ndarray:
    out = np.ones((), dtype=complex)
    for v in vectors:
        out = np.multiply.outer(out, v)
    return out.reshape(-1)


def representative_state(lam: LambdaPoint) -> np.ndarray:
    """Normalized amplitudes of (|0...0> + z |w_c1 ... w_cp>) / sqrt(N)."""
    if lam.z is INF:
        raise ValueError("use the conjugate point for z = inf")
    p = lam.parties
    zero = np.zeros(2**p, dtype=complex)
    zero[0] = 1.0
    vec = zero + lam.z * kron_all(w_vector(c) for c in lam.cosines)
    norm2 = float(np.vdot(vec, vec).real)
    if norm2 <= 1e-300:
        raise ValueError("point does not describe a state")
    return vec / math.sqrt(norm2)


def statevector_to_json(state: np.ndarray) -> list[list[float]]:
    return [[float(a.real), float(a.imag)] for a in np.asarray(state, dtype=complex)]


def statevector_from_json(obj) -> np.ndarray:
    return np.array([complex(re, im) for re, im in obj], dtype=complex)
