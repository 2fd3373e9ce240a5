"""Points of the extended complex plane and the inversion-invariant pair (n, s).

Finite points are plain Python ``complex`` values; the point at infinity is the
singleton :data:`INF`. The functions

    n(z) = 2 Re z / (|z|^2 + 1),     s(z) = 2 Im z / (|z|^2 - 1)

are unchanged by ``z -> 1/z`` and, away from ``z = +-1``, determine ``z`` up to
that inversion.
"""
from __future__ import annotations

import cmath
import enum
import math
from typing import Union

from ._config import resolve


class _Infinity:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __eq__(self, other) -> bool:
        return other is self

    def __hash__(self) -> int:
        return hash("rank2locc.INF")

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()

ExtendedComplex = Union[complex, _Infinity]


class SpecialS(enum.Enum):
    PLUS_MINUS_INFINITY = "+-inf"
    UNDEFINED = "undefined"


SValue = Union[float, SpecialS]


def is_inf(z: ExtendedComplex) -> bool:
    return z is INF


def as_extended(z) -> ExtendedComplex:
    """Coerce numbers (and ``INF``) to an :data:`ExtendedComplex`."""
    if z is INF:
        return INF
    w = complex(z)
    if not (math.isfinite(w.real) and math.isfinite(w.imag)):
        raise ValueError(f"finite extended-complex value expected, got {z!r}")
    return w


def invert(z: ExtendedComplex) -> ExtendedComplex:
    if z is INF:
        return 0j
    if z == 0:
        return INF
    return 1.0 / z


def on_unit_circle(z: ExtendedComplex, tol: float | None = None) -> bool:
    if z is INF:
        return False
    return abs(abs(z) - 1.0) <= resolve(tol)


def is_plus_minus_one(z: ExtendedComplex, tol: float | None = None) -> bool:
    if z is INF:
        return False
    tol = resolve(tol)
    return abs(z.imag) <= tol and abs(abs(z.real) - 1.0) <= tol


def is_plus_minus_i(z: ExtendedComplex, tol: float | None = None) -> bool:
    if z is INF:
        return False
    tol = resolve(tol)
    return abs(z.real) <= tol and abs(abs(z.imag) - 1.0) <= tol


def n_of(z: ExtendedComplex) -> float:
    if z is INF:
        return 0.0
    return 2.0 * z.real / (abs(z) ** 2 + 1.0)


def s_of(z: ExtendedComplex, tol: float | None = None) -> SValue:
    """s(z), with the unit circle mapped to a tag instead of a huge float."""
    if z is INF:
        return 0.0
    if is_plus_minus_one(z, tol):
        return SpecialS.UNDEFINED
    if on_unit_circle(z, tol):
        return SpecialS.PLUS_MINUS_INFINITY
    return 2.0 * z.imag / (abs(z) ** 2 - 1.0)


def z_from_ns(n: float, s: SValue, upper: bool = True) -> complex:
    """The root of ``(n(z), s(z)) = (n, s)`` with ``|z| >= 1``.

    The other root is its inverse. On the unit circle ``s`` carries no sign, so
    ``upper`` selects the root with non-negative imaginary part.
    """
    if s is SpecialS.UNDEFINED:
        if abs(abs(n) - 1.0) > 1e-9:
            raise ValueError("s is undefined only at z = +-1")
        return complex(math.copysign(1.0, n), 0.0)
    if not -1.0 - 1e-12 <= n <= 1.0 + 1e-12:
        raise ValueError(f"n must lie in [-1, 1], got {n}")
    n = min(1.0, max(-1.0, n))
    if s is SpecialS.PLUS_MINUS_INFINITY:
        y = math.sqrt(max(0.0, 1.0 - n * n))
        return complex(n, y if upper else -y)
    ss = n * n + s * s
    if ss == 0.0:
        raise ValueError("n = s = 0 corresponds to z in {0, inf}")
    # |z|^2 solves ss R^2 - 2 (2 + s^2 - n^2) R + ss = 0; the roots multiply to 1.
    b = 2.0 + s * s - n * n
    root = 2.0 * math.sqrt(max(0.0, (1.0 - n * n) * (1.0 + s * s)))
    R = (b + root) / ss
    x = n * (R + 1.0) / 2.0
    y = s * (R - 1.0) / 2.0
    return complex(x, y)


def polar(z: complex) -> tuple[float, float]:
    """(rho, theta) with z = exp(rho + i theta)."""
    return math.log(abs(z)), cmath.phase(z)


def to_json(z: ExtendedComplex):
    if z is INF:
        return "inf"
    return {"re": float(z.real), "im": float(z.imag)}


def from_json(obj) -> ExtendedComplex:
    if isinstance(obj, str):
        if obj.strip().lower() in ("inf", "infinity", "∞"):
            return INF
        raise ValueError(f"unrecognised extended-complex string {obj!r}")
    if isinstance(obj, (int, float)):
        return as_extended(obj)
    if isinstance(obj, dict) and set(obj) <= {"re", "im"}:
        return as_extended(complex(float(obj.get("re", 0.0)), float(obj.get("im", 0.0))))
    raise ValueError(f"cannot decode extended-complex value {obj!r}")
