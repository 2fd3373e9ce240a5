import cmath
import math
import pickle

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rank2locc import extended_complex as ec
from rank2locc.extended_complex import INF, SpecialS


def test_n_at_one_is_one():
    assert ec.n_of(1) == 1.0


def test_n_at_i_is_zero():
    assert ec.n_of(1j) == 0.0


def test_n_at_two_and_its_inverse():
    assert ec.n_of(2) == pytest.approx(0.8, abs=1e-15)
    assert ec.n_of(0.5) == pytest.approx(0.8, abs=1e-15)


def test_n_at_infinity_and_zero():
    assert ec.n_of(INF) == 0.0
    assert ec.n_of(0) == 0.0


def test_s_on_real_axis_is_finite_zero():
    s = ec.s_of(2)
    assert not isinstance(s, SpecialS)
    assert s == 0.0


def test_s_on_unit_circle_is_tagged():
    assert ec.s_of(1j) is SpecialS.PLUS_MINUS_INFINITY
    assert ec.s_of(cmath.exp(0.7j) * (1 + 5e-10)) is SpecialS.PLUS_MINUS_INFINITY


def test_s_undefined_only_at_plus_minus_one():
    assert ec.s_of(-1) is SpecialS.UNDEFINED
    assert ec.s_of(1) is SpecialS.UNDEFINED
    assert ec.s_of(-1 + 1e-3j) is not SpecialS.UNDEFINED


def test_invert_examples():
    assert ec.invert(2) == 0.5
    assert ec.invert(0) is INF
    assert ec.invert(INF) == 0
    assert ec.invert(1j) == -1j


def test_infinity_is_a_distinct_singleton():
    assert INF == INF
    assert INF != 1e308
    assert INF != complex(1e308, 0)
    assert pickle.loads(pickle.dumps(INF)) is INF
    assert ec.as_extended(INF) is INF
    with pytest.raises(ValueError):
        ec.as_extended(math.inf)


def test_nan_is_rejected():
    with pytest.raises(ValueError):
        ec.as_extended(complex(math.nan, 0))


def test_inversion_leaves_n_and_s_unchanged():
    rng = np.random.default_rng(1)
    worst_n = worst_s = 0.0
    for _ in range(10_000):
        r = math.exp(rng.uniform(-3, 3))
        if abs(r - 1) < 1e-3:
            continue
        z = r * cmath.exp(1j * rng.uniform(-math.pi, math.pi))
        worst_n = max(worst_n, abs(ec.n_of(ec.invert(z)) - ec.n_of(z)))
        s, s_inv = ec.s_of(z), ec.s_of(ec.invert(z))
        worst_s = max(worst_s, abs(s_inv - s) / max(1.0, abs(s)))
    assert worst_n <= 1e-12
    assert worst_s <= 1e-12


def test_n_s_inversion_recovers_z_or_its_inverse():
    rng = np.random.default_rng(2)
    for _ in range(10_000):
        z = math.exp(rng.uniform(-3, 3)) * cmath.exp(1j * rng.uniform(-math.pi, math.pi))
        s = ec.s_of(z)
        back = ec.z_from_ns(ec.n_of(z), s)
        gap = min(abs(back - z), abs(back - 1 / z)) / max(1.0, abs(z), abs(1 / z))
        assert gap <= 1e-9, (z, back)


def test_z_from_ns_returns_the_outer_root():
    z = ec.z_from_ns(0.8, 0.0)
    assert z == pytest.approx(2.0, abs=1e-12)


def test_z_from_ns_on_unit_circle():
    z = ec.z_from_ns(0.6, SpecialS.PLUS_MINUS_INFINITY)
    assert z == pytest.approx(0.6 + 0.8j, abs=1e-12)
    assert ec.z_from_ns(0.6, SpecialS.PLUS_MINUS_INFINITY, upper=False) == pytest.approx(0.6 - 0.8j, abs=1e-12)


@given(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False))
def test_n_is_bounded(z):
    assert abs(ec.n_of(z)) <= 1.0 + 1e-15


@given(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False))
def test_json_round_trip(z):
    assert ec.from_json(ec.to_json(z)) == z


def test_json_infinity():
    assert ec.to_json(INF) == "inf"
    assert ec.from_json("inf") is INF
    with pytest.raises(ValueError):
        ec.from_json("banana")


def test_plus_minus_one_detection_tolerance():
    assert ec.is_plus_minus_one(1 + 5e-10j)
    assert not ec.is_plus_minus_one(1 + 5e-9j)
