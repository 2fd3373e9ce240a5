import math

import numpy as np
import pytest

from rank2locc.extended_complex import INF
from rank2locc.lambda_space import (
    LambdaPoint,
    canonical,
    has_vanishing_cosine,
    lu_equivalent,
    representative_state,
)
from rank2locc.local_ops import MeasurementOperators, apply_symbolic, validate_second
from rank2locc.oracle import (
    FAMILIES,
    MAX_OUTCOMES,
    SUITES,
    VIOLATIONS,
    PovmStyle,
    extraction_residual,
    is_near_unitary,
    operation_roundtrip_residual,
    projective_povm,
    random_deterministic_step,
    random_feasible_pair,
    random_point,
    random_povm,
    random_second_form,
    random_violating_pair,
    run_suite,
    verify_identities,
    verify_outcome_cosines,
)
from rank2locc.simulator import apply_local, extract_lambda
from rank2locc.transform import check_feasible

LAM = LambdaPoint(1.5, (0.5, 0.4, 0.7))


class TestRandomPovm:
    @pytest.mark.parametrize("style", list(PovmStyle))
    def test_complete_for_every_count(self, style):
        low = 2 if style is PovmStyle.PROJECTOR_LIKE else 1
        for count in range(low, MAX_OUTCOMES + 1):
            op = random_povm(count, count, style)
            assert len(op.operators) == count
            assert op.completeness_residual() <= 1e-12

    def test_single_outcome_is_unitary(self):
        (m,) = random_povm(1, 3).operators
        np.testing.assert_allclose(m.conj().T @ m, np.eye(2), atol=1e-12)

    def test_reproducible(self):
        a = random_povm(4, 17, PovmStyle.GENERIC)
        b = random_povm(4, 17, PovmStyle.GENERIC)
        for x, y in zip(a.operators, b.operators):
            np.testing.assert_array_equal(x, y)

    def test_counts_outside_range_rejected(self):
        with pytest.raises(ValueError):
            random_povm(7, 0)
        with pytest.raises(ValueError):
            random_povm(0, 0)
        with pytest.raises(ValueError):
            random_povm(1, 0, PovmStyle.PROJECTOR_LIKE)

    def test_projector_like_fragments_are_rank_one(self):
        for m in random_povm(3, 5, PovmStyle.PROJECTOR_LIKE).operators:
            assert np.linalg.svd(m, compute_uv=False)[1] <= 1e-12

    def test_random_unitaries_leave_the_point_unchanged(self):
        rng = np.random.default_rng(50)
        for _ in range(50):
            lam = random_point(3, rng)
            op = random_povm(int(rng.integers(1, 7)), rng, PovmStyle.RANDOM_UNITARIES, int(rng.integers(3)))
            assert is_near_unitary(op)
            state = representative_state(lam)
            for m in op.operators:
                _, out = apply_local(state, op.party, m)
                assert lu_equivalent(extract_lambda(out), lam, 1e-8)


class TestVerifyIdentities:
    def test_identity_has_zero_residuals(self):
        res = verify_identities(MeasurementOperators(1, (np.eye(2),)), LAM)
        assert max(res.values()) <= 1e-15

    def test_scaled_operator_breaks_completeness(self):
        op = MeasurementOperators(0, (1.01 * np.eye(2),))
        res = verify_identities(op, LAM)
        assert res["completeness"] == pytest.approx(0.0201, abs=1e-12)
        assert res["sum_A2"] == pytest.approx(0.0201, abs=1e-12)

    def test_projective_measurement(self):
        res = verify_identities(projective_povm(np.array([1.0, 1.0j]), party=2), LAM)
        assert max(res.values()) <= 1e-12

    def test_random_measurements(self):
        rng = np.random.default_rng(51)
        for _ in range(300):
            lam = random_point(int(rng.integers(3, 6)), rng)
            style = list(PovmStyle)[rng.integers(3)]
            op = random_povm(int(rng.integers(2, 7)), rng, style, int(rng.integers(lam.parties)))
            res = verify_identities(op, lam)
            assert res["probability"] <= 1e-10
            assert max(res.values()) <= 1e-9, res


class TestVerifyOutcomeCosines:
    def test_projective_in_first_vector_basis_raises_cosine(self):
        lam = LambdaPoint(2, (0.5, 0.3, 0.3))
        rep = verify_outcome_cosines(projective_povm(np.array([1.0, 0.0])), lam)
        assert rep["max_C"] > 0.5
        assert rep["some_cosine_higher"] is True

    def test_random_unitaries_keep_cosine(self):
        rng = np.random.default_rng(52)
        for _ in range(100):
            lam = random_point(3, rng)
            k = int(rng.integers(3))
            rep = verify_outcome_cosines(random_povm(int(rng.integers(1, 7)), rng, "random_unitaries", k), lam)
            assert rep["cosine_spread"] <= 1e-12
            assert rep["some_cosine_higher"] is None

    def test_modulus_never_shrinks_everywhere(self):
        lam = LambdaPoint(1.5, (0.5, 0.3, 0.3))
        rng = np.random.default_rng(53)
        for _ in range(200):
            rep = verify_outcome_cosines(random_povm(int(rng.integers(2, 7)), rng), lam)
            assert rep["max_modulus"] >= 1.5 - 1e-12

    def test_modulus_check_skipped_inside_unit_disc(self):
        rep = verify_outcome_cosines(random_povm(2, 1), LambdaPoint(0.5, (0.5, 0.3, 0.3)))
        assert rep["some_modulus_not_lower"] is None

    def test_vanishing_cosine_only_needs_weak_bound(self):
        rep = verify_outcome_cosines(random_povm(3, 2), LambdaPoint(1.5, (0.0, 0.3, 0.3)))
        assert rep["some_cosine_not_lower"] is True
        assert rep["some_cosine_higher"] is None

    def test_generic_measurements_raise_some_cosine(self):
        rng = np.random.default_rng(54)
        for _ in range(300):
            lam = canonical(random_point(3, rng))
            k = int(rng.integers(3))
            style = (PovmStyle.GENERIC, PovmStyle.PROJECTOR_LIKE)[rng.integers(2)]
            rep = verify_outcome_cosines(random_povm(int(rng.integers(2, 7)), rng, style, k), lam)
            assert rep["some_cosine_not_lower"] and rep["some_modulus_not_lower"]
            if rep["some_cosine_higher"] is not None:
                assert rep["some_cosine_higher"]


class TestGenerators:
    @pytest.mark.parametrize("family", FAMILIES)
    def test_feasible_pairs_are_feasible(self, family):
        rng = np.random.default_rng(55)
        for i in range(200):
            a, b = random_feasible_pair(family, 3 + i % 3, rng)
            assert check_feasible(a, b).feasible, (a, b)

    @pytest.mark.parametrize("family", ["case_I", "case_II", "case_III", "case_V"])
    def test_nonzero_families_avoid_vanishing_cosines(self, family):
        rng = np.random.default_rng(56)
        for _ in range(50):
            a, b = random_feasible_pair(family, 4, rng)
            assert not has_vanishing_cosine(a) and not has_vanishing_cosine(b)

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            random_feasible_pair("case_IV", 3, np.random.default_rng(0))

    @pytest.mark.parametrize("kind", VIOLATIONS)
    def test_violating_pairs_are_infeasible(self, kind):
        rng = np.random.default_rng(57)
        for i in range(200):
            a, b = random_violating_pair(kind, 3 + i % 3, rng)
            v = check_feasible(a, b)
            assert not v.feasible and v.detail

    def test_violating_pairs_keep_cosines_monotone(self):
        rng = np.random.default_rng(58)
        for kind in VIOLATIONS:
            for _ in range(50):
                a, b = random_violating_pair(kind, 3, rng)
                assert all(cb >= ca for ca, cb in zip(a.cosines, b.cosines))

    def test_deterministic_steps_are_deterministic(self):
        rng = np.random.default_rng(59)
        for i in range(300):
            lam = random_point(3 + i % 3, rng, zero_parties=[0] if i % 2 else [])
            if i % 4 == 1:
                lam = lam.replace(z=np.exp(1j * rng.uniform(-3, 3)))
            op = random_deterministic_step(lam, rng)
            assert validate_second(op)
            outs = [out for _, out in apply_symbolic(op)]
            assert all(lu_equivalent(out, outs[0], 1e-9) for out in outs)

    def test_second_form_limits(self):
        rng = np.random.default_rng(60)
        for limit in ("zero", "inf"):
            op = random_second_form(LAM, 1, rng, limit)
            z_first = op.outcomes[0].z_out
            if limit == "zero":
                # w_c's complement is computed, so B lands at rounding level
                assert abs(z_first) <= 1e-12
            else:
                assert z_first is INF
            assert operation_roundtrip_residual(op) <= 1e-8

    def test_extraction_residual_small(self):
        rng = np.random.default_rng(61)
        assert extraction_residual(LAM, rng) <= 1e-10


class TestRunSuite:
    def test_report_format(self):
        report = run_suite("identities", 5, 100)
        assert set(report) == {"suite", "trials", "seed", "max_residual", "violations", "offending_seeds"}
        assert report["violations"] == 0 and report["offending_seeds"] == []

    def test_reproducible(self):
        assert run_suite("roundtrip", 20, 7) == run_suite("roundtrip", 20, 7)

    @pytest.mark.parametrize("suite", SUITES)
    def test_suites_clean(self, suite):
        report = run_suite(suite, 100, 1000, parties=0 if suite == "extraction" else 3)
        assert report["violations"] == 0, report

    def test_unknown_suite(self):
        with pytest.raises(ValueError):
            run_suite("nope", 1, 0)

    def test_style_forced(self):
        report = run_suite("outcome_cosines", 30, 5, style="random_unitaries")
        assert report["max_residual"]["cosine_spread"] <= 1e-12


def test_near_unitary_filter():
    assert is_near_unitary(MeasurementOperators(0, (np.eye(2) / math.sqrt(2), np.eye(2) / math.sqrt(2))))
    assert not is_near_unitary(projective_povm(np.array([1.0, 0.0])))
