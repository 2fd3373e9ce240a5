import math

import numpy as np
import pytest

from rank2locc.lambda_space import Kind, LambdaPoint, StateClass, concurrence, lu_equivalent, representative_state
from rank2locc.local_ops import build_measurement_operators
from rank2locc.oracle import random_feasible_pair, random_point
from rank2locc.simulator import (
    DecompositionError,
    ProtocolPlan,
    SimulationDivergence,
    apply_local,
    apply_unitaries,
    branch_report,
    certify,
    decompose,
    execute_protocol,
    extract_lambda,
    random_unitary,
    realign,
    reduced_density,
)
from rank2locc.transform import aggregate_residuals, cosine_raiser, ghz_point, plan_protocol, symbolic_branches

GHZ3 = representative_state(ghz_point(3))


def basis_state(bits):
    vec = np.zeros(2 ** len(bits), dtype=complex)
    vec[int("".join(map(str, bits)), 2)] = 1.0
    return vec


def scramble(state, parties, rng):
    return apply_unitaries(state, [random_unitary(rng) for _ in range(parties)])


class TestApplyLocal:
    def test_identity(self):
        prob, out = apply_local(GHZ3, 1, np.eye(2))
        assert prob == pytest.approx(1.0, abs=1e-15)
        np.testing.assert_allclose(out, GHZ3, atol=1e-15)

    @pytest.mark.parametrize("party", [0, 1, 2])
    def test_projector_on_ghz(self, party):
        prob, out = apply_local(GHZ3, party, np.diag([1.0, 0.0]))
        assert prob == pytest.approx(0.5, abs=1e-15)
        np.testing.assert_allclose(out, basis_state([0, 0, 0]), atol=1e-15)

    def test_cosine_raiser_on_ghz_is_even(self):
        ops = build_measurement_operators(cosine_raiser(ghz_point(3), 1, 0.4)).operators
        probs = [apply_local(GHZ3, 1, m)[0] for m in ops]
        assert probs == pytest.approx([0.5, 0.5], abs=1e-14)

    def test_zero_probability_branch_is_flagged(self):
        assert apply_local(basis_state([0, 0, 0]), 0, np.diag([0.0, 1.0])) == (0.0, None)

    def test_party_zero_is_most_significant(self):
        flip = np.array([[0, 1], [1, 0]])
        _, out = apply_local(basis_state([0, 0, 0]), 0, flip)
        np.testing.assert_allclose(out, basis_state([1, 0, 0]))


class TestReducedDensity:
    def test_ghz(self):
        for k in range(3):
            np.testing.assert_allclose(reduced_density(GHZ3, k), np.eye(2) / 2, atol=1e-15)

    def test_product(self):
        np.testing.assert_allclose(reduced_density(basis_state([0, 0, 0]), 2), np.diag([1.0, 0.0]))

    def test_worked_concurrence(self):
        rho = reduced_density(representative_state(LambdaPoint(2, (0.5, 0.5, 0.5))), 0)
        two_sqrt_det = 2 * math.sqrt(np.linalg.det(rho).real)
        expected = 2 * 2 * math.sqrt(0.75) * math.sqrt(1 - 0.0625) / 5.5
        assert two_sqrt_det == pytest.approx(expected, abs=1e-12)

    def test_hermitian_unit_trace_positive(self):
        rng = np.random.default_rng(40)
        for _ in range(100):
            state = scramble(representative_state(random_point(4, rng)), 4, rng)
            for k in range(4):
                rho = reduced_density(state, k)
                np.testing.assert_allclose(rho, rho.conj().T, atol=1e-14)
                assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)
                assert np.linalg.eigvalsh(rho).min() >= -1e-14

    def test_concurrence_consistency(self):
        rng = np.random.default_rng(41)
        for _ in range(300):
            lam = random_point(int(rng.integers(3, 7)), rng)
            state = representative_state(lam)
            for k in range(lam.parties):
                det = max(0.0, np.linalg.det(reduced_density(state, k)).real)
                assert 2 * math.sqrt(det) == pytest.approx(concurrence(lam, k), abs=1e-9)


class TestExtractLambda:
    def test_ghz(self):
        assert extract_lambda(GHZ3) == ghz_point(3)

    def test_worked_point(self):
        got = extract_lambda(representative_state(LambdaPoint(2, (0.5, 0.5, 0.5))))
        assert got.z == pytest.approx(2.0, abs=1e-12)
        assert got.cosines == pytest.approx((0.5, 0.5, 0.5), abs=1e-12)

    def test_inverse_modulus_comes_back_canonical(self):
        got = extract_lambda(representative_state(LambdaPoint(0.5, (0.5, 0.5, 0.5))))
        assert got.z == pytest.approx(2.0, abs=1e-12)

    def test_product(self):
        assert extract_lambda(basis_state([0, 0, 0])) == StateClass(Kind.PRODUCT)

    def test_w_state_is_not_rank_two(self):
        w = (basis_state([1, 0, 0]) + basis_state([0, 1, 0]) + basis_state([0, 0, 1])) / math.sqrt(3)
        with pytest.raises(DecompositionError):
            extract_lambda(w)

    def test_round_trip_under_local_unitaries(self):
        rng = np.random.default_rng(42)
        for _ in range(300):
            lam = random_point(int(rng.integers(3, 7)), rng)
            state = scramble(representative_state(lam), lam.parties, rng)
            got = extract_lambda(state)
            assert lu_equivalent(got, lam, 1e-8)

    def test_decomposition_reconstructs_state(self):
        rng = np.random.default_rng(43)
        for _ in range(100):
            lam = random_point(4, rng)
            dec = decompose(representative_state(lam))
            assert np.all(dec.cosines >= 0)
            assert np.allclose(np.linalg.norm(dec.f1, axis=1), 1.0)


class TestRealign:
    def test_lands_on_representative(self):
        rng = np.random.default_rng(44)
        for _ in range(100):
            lam = random_point(4, rng)
            state = scramble(representative_state(lam), 4, rng)
            aligned, gap = realign(state, lam)
            assert gap <= 1e-9
            np.testing.assert_allclose(aligned, representative_state(lam), atol=1e-9)

    def test_product_branch_diverges(self):
        with pytest.raises(SimulationDivergence):
            realign(basis_state([0, 0, 0]), ghz_point(3))


class TestExecuteProtocol:
    def test_empty_plan(self):
        lam = LambdaPoint(2, (0.6, 0.5, 0.5))
        (branch,) = execute_protocol(plan_protocol(lam, lam))
        assert branch.path == () and branch.probability == pytest.approx(1.0)
        assert lu_equivalent(branch.final_lambda, lam)

    def test_ghz_to_vanishing_target(self):
        target = LambdaPoint(2, (0, 0.3, 0.6))
        plan = plan_protocol(ghz_point(3), target)
        branches = execute_protocol(plan)
        assert len(branches) <= 8
        assert sum(b.probability for b in branches) == pytest.approx(1.0, abs=1e-9)
        assert all(lu_equivalent(b.final_lambda, target, 1e-8) for b in branches)
        assert certify(plan, branches)[0]

    def test_case_one_step(self):
        plan = plan_protocol(LambdaPoint(2, (0.6, 0.5, 0.5)), LambdaPoint(3, (0.8, 0.5, 0.5)))
        branches = execute_protocol(plan)
        assert [b.probability for b in branches] == pytest.approx([7 / 8, 1 / 8], abs=1e-12)

    def test_probabilities_match_symbolic_tracking(self):
        rng = np.random.default_rng(45)
        for family in ("vanishing_target", "case_I", "case_II", "vanishing_source"):
            for _ in range(10):
                plan = plan_protocol(*random_feasible_pair(family, 4, rng))
                executed = {b.path: b.probability for b in execute_protocol(plan)}
                symbolic = {path: p for path, p, _ in symbolic_branches(plan) if p >= 1e-14}
                assert executed.keys() == symbolic.keys()
                for path, p in symbolic.items():
                    assert executed[path] == pytest.approx(p, abs=1e-10)
                assert max(aggregate_residuals(plan).values()) <= 1e-8

    def test_wrong_expected_point_is_caught(self):
        plan = plan_protocol(LambdaPoint(2, (0.6, 0.5, 0.5)), LambdaPoint(3, (0.8, 0.5, 0.5)))
        obj = plan.to_json()
        obj["steps"][0]["expected"]["z"] = {"re": 4.0, "im": 0.0}
        obj["target"]["z"] = {"re": 4.0, "im": 0.0}
        with pytest.raises(SimulationDivergence):
            execute_protocol(ProtocolPlan.from_json(obj))

    def test_branch_report_format(self):
        plan = plan_protocol(LambdaPoint(2, (0.6, 0.5, 0.5)), LambdaPoint(3, (0.8, 0.5, 0.5)))
        report = branch_report(execute_protocol(plan))
        assert [r["path"] for r in report] == [[0], [1]]
        assert set(report[0]) == {"path", "prob", "lambda"}

    def test_certify_rejects_missing_probability(self):
        plan = plan_protocol(LambdaPoint(2, (0.6, 0.5, 0.5)), LambdaPoint(3, (0.8, 0.5, 0.5)))
        branches = execute_protocol(plan)
        ok, message = certify(plan, branches[:1])
        assert not ok and "sum to" in message
