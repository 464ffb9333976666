import json
import math

import pytest

from parsiml import (DataMatrix, EdgeProbs, OptimizerConfig,
                     char_likelihood_exhaustive, normalized_cost,
                     pad_constant_sites, pad_with_count, quantities_for,
                     random_instance, verify_claim1, verify_claim2,
                     verify_claim3, verify_prop1_chain)
from parsiml.parsimony import mp_search


@pytest.fixture
def quartet_padded(quartet_matrix):
    return pad_constant_sites(quartet_matrix, 0.5)


class TestQuantities:
    def test_exact_values(self, quartet, quartet_padded):
        qty = quantities_for(quartet, quartet_padded)
        assert qty.score == 3
        assert qty.n_edges == 5
        assert qty.total_chars == 66
        assert qty.q == 3 / 330
        assert qty.p_bar == 3 * math.log(66) / 64
        assert qty.normalizer == math.log(66)

    def test_report_reproduces_quantities(self, quartet, quartet_padded):
        report = verify_claim1(quartet_padded, quartet)
        qty = quantities_for(quartet, quartet_padded)
        assert abs(report.q - qty.q) < 1e-15
        assert abs(report.p_bar - qty.p_bar) < 1e-15


class TestNormalizedCost:
    def test_all_constant_zero(self, quartet):
        base = DataMatrix.from_columns(4, [(0, 0, 0, 0)] * 2)
        padded = pad_constant_sites(base, 0.5)
        probs = EdgeProbs.uniform(quartet, 0.0)
        assert normalized_cost(quartet, probs, padded) == 0.0

    def test_cross_checked_by_exhaustive_evaluator(self, quartet,
                                                   quartet_padded):
        qty = quantities_for(quartet, quartet_padded)
        probs = EdgeProbs.uniform(quartet, qty.q)
        engine = normalized_cost(quartet, probs, quartet_padded)
        by_hand = 0.0
        for ch, mult in quartet_padded.padded.patterns:
            by_hand -= mult * math.log(
                char_likelihood_exhaustive(quartet, probs, ch))
        by_hand /= math.log(66)
        assert engine == pytest.approx(by_hand, rel=1e-12)
        assert engine >= (1 - 5 * 0.5) * qty.score
        assert engine <= (1 + 2 * 0.5) * qty.score

    def test_infinite_cost_propagates(self, quartet, quartet_padded):
        probs = EdgeProbs.uniform(quartet, 0.0)
        assert normalized_cost(quartet, probs, quartet_padded) == math.inf


class TestClaim1:
    def test_quartet_passes_with_margin(self, quartet, quartet_padded):
        report = verify_claim1(quartet_padded, quartet)
        assert report.verdict == "pass"
        assert report.bound == 6.0
        assert report.margin > 0
        assert report.details["per_char_violations"] == 0

    def test_degenerate_all_constant(self, quartet):
        base = DataMatrix.from_columns(4, [(0, 0, 0, 0), (1, 1, 1, 1)])
        padded = pad_constant_sites(base, 0.5)
        report = verify_claim1(padded, quartet)
        assert report.verdict == "pass"
        assert "degenerate" in report.note
        assert report.lhs == 0.0
        assert report.margin == 0.0

    def test_small_instance_grades_inconclusive(self, quartet, quartet_matrix):
        padded = pad_with_count(quartet_matrix, 8)
        report = verify_claim1(padded, quartet, epsilon=0.05)
        assert report.verdict == "inconclusive"
        assert not report.preconditions_met

    def test_small_instance_fails_when_threshold_lowered(self, quartet,
                                                         quartet_matrix):
        padded = pad_with_count(quartet_matrix, 8)
        report = verify_claim1(padded, quartet, epsilon=0.05, m_min=1)
        assert report.verdict == "fail"


class TestClaim2:
    def test_quartet_no_violations(self, quartet, quartet_padded):
        report = verify_claim2(quartet_padded, quartet, trials=300, seed=7)
        assert report.verdict == "pass"
        assert report.details["violations"] == 0
        assert report.lhs > report.bound == 3.0
        assert report.trials == 300

    def test_boundary_probe(self, quartet, quartet_padded):
        qty = quantities_for(quartet, quartet_padded)
        for background in (0.0, 0.01):
            vec = [background] * 5
            vec[quartet.edge_index(5, 6)] = qty.p_bar * (1 + 1e-6)
            cost = normalized_cost(quartet,
                                   EdgeProbs.from_vector(quartet, vec),
                                   quartet_padded)
            assert cost > qty.score

    def test_vacuous_when_threshold_above_half(self, quartet, quartet_matrix):
        padded = pad_with_count(quartet_matrix, 2)
        report = verify_claim2(padded, quartet, trials=10, seed=0)
        assert report.verdict == "pass"
        assert "vacuous" in report.note
        assert report.trials == 0
        assert report.margin == math.inf

    def test_seed_reproducible(self, quartet, quartet_padded):
        a = verify_claim2(quartet_padded, quartet, trials=50, seed=5)
        b = verify_claim2(quartet_padded, quartet, trials=50, seed=5)
        assert a.lhs == b.lhs


class TestClaim3:
    def test_quartet_trivial_bound(self, quartet, quartet_padded):
        report = verify_claim3(quartet_padded, quartet, trials=100, seed=7)
        assert report.verdict == "pass"
        assert report.bound == (1 - 5 * 0.5) * 3
        assert report.bound < 0
        assert report.details["per_char_violations"] == 0

    def test_includes_grid_and_probes(self, quartet, quartet_padded):
        report = verify_claim3(quartet_padded, quartet, trials=10, seed=7)
        # 10 random + canonical q + optimizer probe + 5^5 grid + 6 threshold probes
        assert report.trials == 10 + 1 + 1 + 5 ** 5 + 6
        assert report.details["threshold_probes"] is True

    def test_undersized_padding_is_inconclusive(self, quartet):
        base = random_instance(4, 30, seed=1)
        tree = mp_search(base)[1][0]
        padded = pad_with_count(base, 2)
        report = verify_claim3(padded, tree, trials=50, seed=3, epsilon=0.01)
        assert report.verdict == "inconclusive"
        assert report.lhs < report.bound
        assert not report.preconditions_met

    def test_degenerate_all_constant(self, quartet):
        base = DataMatrix.from_columns(4, [(1, 1, 1, 1)])
        padded = pad_constant_sites(base, 0.5)
        report = verify_claim3(padded, quartet)
        assert report.verdict == "pass"
        assert "degenerate" in report.note


class TestProp1Chain:
    def test_quartet_instance(self, quartet_matrix):
        report = verify_prop1_chain(quartet_matrix, 0.5)
        assert report.verdict == "pass"
        assert report.lhs <= report.bound
        assert report.details["is_mp_optimum"] is True
        assert report.details["ml_tree"] in report.details["mp_optima"]
        assert set(report.details["mp_optima"]) == \
            {"(1,2,(3,4));", "(1,(2,4),3);"}

    def test_all_constant_degenerate(self):
        base = DataMatrix.from_columns(4, [(0, 0, 0, 0)] * 2)
        report = verify_prop1_chain(base, 0.5)
        assert report.verdict == "pass"
        assert "degenerate" in report.note
        assert report.details["ml_tie_count"] == 3

    def test_ratio_not_asserted_at_large_epsilon(self, quartet_matrix):
        report = verify_prop1_chain(quartet_matrix, 0.5)
        assert report.details["ratio_bound"] is None
        assert "epsilon >= 0.2" in report.note or report.note == ""

    def test_small_batch(self):
        hits = 0
        for seed in range(5):
            base = random_instance(5, 3 + seed % 4, seed)
            report = verify_prop1_chain(base, 0.5, OptimizerConfig(seed=seed))
            assert report.verdict == "pass"
            assert report.lhs <= report.bound
            hits += report.details["is_mp_optimum"]
        assert hits >= 4


class TestReportSerialization:
    def test_json_schema(self, quartet, quartet_padded):
        report = verify_claim1(quartet_padded, quartet)
        report.runtime_ms = None
        payload = json.loads(report.to_json())
        assert payload["verdict"] == "pass"
        assert set(payload["quantities"]) == {"epsilon", "M", "N_c", "q", "p_bar"}
        assert payload["quantities"]["M"] == 8
        assert payload["quantities"]["N_c"] == 64
        assert payload["runtime_ms"] is None

    def test_json_handles_infinity(self, quartet, quartet_matrix):
        padded = pad_with_count(quartet_matrix, 2)
        report = verify_claim2(padded, quartet)
        payload = json.loads(report.to_json())
        assert payload["lhs"] == "inf"

    def test_csv_single_row(self, quartet, quartet_padded):
        import csv as csv_mod
        import io
        report = verify_claim2(quartet_padded, quartet, trials=20, seed=1)
        report.runtime_ms = None
        row = report.to_csv_row()
        assert row.count("\n") == 1
        cells = next(csv_mod.reader(io.StringIO(row)))
        assert len(cells) == 14
        assert cells[0] == "claim2"
        assert cells[10] == "pass"

    def test_reports_reproducible(self, quartet, quartet_padded):
        a = verify_claim2(quartet_padded, quartet, trials=50, seed=9)
        b = verify_claim2(quartet_padded, quartet, trials=50, seed=9)
        a.runtime_ms = b.runtime_ms = None
        assert a.to_json() == b.to_json()
