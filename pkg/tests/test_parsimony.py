import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parsiml import (DataMatrix, brute_force_score, canonical_newick,
                     complement, enumerate_topologies, fitch_score,
                     is_constant, mp_search, pad_constant_sites,
                     parse_newick, parsimony_score)

from conftest import all_characters, caterpillar


class TestFitch:
    def test_constant_character(self, quartet):
        assert fitch_score(quartet, (0, 0, 0, 0)) == 0

    def test_split_compatible(self, quartet):
        # frozen from brute force over the 4 internal assignments
        assert fitch_score(quartet, (0, 0, 1, 1)) == 1
        assert brute_force_score(quartet, (0, 0, 1, 1)) == 1

    def test_split_incompatible(self, quartet):
        assert fitch_score(quartet, (0, 1, 0, 1)) == 2
        assert brute_force_score(quartet, (0, 1, 0, 1)) == 2

    def test_two_leaf(self, two_leaf):
        assert fitch_score(two_leaf, (0, 1)) == 1
        assert fitch_score(two_leaf, (0, 0)) == 0

    def test_length_mismatch(self, quartet):
        with pytest.raises(ValueError, match="4 leaves"):
            fitch_score(quartet, (0, 1))

    def test_polytomy_star(self):
        # (0,0,1,1) on the 4-star needs two flips no matter the center state;
        # a plain intersect-else-union fold would undercount this as one
        star = parse_newick("(1,2,3,4);")
        assert fitch_score(star, (0, 0, 1, 1)) == 2
        assert brute_force_score(star, (0, 0, 1, 1)) == 2

    def test_polytomy_full_sweep(self):
        tree = parse_newick("(1,2,(3,4,5));")
        for ch in all_characters(5):
            assert fitch_score(tree, ch) == brute_force_score(tree, ch)

    def test_matches_brute_force_on_quartets(self):
        for tree in enumerate_topologies(4):
            for ch in all_characters(4):
                assert fitch_score(tree, ch) == brute_force_score(tree, ch)

    @given(st.integers(0, 31))
    def test_caterpillar_matches_brute_force(self, bits):
        tree = caterpillar(5)
        ch = tuple((bits >> i) & 1 for i in range(5))
        assert fitch_score(tree, ch) == brute_force_score(tree, ch)


class TestBruteForce:
    def test_two_leaf_flip(self, two_leaf):
        assert brute_force_score(two_leaf, (0, 1)) == 1
        assert brute_force_score(two_leaf, (0, 0)) == 0

    def test_cap_refused(self):
        tree = caterpillar(28)  # 26 internal vertices
        with pytest.raises(ValueError, match="cap"):
            brute_force_score(tree, (0,) * 28)


class TestScoreProperties:
    @given(st.integers(3, 6), st.integers(0, 104), st.data())
    @settings(max_examples=80, deadline=None)
    def test_bounds_and_symmetry(self, n, index, data):
        from parsiml import topology_count
        tree = list(enumerate_topologies(n))[index % topology_count(n)]
        ch = tuple(data.draw(st.lists(st.integers(0, 1), min_size=n,
                                      max_size=n)))
        score = fitch_score(tree, ch)
        assert 0 <= score <= min(ch.count(0), ch.count(1))
        assert (score == 0) == is_constant(ch)
        assert score == fitch_score(tree, complement(ch))


class TestMatrixScore:
    def test_weighted_sum(self, quartet, quartet_matrix):
        assert parsimony_score(quartet, quartet_matrix) == 3

    def test_multiplicities_weigh_in(self, quartet):
        m = DataMatrix.from_columns(4, [(0, 1, 0, 1)] * 5)
        assert parsimony_score(quartet, m) == 10

    def test_constant_matrix_scores_zero(self, quartet):
        m = DataMatrix.from_columns(4, [(0, 0, 0, 0), (1, 1, 1, 1)])
        assert parsimony_score(quartet, m) == 0

    def test_padding_leaves_score_unchanged(self, quartet, quartet_matrix):
        padded = pad_constant_sites(quartet_matrix, 0.5)
        assert parsimony_score(quartet, padded.padded) == \
            parsimony_score(quartet, quartet_matrix) == 3

    def test_compression_invariance(self, quartet):
        columns = [(0, 0, 1, 1)] * 3 + [(0, 1, 0, 1)] * 2 + [(1, 0, 0, 1)]
        compressed = DataMatrix.from_columns(4, columns)
        by_hand = sum(fitch_score(quartet, ch) for ch in columns)
        assert parsimony_score(quartet, compressed) == by_hand

    def test_dimension_mismatch(self, quartet):
        with pytest.raises(ValueError):
            parsimony_score(quartet, DataMatrix.from_columns(5, [(0, 1, 0, 1, 0)]))


class TestSearch:
    def test_tie_between_compatible_splits(self, quartet_matrix):
        score, optima = mp_search(quartet_matrix)
        assert score == 3
        assert [canonical_newick(t) for t in optima] == \
            ["(1,(2,4),3);", "(1,2,(3,4));"]

    def test_unique_optimum(self):
        m = DataMatrix.from_columns(4, [(0, 0, 1, 1)])
        score, optima = mp_search(m)
        assert score == 1
        assert [canonical_newick(t) for t in optima] == ["(1,2,(3,4));"]

    def test_all_constant_ties_everything(self):
        m = DataMatrix.from_columns(4, [(1, 1, 1, 1)] * 2)
        score, optima = mp_search(m)
        assert score == 0
        assert len(optima) == 3

    def test_threaded_matches_serial(self, quartet_matrix):
        serial = mp_search(quartet_matrix, n_jobs=1)
        threaded = mp_search(quartet_matrix, n_jobs=2)
        assert serial[0] == threaded[0]
        assert [canonical_newick(t) for t in serial[1]] == \
            [canonical_newick(t) for t in threaded[1]]

    def test_cap_respected(self):
        m = DataMatrix.from_columns(9, [tuple([0, 1] * 4 + [0])])
        from parsiml import TopologyCapError
        with pytest.raises(TopologyCapError):
            mp_search(m)
