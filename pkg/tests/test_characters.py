import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parsiml import (DataMatrix, MatrixFormatError, PaddingCapError,
                     complement, is_constant, pad_constant_sites,
                     pad_with_count, parse_matrix, random_instance,
                     write_matrix)

characters = st.integers(1, 8).flatmap(
    lambda n: st.lists(st.integers(0, 1), min_size=n, max_size=n).map(tuple))


class TestCharacterOps:
    def test_constant(self):
        assert is_constant((0, 0, 0, 0))
        assert is_constant((1, 1))
        assert not is_constant((0, 0, 1, 1))

    def test_complement(self):
        assert complement((0, 0, 1, 1)) == (1, 1, 0, 0)

    @given(characters)
    def test_complement_is_involution(self, ch):
        assert complement(complement(ch)) == ch

    @given(characters)
    def test_complement_flips_constancy_class(self, ch):
        assert is_constant(ch) == is_constant(complement(ch))


class TestDataMatrix:
    def test_compression_merges_duplicates(self):
        m = DataMatrix.from_columns(4, [(0, 0, 1, 1), (0, 0, 1, 1)])
        assert m.k == 2
        assert m.patterns == (((0, 0, 1, 1), 2),)

    def test_k_counts_multiplicities(self, quartet_matrix):
        assert quartet_matrix.k == 2
        assert len(quartet_matrix.patterns) == 2

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="k >= 1"):
            DataMatrix(4, ())

    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError):
            DataMatrix.from_columns(4, [(0, 1)])

    def test_non_binary_rejected(self):
        with pytest.raises(ValueError):
            DataMatrix.from_columns(2, [(0, 2)])

    def test_expanded_columns_preserve_k(self):
        m = DataMatrix.from_columns(3, [(0, 0, 1)] * 5 + [(1, 0, 1)])
        assert len(list(m.expanded_columns())) == m.k == 6


class TestPadding:
    @pytest.mark.parametrize("n,k,eps,size,pad,k_padded", [
        (4, 2, 0.5, 8, 64, 66),
        (4, 2, 1.0, 8, 8, 10),
        (10, 30, 0.25, 30, 810000, 810030),
    ])
    def test_arithmetic(self, n, k, eps, size, pad, k_padded):
        cols = [tuple((i + j) % 2 for i in range(n)) for j in range(k)]
        base = DataMatrix.from_columns(n, cols)
        padded = pad_constant_sites(base, eps)
        assert padded.params.size == size
        assert padded.params.pad_count == pad
        assert padded.padded.k == k_padded

    def test_zero_block_present(self, quartet_matrix):
        padded = pad_constant_sites(quartet_matrix, 0.5)
        assert padded.padded.multiplicity((0, 0, 0, 0)) == 64

    def test_merges_existing_zero_pattern(self):
        base = DataMatrix.from_columns(4, [(0, 0, 0, 0), (0, 1, 0, 1)])
        padded = pad_constant_sites(base, 1.0)
        assert padded.padded.multiplicity((0, 0, 0, 0)) == 1 + 8
        assert padded.padded.k == base.k + 8

    def test_cap_refusal_reports_size(self, quartet_matrix):
        with pytest.raises(PaddingCapError) as err:
            pad_constant_sites(quartet_matrix, 0.25, cap=1000)
        assert err.value.pad_count == 8 ** 4
        assert "4096" in str(err.value)

    def test_epsilon_domain(self, quartet_matrix):
        for bad in (0.0, -0.5, 1.5):
            with pytest.raises(ValueError):
                pad_constant_sites(quartet_matrix, bad)

    def test_explicit_count(self, quartet_matrix):
        padded = pad_with_count(quartet_matrix, 100)
        assert padded.params.pad_count == 100
        assert padded.params.epsilon is None
        assert padded.padded.k == 102

    @given(st.integers(3, 6), st.integers(1, 10),
           st.floats(0.2, 1.0, allow_nan=False))
    @settings(max_examples=40)
    def test_pad_count_at_least_size(self, n, k, eps):
        base = random_instance(n, k, seed=0)
        try:
            padded = pad_constant_sites(base, eps)
        except PaddingCapError:
            return
        assert padded.params.pad_count >= padded.params.size
        assert padded.params.size == max(2 * n, k)


class TestMatrixIO:
    def test_quartet_file(self):
        text = "4 2\n1 00\n2 01\n3 10\n4 11\n"
        m = parse_matrix(text)
        assert m.k == 2
        assert m.patterns == (((0, 0, 1, 1), 1), ((0, 1, 0, 1), 1))

    def test_duplicate_columns_compress(self):
        m = parse_matrix("4 2\n1 00\n2 00\n3 11\n4 11\n")
        assert m.patterns == (((0, 0, 1, 1), 2),)
        assert m.k == 2

    def test_comments_and_spaced_bits(self):
        text = "# generated\n4 2   # header\n1 0 0\n2 0 1\n3 1 0\n4 1 1\n"
        assert parse_matrix(text).k == 2

    def test_round_trip_expanded(self, quartet_matrix):
        assert parse_matrix(write_matrix(quartet_matrix)) == quartet_matrix

    def test_round_trip_compressed(self):
        m = DataMatrix.from_columns(3, [(0, 0, 1)] * 4 + [(1, 1, 1), (0, 1, 0)])
        text = write_matrix(m, compressed=True)
        assert "counts" in text
        assert parse_matrix(text) == m

    def test_empty_matrix_rejected(self):
        with pytest.raises(MatrixFormatError, match="k >= 1 required"):
            parse_matrix("4 0\n1 \n2 \n3 \n4 \n")

    def test_ragged_row(self):
        with pytest.raises(MatrixFormatError, match="line 3.*expected 2"):
            parse_matrix("4 2\n1 00\n2 011\n3 10\n4 11\n")

    def test_non_binary_symbol(self):
        with pytest.raises(MatrixFormatError, match="line 2.*0/1"):
            parse_matrix("4 2\n1 0x\n2 01\n3 10\n4 11\n")

    def test_duplicate_leaf_id(self):
        with pytest.raises(MatrixFormatError, match="line 3: duplicate leaf id 1"):
            parse_matrix("4 2\n1 00\n1 01\n3 10\n4 11\n")

    def test_leaf_id_out_of_range(self):
        with pytest.raises(MatrixFormatError, match="out of range"):
            parse_matrix("4 2\n1 00\n2 01\n3 10\n9 11\n")

    def test_missing_header(self):
        with pytest.raises(MatrixFormatError, match="header"):
            parse_matrix("")

    def test_counts_must_match_k(self):
        with pytest.raises(MatrixFormatError, match="counts sum to 3"):
            parse_matrix("4 2\ncounts 1 2\n1 00\n2 01\n3 10\n4 11\n")


class TestRandomInstance:
    def test_deterministic(self):
        assert random_instance(5, 40, seed=11) == random_instance(5, 40, seed=11)

    def test_seeds_differ(self):
        assert random_instance(5, 40, seed=1) != random_instance(5, 40, seed=2)

    def test_constant_fraction_near_expectation(self):
        # 2 of the 32 equiprobable 5-leaf characters are constant
        m = random_instance(5, 1000, seed=3)
        constant = sum(mult for ch, mult in m.patterns if is_constant(ch))
        assert abs(constant / 1000 - 2 / 32) <= 0.03

    def test_k_zero_rejected(self):
        with pytest.raises(ValueError, match="k >= 1"):
            random_instance(5, 0, seed=0)
