import pytest

from parsiml import DataMatrix, Tree, parse_newick


@pytest.fixture
def quartet():
    """The 12|34 split on four leaves."""
    return parse_newick("((1,2),(3,4));")


@pytest.fixture
def two_leaf():
    return parse_newick("(1,2);")


@pytest.fixture
def quartet_matrix():
    """Two characters whose best trees tie: 12|34 scores 1+2, 13|24 scores 2+1."""
    return DataMatrix.from_columns(4, [(0, 0, 1, 1), (0, 1, 0, 1)])


def caterpillar(n: int) -> Tree:
    """The maximally unbalanced binary topology on leaves 1..n (n >= 4)."""
    internal = list(range(n + 1, 2 * n - 1))
    edges = [(1, internal[0]), (2, internal[0])]
    for idx in range(1, len(internal)):
        edges.append((internal[idx - 1], internal[idx]))
        edges.append((idx + 2, internal[idx]))
    edges.append((internal[-1], n))
    return Tree(n, edges)


def all_characters(n: int):
    """Every binary character on n leaves, in numeric order."""
    for bits in range(1 << n):
        yield tuple((bits >> i) & 1 for i in range(n))
