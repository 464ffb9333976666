"""Exact likelihood under the two-state symmetric flip model.

Each edge e flips the state crossing it with probability p_e in [0, 1/2].
The per-character quantity computed throughout is the root-free sum over all
internal-state extensions of the product of edge factors, i.e. twice the
sampling probability of the character (the uniform root contributes the
factor 1/2 that is dropped). Values live in [0, 1]; the dataset-level score
is the non-negative number

    cost(X; T, p) = -sum over patterns of N_chi * ln f_chi

carried in log space so multiplicities in the millions never touch a power.
A pattern with zero likelihood (possible once some p_e = 0) makes the cost
+inf, which compares correctly against every finite value.

Two evaluators are provided on purpose: a term-by-term exhaustive sum and a
dynamic program over the tree. They share nothing but the model definition,
so agreement between them is evidence, not tautology.
"""

from __future__ import annotations

import math

from parsiml.characters import DataMatrix
from parsiml.trees import Edge, Tree, _normalize_edge

EXHAUSTIVE_CAP = 24


class EdgeProbs:
    """Per-edge flip probabilities, each in [0, 1/2].

    Values outside the interval are rejected at construction, not clamped;
    a clamped input would hide optimizer bugs behind a legal-looking vector.
    """

    __slots__ = ("_by_edge",)

    def __init__(self, mapping):
        by_edge: dict[Edge, float] = {}
        for (u, v), p in dict(mapping).items():
            p = float(p)
            if not 0.0 <= p <= 0.5:
                raise ValueError(
                    f"edge ({u},{v}) probability {p} outside [0, 1/2]")
            by_edge[_normalize_edge(int(u), int(v))] = p
        self._by_edge = by_edge

    @classmethod
    def uniform(cls, tree: Tree, q: float) -> "EdgeProbs":
        return cls({e: q for e in tree.edges})

    @classmethod
    def from_vector(cls, tree: Tree, values) -> "EdgeProbs":
        values = list(values)
        if len(values) != len(tree.edges):
            raise ValueError(
                f"{len(values)} probabilities for {len(tree.edges)} edges")
        return cls(dict(zip(tree.edges, values)))

    def __getitem__(self, edge) -> float:
        return self._by_edge[_normalize_edge(*edge)]

    def __len__(self) -> int:
        return len(self._by_edge)

    def items(self):
        return sorted(self._by_edge.items())

    def vector(self, tree: Tree) -> list[float]:
        """Values aligned with ``tree.edges``; the key sets must match."""
        ours = set(self._by_edge)
        theirs = set(tree.edges)
        if ours != theirs:
            missing = sorted(theirs - ours)
            extra = sorted(ours - theirs)
            raise ValueError(
                f"edge probabilities do not match the tree "
                f"(missing {missing}, extra {extra})")
        return [self._by_edge[e] for e in tree.edges]

    def __repr__(self):
        inner = ", ".join(f"({u},{v}): {p}" for (u, v), p in self.items())
        return f"EdgeProbs({{{inner}}})"


def _pattern_value(plan, leaf_labels, vec, ch) -> float:
    """One pattern's likelihood via the dynamic program.

    ``plan`` is a postorder rooted traversal; ``vec`` holds raw edge
    probabilities aligned with the tree's edge order. Works for any anchor
    vertex, including a leaf (whose own state then selects the component).
    """
    down: dict[int, tuple[float, float]] = {}
    root, root_children = plan[-1]
    for v, children in plan:
        if not children:
            down[v] = (1.0, 0.0) if ch[leaf_labels[v] - 1] == 0 else (0.0, 1.0)
            continue
        like0 = like1 = 1.0
        for c, ei in children:
            c0, c1 = down[c]
            p = vec[ei]
            stay = 1.0 - p
            like0 *= stay * c0 + p * c1
            like1 *= p * c0 + stay * c1
        down[v] = (like0, like1)
    like0, like1 = down[root]
    if root in leaf_labels:
        return like0 if ch[leaf_labels[root] - 1] == 0 else like1
    return like0 + like1


def char_likelihood_pruning(tree: Tree, probs: EdgeProbs, ch,
                            anchor: int | None = None) -> float:
    """Per-character likelihood via dynamic programming; linear in tree size.

    ``anchor`` picks the vertex the recursion hangs from; the value does not
    depend on it (the quantity has no root), which the tests exercise.
    """
    ch = tuple(int(s) for s in ch)
    if len(ch) != tree.n:
        raise ValueError(f"character has {len(ch)} states, tree has {tree.n} leaves")
    vec = probs.vector(tree)
    plan = tree.rooted_plan(anchor)
    return _pattern_value(plan, tree.leaf_labels, vec, ch)


def char_likelihood_exhaustive(tree: Tree, probs: EdgeProbs, ch,
                               cap: int = EXHAUSTIVE_CAP) -> float:
    """Per-character likelihood as a literal sum over all extensions."""
    ch = tuple(int(s) for s in ch)
    if len(ch) != tree.n:
        raise ValueError(f"character has {len(ch)} states, tree has {tree.n} leaves")
    vec = probs.vector(tree)
    internal = tree.internal_vertices()
    m = len(internal)
    if m > cap:
        raise ValueError(f"{m} internal vertices exceeds the exhaustive cap ({cap})")
    state = {}
    for v, lab in tree.leaf_labels.items():
        state[v] = ch[lab - 1]
    total = 0.0
    for bits in range(1 << m):
        for j, v in enumerate(internal):
            state[v] = (bits >> j) & 1
        term = 1.0
        for i, (u, v) in enumerate(tree.edges):
            p = vec[i]
            term *= p if state[u] != state[v] else 1.0 - p
        total += term
    return total


def pattern_likelihoods(tree: Tree, probs: EdgeProbs, patterns,
                        anchor: int | None = None) -> list[float]:
    """Likelihood of each pattern in one pass over a shared plan."""
    vec = probs.vector(tree)
    plan = tree.rooted_plan(anchor)
    labels = tree.leaf_labels
    return [_pattern_value(plan, labels, vec, tuple(ch)) for ch in patterns]


def modified_loglik(tree: Tree, probs: EdgeProbs, data: DataMatrix) -> float:
    """Dataset cost: -sum of N_chi * ln f_chi, always >= 0, +inf allowed.

    Patterns are visited in their stored (sorted) order so repeated runs sum
    in the same order and reports reproduce bit for bit.
    """
    if data.n != tree.n:
        raise ValueError(f"matrix has {data.n} leaves, tree has {tree.n}")
    vec = probs.vector(tree)
    plan = tree.rooted_plan()
    labels = tree.leaf_labels
    total = 0.0
    for ch, mult in data.patterns:
        value = _pattern_value(plan, labels, vec, ch)
        if value <= 0.0:
            return math.inf
        total -= mult * math.log(value)
    # roundoff guard: each pattern value is <= 1 exactly, so the true total
    # is non-negative
    return total if total > 0.0 else 0.0


def write_probs(tree: Tree, probs: EdgeProbs) -> str:
    """Sidecar text: one "u v p" line per edge, in edge order."""
    vec = probs.vector(tree)
    lines = [f"{u} {v} {p!r}" for (u, v), p in zip(tree.edges, vec)]
    return "\n".join(lines) + "\n"


def parse_probs(text: str, tree: Tree) -> EdgeProbs:
    """Parse the "u v p" sidecar; every tree edge must appear exactly once."""
    mapping: dict[Edge, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        parts = stripped.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'u v p', got {raw!r}")
        try:
            u, v, p = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ValueError(f"line {lineno}: expected 'u v p', got {raw!r}")
        e = _normalize_edge(u, v)
        if e in mapping:
            raise ValueError(f"line {lineno}: duplicate edge ({u},{v})")
        mapping[e] = p
    probs = EdgeProbs(mapping)
    probs.vector(tree)  # validates coverage
    return probs
