"""Unrooted leaf-labeled trees with explicit edge sets.

Leaves carry labels 1..n so character vectors can be indexed directly by
label; internal vertices use ids n+1 and up. Trees are immutable after
construction and every operation in this module is a pure function, so
concurrent use needs no coordination.

Canonical serialization: the tree is rooted at the internal vertex adjacent
to the leaf labeled 1 (for two leaves, at leaf 1 itself) and children are
sorted recursively by the smallest leaf label in their subtree. Two trees
describe the same topology exactly when their canonical Newick strings match.
"""

from __future__ import annotations

Edge = tuple[int, int]

DEFAULT_TOPOLOGY_CAP = 8


class NewickError(ValueError):
    """Malformed Newick input. ``position`` is the offending character index."""

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (position {position})"
        super().__init__(message)
        self.position = position


class TopologyCapError(ValueError):
    """Enumeration request above the configured leaf cap."""


def _normalize_edge(u: int, v: int) -> Edge:
    if u == v:
        raise ValueError(f"self-loop on vertex {u}")
    return (u, v) if u < v else (v, u)


class Tree:
    """An unrooted tree on leaves labeled 1..n.

    Parameters
    ----------
    n : int
        Number of leaves.
    edges : iterable of (int, int)
        Undirected edges; orientation and order are irrelevant.
    leaf_labels : mapping, optional
        Leaf vertex id -> label in 1..n. Defaults to the identity on 1..n,
        which is what every constructor in this package produces. The field
        exists so that label bijection violations are representable and can
        be reported by :func:`validate`.
    """

    __slots__ = ("n", "edges", "vertices", "leaf_labels",
                 "_adj", "_edge_index", "_label_to_leaf", "_canonical", "_plans")

    def __init__(self, n: int, edges, leaf_labels=None):
        self.n = int(n)
        if self.n < 1:
            raise ValueError("leaf count must be positive")
        seen: set[Edge] = set()
        normalized = []
        for u, v in edges:
            e = _normalize_edge(int(u), int(v))
            if e in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e)
            normalized.append(e)
        self.edges: tuple[Edge, ...] = tuple(sorted(normalized))
        if not self.edges:
            raise ValueError("a tree needs at least one edge")
        verts: set[int] = set()
        for u, v in self.edges:
            verts.add(u)
            verts.add(v)
        self.vertices = frozenset(verts)
        if leaf_labels is None:
            leaf_labels = {v: v for v in range(1, self.n + 1)}
        self.leaf_labels = dict(leaf_labels)

        adj: dict[int, list[int]] = {v: [] for v in verts}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        self._adj = {v: tuple(sorted(ws)) for v, ws in adj.items()}
        self._edge_index = {e: i for i, e in enumerate(self.edges)}
        self._label_to_leaf = {lab: v for v, lab in self.leaf_labels.items()}
        self._canonical: str | None = None
        self._plans: dict = {}

    # -- structure queries -------------------------------------------------

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def is_leaf(self, v: int) -> bool:
        return v in self.leaf_labels

    def leaf_for_label(self, label: int) -> int:
        return self._label_to_leaf[label]

    def internal_vertices(self) -> tuple[int, ...]:
        return tuple(sorted(v for v in self.vertices if v not in self.leaf_labels))

    def edge_index(self, u: int, v: int) -> int:
        return self._edge_index[_normalize_edge(u, v)]

    def canonical_root(self) -> int:
        """Vertex anchoring the canonical orientation.

        The vertex adjacent to the leaf labeled 1, except for the two-leaf
        tree, which has no internal vertex and anchors at leaf 1.
        """
        leaf1 = self.leaf_for_label(1)
        if self.n == 2:
            return leaf1
        return self._adj[leaf1][0]

    def rooted_plan(self, anchor: int | None = None):
        """Postorder traversal rooted at ``anchor``.

        Returns a tuple of ``(vertex, children)`` pairs in postorder, where
        ``children`` is a tuple of ``(child_vertex, edge_index)``. Cached per
        anchor; the plan is shared by the scoring and likelihood code.
        """
        if anchor is None:
            anchor = self.canonical_root()
        plan = self._plans.get(anchor)
        if plan is not None:
            return plan
        parent: dict[int, int | None] = {anchor: None}
        preorder = []
        stack = [anchor]
        while stack:
            v = stack.pop()
            preorder.append(v)
            for w in self._adj[v]:
                if w != parent[v]:
                    parent[w] = v
                    stack.append(w)
        children: dict[int, list] = {v: [] for v in preorder}
        for v in preorder:
            p = parent[v]
            if p is not None:
                children[p].append((v, self._edge_index[_normalize_edge(p, v)]))
        plan = tuple((v, tuple(children[v])) for v in reversed(preorder))
        self._plans[anchor] = plan
        return plan

    # -- identity ----------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return (self.n == other.n and self.edges == other.edges
                and self.leaf_labels == other.leaf_labels)

    def __hash__(self):
        return hash((self.n, self.edges, tuple(sorted(self.leaf_labels.items()))))

    def __repr__(self):
        try:
            return f"Tree({canonical_newick(self)!r})"
        except Exception:
            return f"Tree(n={self.n}, edges={self.edges})"


def edge_count(tree: Tree) -> int:
    """Number of edges; 2n-3 for a binary tree on n >= 3 leaves."""
    return len(tree.edges)


def is_binary(tree: Tree) -> bool:
    """True when every internal vertex has degree exactly 3."""
    return all(tree.degree(v) == 3 for v in tree.internal_vertices())


def validate(tree: Tree) -> list[str]:
    """Check every structural invariant; return the list of violations.

    An empty list means the tree is well formed: connected, acyclic, leaves
    exactly the degree-1 vertices with labels forming a bijection onto 1..n,
    and no internal vertex of degree below 3.
    """
    violations: list[str] = []
    verts = tree.vertices
    if len(tree.edges) != len(verts) - 1:
        violations.append(
            f"edge count {len(tree.edges)} != vertex count - 1 ({len(verts) - 1}): not a tree")
    # connectivity
    start = next(iter(verts))
    seen = {start}
    frontier = [start]
    while frontier:
        v = frontier.pop()
        for w in tree.neighbors(v):
            if w not in seen:
                seen.add(w)
                frontier.append(w)
    if seen != verts:
        violations.append("not connected")

    labeled = set(tree.leaf_labels)
    if labeled - verts:
        violations.append(f"labeled leaves missing from the vertex set: {sorted(labeled - verts)}")
    labels = sorted(tree.leaf_labels.values())
    if labels != list(range(1, tree.n + 1)):
        violations.append("labels not bijective onto 1..n")

    degree1 = {v for v in verts if tree.degree(v) == 1}
    for v in sorted(degree1 - labeled):
        violations.append(f"degree-1 vertex {v} carries no leaf label")
    for v in sorted(labeled & verts):
        if tree.degree(v) != 1:
            violations.append(f"leaf {v} has degree {tree.degree(v)}, expected 1")
    for v in sorted(verts - labeled):
        if tree.degree(v) == 2:
            violations.append(f"internal degree-2 vertex {v}")
        elif tree.degree(v) < 2:
            violations.append(f"internal vertex {v} has degree {tree.degree(v)}")
    return violations


def canonical_newick(tree: Tree) -> str:
    """Serialize in canonical form (see the module docstring)."""
    if tree._canonical is not None:
        return tree._canonical
    if tree.n == 2:
        a, b = sorted(tree.leaf_labels.values())
        text = f"({a},{b});"
        tree._canonical = text
        return text

    def subtree(v: int, parent: int) -> tuple[int, str]:
        if tree.is_leaf(v):
            lab = tree.leaf_labels[v]
            return lab, str(lab)
        parts = sorted(subtree(w, v) for w in tree.neighbors(v) if w != parent)
        return parts[0][0], "(" + ",".join(p[1] for p in parts) + ")"

    root = tree.canonical_root()
    parts = sorted(subtree(w, root) for w in tree.neighbors(root))
    text = "(" + ",".join(p[1] for p in parts) + ");"
    tree._canonical = text
    return text


def write_newick(tree: Tree) -> str:
    """Newick text for a tree; always the canonical form."""
    return canonical_newick(tree)


def parse_newick(text: str) -> Tree:
    """Parse Newick text over integer labels into an unrooted tree.

    Labels must be exactly 1..n for n = number of leaves. A root written
    with two children (the usual serialization of an unrooted binary tree)
    is spliced away so no degree-2 vertex survives. Multifurcations are
    allowed anywhere.
    """
    pos = 0
    end = len(text)

    def skip_ws():
        nonlocal pos
        while pos < end and text[pos].isspace():
            pos += 1

    def fail(message: str):
        raise NewickError(message, pos)

    def parse_node():
        nonlocal pos
        skip_ws()
        if pos >= end:
            fail("unexpected end of input")
        if text[pos] == "(":
            pos += 1
            children = [parse_node()]
            skip_ws()
            while pos < end and text[pos] == ",":
                pos += 1
                children.append(parse_node())
                skip_ws()
            if pos >= end or text[pos] != ")":
                fail("expected ',' or ')'")
            pos += 1
            if len(children) < 2:
                fail("group with a single child")
            return children
        start = pos
        while pos < end and text[pos].isdigit():
            pos += 1
        if pos == start:
            fail(f"expected a leaf label or '(', found {text[pos]!r}")
        return int(text[start:pos])

    root = parse_node()
    skip_ws()
    if pos >= end or text[pos] != ";":
        fail("expected ';'")
    pos += 1
    skip_ws()
    if pos != end:
        fail(f"trailing content after ';': {text[pos:].strip()!r}")
    if isinstance(root, int):
        raise NewickError("a tree needs at least two leaves")

    labels: list[int] = []

    def collect(node):
        if isinstance(node, int):
            labels.append(node)
        else:
            for child in node:
                collect(child)

    collect(root)
    n = len(labels)
    seen: set[int] = set()
    for lab in labels:
        if lab in seen:
            raise NewickError(f"duplicate leaf label {lab}")
        seen.add(lab)
    for lab in labels:
        if not 1 <= lab <= n:
            raise NewickError(f"unknown label {lab}: labels must be 1..{n}")

    edges: list[Edge] = []
    next_internal = n + 1

    def build(node) -> int:
        nonlocal next_internal
        if isinstance(node, int):
            return node
        child_ids = [build(c) for c in node]
        vid = next_internal
        next_internal += 1
        for c in child_ids:
            edges.append((c, vid))
        return vid

    root_id = build(root)
    root_edges = [e for e in edges if root_id in e]
    if len(root_edges) == 2:
        # splice the degree-2 root away
        (a,) = [v for v in root_edges[0] if v != root_id]
        (b,) = [v for v in root_edges[1] if v != root_id]
        edges = [e for e in edges if root_id not in e]
        edges.append((a, b))
    return Tree(n, edges)


def enumerate_topologies(n: int, cap: int = DEFAULT_TOPOLOGY_CAP):
    """Yield every unrooted binary topology on leaves 1..n exactly once.

    Generation is by leaf insertion: each topology on 1..m extends to
    2m-3 topologies on 1..m+1 by subdividing an edge, and every topology
    arises from exactly one parent, so the stream is duplicate-free with
    (2n-5)!! trees in a deterministic order.
    """
    if n < 3:
        raise ValueError("topology enumeration needs n >= 3")
    if n > cap:
        raise TopologyCapError(
            f"n={n} exceeds the enumeration cap ({cap}); "
            f"pass a larger cap explicitly to proceed")

    def grow(edges: list[Edge], next_leaf: int, next_internal: int):
        if next_leaf > n:
            yield Tree(n, edges)
            return
        for i in range(len(edges)):
            u, v = edges[i]
            w = next_internal
            grown = edges[:i] + edges[i + 1:] + [(u, w), (w, v), (w, next_leaf)]
            yield from grow(grown, next_leaf + 1, next_internal + 1)

    yield from grow([(1, n + 1), (2, n + 1), (3, n + 1)], 4, n + 2)


def topology_count(n: int) -> int:
    """(2n-5)!! for n >= 3: the number of unrooted binary topologies."""
    if n < 3:
        raise ValueError("defined for n >= 3")
    count = 1
    for m in range(3, n + 1):
        count *= max(1, 2 * m - 5)
    return count
