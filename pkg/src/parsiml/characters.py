"""Binary character data: pattern-compressed matrices and constant-site padding.

A character assigns a state in {0,1} to each leaf; a data matrix stores the
distinct site patterns together with their multiplicities, so k identical
columns cost one pattern. Padding appends a large block of all-zero columns
whose size is a power of the instance size, the transformation that couples
the flip-count score to the optimal log-likelihood.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

Character = tuple[int, ...]

DEFAULT_PAD_CAP = 10_000_000


class MatrixFormatError(ValueError):
    """Bad matrix text. ``line`` is the 1-based offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class PaddingCapError(ValueError):
    """Requested padding exceeds the memory cap. Carries the computed size."""

    def __init__(self, message: str, pad_count: int):
        super().__init__(message)
        self.pad_count = pad_count


def is_constant(ch: Character) -> bool:
    """True when every leaf gets the same state."""
    first = ch[0]
    return all(s == first for s in ch)


def complement(ch: Character) -> Character:
    """Flip every state; an involution."""
    return tuple(1 - s for s in ch)


def _check_character(ch, n: int) -> Character:
    ch = tuple(int(s) for s in ch)
    if len(ch) != n:
        raise ValueError(f"character has {len(ch)} states, expected {n}")
    if any(s not in (0, 1) for s in ch):
        raise ValueError(f"non-binary state in character {ch}")
    return ch


@dataclass(frozen=True)
class DataMatrix:
    """Compressed site patterns over n leaves.

    ``patterns`` holds (character, multiplicity) pairs, pairwise distinct and
    sorted by character, so equal matrices compare equal and every traversal
    is deterministic. ``k`` is the total column count including repeats.
    """

    n: int
    patterns: tuple[tuple[Character, int], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("leaf count must be positive")
        if not self.patterns:
            raise ValueError("k >= 1 required: a matrix needs at least one character")
        prev = None
        for ch, mult in self.patterns:
            _check_character(ch, self.n)
            if mult < 1:
                raise ValueError(f"multiplicity {mult} < 1 for pattern {ch}")
            if prev is not None and ch <= prev:
                raise ValueError("patterns must be sorted and distinct")
            prev = ch

    @property
    def k(self) -> int:
        return sum(mult for _, mult in self.patterns)

    @classmethod
    def from_columns(cls, n: int, columns) -> "DataMatrix":
        """Build from raw columns, merging duplicates into multiplicities."""
        counts: dict[Character, int] = {}
        for col in columns:
            ch = _check_character(col, n)
            counts[ch] = counts.get(ch, 0) + 1
        return cls(n, tuple(sorted(counts.items())))

    def multiplicity(self, ch) -> int:
        ch = tuple(int(s) for s in ch)
        for pat, mult in self.patterns:
            if pat == ch:
                return mult
        return 0

    def expanded_columns(self):
        """Yield every column with repeats, in pattern order."""
        for ch, mult in self.patterns:
            for _ in range(mult):
                yield ch

    def with_extra(self, ch, count: int) -> "DataMatrix":
        """A new matrix with ``count`` more copies of ``ch``."""
        ch = _check_character(ch, self.n)
        if count < 1:
            raise ValueError("count must be >= 1")
        counts = dict(self.patterns)
        counts[ch] = counts.get(ch, 0) + count
        return DataMatrix(self.n, tuple(sorted(counts.items())))


@dataclass(frozen=True)
class ReductionParams:
    """Padding parameters: epsilon, the size M = max(2n, k), and the number
    of constant columns added. ``epsilon`` is None when the pad count was
    fixed directly instead of derived from M."""

    epsilon: float | None
    size: int
    pad_count: int


@dataclass(frozen=True)
class PaddedInstance:
    """A base matrix together with its constant-site-padded version."""

    base: DataMatrix
    padded: DataMatrix
    params: ReductionParams

    def __post_init__(self):
        if self.padded.k != self.base.k + self.params.pad_count:
            raise ValueError("padded column count must be base k plus the pad count")
        zero = (0,) * self.base.n
        if self.padded.multiplicity(zero) < self.params.pad_count:
            raise ValueError("padded matrix is missing the constant-zero block")


def _ceil_power(base: int, exponent: float) -> int:
    # Exact integer power when the exponent is integral; float pow can land
    # a hair above an integer and ceil would then overshoot by one.
    nearest = round(exponent)
    if abs(exponent - nearest) < 1e-9:
        return base ** int(nearest)
    return math.ceil(base ** exponent)


def _pad(base: DataMatrix, params: ReductionParams) -> PaddedInstance:
    zero = (0,) * base.n
    return PaddedInstance(base, base.with_extra(zero, params.pad_count), params)


def pad_constant_sites(base: DataMatrix, epsilon: float,
                       cap: int = DEFAULT_PAD_CAP) -> PaddedInstance:
    """Append ceil(M^(1/epsilon)) all-zero columns, M = max(2n, k).

    Refuses (rather than truncating) when the computed count exceeds ``cap``,
    since a silently smaller pad would change what the verifiers measure.
    """
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    size = max(2 * base.n, base.k)
    pad_count = _ceil_power(size, 1.0 / epsilon)
    if pad_count > cap:
        raise PaddingCapError(
            f"padding needs {pad_count} constant sites "
            f"(M={size}, epsilon={epsilon}), above the cap {cap}", pad_count)
    return _pad(base, ReductionParams(float(epsilon), size, pad_count))


def pad_with_count(base: DataMatrix, pad_count: int) -> PaddedInstance:
    """Append an explicit number of all-zero columns.

    Escape hatch for experiments that sweep the pad size directly; ``epsilon``
    is recorded as None since no power law produced the count.
    """
    if pad_count < 1:
        raise ValueError("pad_count must be >= 1")
    size = max(2 * base.n, base.k)
    return _pad(base, ReductionParams(None, size, int(pad_count)))


def random_instance(n: int, k: int, seed: int) -> DataMatrix:
    """k i.i.d. uniform binary columns on n leaves; fixed seed, fixed matrix."""
    if n < 3:
        raise ValueError("random instances need n >= 3")
    if k < 1:
        raise ValueError("k >= 1 required")
    rng = np.random.default_rng(seed)
    cols = rng.integers(0, 2, size=(k, n))
    return DataMatrix.from_columns(n, (tuple(int(s) for s in col) for col in cols))


def parse_matrix(text: str) -> DataMatrix:
    """Parse matrix text (see :func:`write_matrix` for the grammar).

    Header line "n k"; optional "counts c1 .. cd" line when columns carry
    multiplicities; then one line per leaf, "leaf_id bits", bits written
    contiguously or space-separated. '#' starts a comment anywhere.
    """
    content: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped:
            content.append((lineno, stripped))
    if not content:
        raise MatrixFormatError("empty input: expected a header line 'n k'")

    lineno, header = content[0]
    parts = header.split()
    if len(parts) != 2:
        raise MatrixFormatError(f"expected header 'n k', got {header!r}", lineno)
    try:
        n, k = int(parts[0]), int(parts[1])
    except ValueError:
        raise MatrixFormatError(f"expected integer header 'n k', got {header!r}", lineno)
    if n < 1:
        raise MatrixFormatError(f"leaf count {n} must be positive", lineno)
    if k < 1:
        raise MatrixFormatError("k >= 1 required", lineno)

    rows = content[1:]
    counts: list[int] | None = None
    if rows and rows[0][1].split()[0] == "counts":
        lineno, line = rows[0]
        try:
            counts = [int(tok) for tok in line.split()[1:]]
        except ValueError:
            raise MatrixFormatError("counts line must hold integers", lineno)
        if not counts or any(c < 1 for c in counts):
            raise MatrixFormatError("counts must be positive integers", lineno)
        if sum(counts) != k:
            raise MatrixFormatError(
                f"counts sum to {sum(counts)}, header says k={k}", lineno)
        rows = rows[1:]

    width = len(counts) if counts is not None else k
    if len(rows) != n:
        raise MatrixFormatError(
            f"expected {n} leaf rows, found {len(rows)}",
            rows[-1][0] if rows else lineno)

    bits_by_label: dict[int, str] = {}
    for lineno, line in rows:
        tokens = line.split()
        try:
            leaf = int(tokens[0])
        except ValueError:
            raise MatrixFormatError(f"expected a leaf id, got {tokens[0]!r}", lineno)
        if not 1 <= leaf <= n:
            raise MatrixFormatError(f"leaf id {leaf} out of range 1..{n}", lineno)
        if leaf in bits_by_label:
            raise MatrixFormatError(f"duplicate leaf id {leaf}", lineno)
        bits = "".join(tokens[1:])
        if not bits or any(b not in "01" for b in bits):
            raise MatrixFormatError(
                f"row for leaf {leaf} must hold only 0/1 states", lineno)
        if len(bits) != width:
            raise MatrixFormatError(
                f"row for leaf {leaf} has {len(bits)} sites, expected {width}", lineno)
        bits_by_label[leaf] = bits

    columns = []
    for j in range(width):
        ch = tuple(int(bits_by_label[lab][j]) for lab in range(1, n + 1))
        columns.extend([ch] * (counts[j] if counts is not None else 1))
    return DataMatrix.from_columns(n, columns)


def write_matrix(matrix: DataMatrix, compressed: bool = False) -> str:
    """Serialize a matrix; round-trips through :func:`parse_matrix`.

    Expanded form repeats duplicate columns; compressed form writes each
    distinct pattern once plus a "counts" line with the multiplicities.
    """
    lines = [f"{matrix.n} {matrix.k}"]
    if compressed:
        lines.append("counts " + " ".join(str(m) for _, m in matrix.patterns))
        cols = [ch for ch, _ in matrix.patterns]
    else:
        cols = list(matrix.expanded_columns())
    for lab in range(1, matrix.n + 1):
        bits = "".join(str(ch[lab - 1]) for ch in cols)
        lines.append(f"{lab} {bits}")
    return "\n".join(lines) + "\n"
