"""Likelihood optimization: per-edge probabilities, then all topologies.

The fixed-tree problem is solved by coordinate descent. Along one edge the
pattern likelihood is affine in that edge's probability (every extension
term carries the factor p or 1-p exactly once), so each coordinate step
profiles the pattern values at p=0 and p=1 with two tree passes and then
runs a derivative-free scalar search on the cheap 1-D restriction.

Coordinate descent only guarantees a coordinate-wise optimum. That caveat is
the whole point of the problem this package studies, so it is surfaced, not
hidden: searches run from several starting points, and an optional grid
sweep with two refinement rounds (final step 1/512) can cross-check small
instances. Exhaustive topology search is intended for desk-scale n only.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from parsiml.characters import DataMatrix
from parsiml.likelihood import EdgeProbs, _pattern_value
from parsiml.parsimony import parsimony_score
from parsiml.trees import (DEFAULT_TOPOLOGY_CAP, Tree, canonical_newick,
                           enumerate_topologies)

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class OptimizerConfig:
    """Knobs for the fixed-tree optimizer and the topology search.

    ``tol`` stops sweeping once a full sweep improves the cost by less;
    ``restarts`` counts starting points (the flip-fraction uniform start and
    uniform 0.1 first, then seeded random vectors); ``tie_tol`` is the
    absolute cost difference under which two topologies count as tied;
    ``grid_fallback`` enables the grid cross-check on trees with at most
    five edges.
    """

    tol: float = 1e-10
    max_sweeps: int = 500
    restarts: int = 5
    seed: int = 0
    scalar_tol: float = 1e-12
    tie_tol: float = 1e-8
    grid_fallback: bool = False


@dataclass
class MLResult:
    tree: Tree
    probs: EdgeProbs
    value: float
    converged: bool
    sweeps: int
    start_values: tuple[float, ...] = field(default=(), repr=False)


def golden_section_minimize(f, lo: float, hi: float,
                            tol: float = 1e-12) -> tuple[float, float]:
    """Minimize a unimodal-ish scalar on [lo, hi] without derivatives.

    The endpoints are evaluated explicitly so boundary minima come out
    exact (p = 0 and p = 1/2 matter here), and the returned point is the
    best ever evaluated, not the midpoint of the final bracket.
    """
    a, b = float(lo), float(hi)
    span = b - a
    x1 = b - _INV_GOLDEN * span
    x2 = a + _INV_GOLDEN * span
    f1, f2 = f(x1), f(x2)
    best_x, best_f = (x1, f1) if f1 <= f2 else (x2, f2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_GOLDEN * (b - a)
            f2 = f(x2)
        if f1 < best_f:
            best_x, best_f = x1, f1
        if f2 < best_f:
            best_x, best_f = x2, f2
    for x in (lo, hi):
        fx = f(x)
        if fx < best_f:
            best_x, best_f = x, fx
    return best_x, best_f


class _Objective:
    """Dataset cost as a function of the raw edge-probability vector."""

    def __init__(self, tree: Tree, data: DataMatrix):
        if data.n != tree.n:
            raise ValueError(f"matrix has {data.n} leaves, tree has {tree.n}")
        self.tree = tree
        self.plan = tree.rooted_plan()
        self.labels = tree.leaf_labels
        self.patterns = [ch for ch, _ in data.patterns]
        self.weights = [float(mult) for _, mult in data.patterns]
        self.n_edges = len(tree.edges)

    def pattern_values(self, vec) -> list[float]:
        return [_pattern_value(self.plan, self.labels, vec, ch)
                for ch in self.patterns]

    def value(self, vec) -> float:
        total = 0.0
        for w, f in zip(self.weights, self.pattern_values(vec)):
            if f <= 0.0:
                return math.inf
            total -= w * math.log(f)
        return total if total > 0.0 else 0.0

    def edge_profile(self, vec, i: int) -> tuple[list[float], list[float]]:
        """Pattern values at p_i = 0 and p_i = 1 with other edges fixed.

        The value at any p_i is then the affine blend (1-p)*at0 + p*at1.
        """
        saved = vec[i]
        vec[i] = 0.0
        at0 = self.pattern_values(vec)
        vec[i] = 1.0
        at1 = self.pattern_values(vec)
        vec[i] = saved
        return at0, at1

    def value_along(self, at0, at1, x: float) -> float:
        stay = 1.0 - x
        total = 0.0
        for w, f0, f1 in zip(self.weights, at0, at1):
            f = stay * f0 + x * f1
            if f <= 0.0:
                return math.inf
            total -= w * math.log(f)
        return total if total > 0.0 else 0.0


def _coordinate_descent(obj: _Objective, start, config: OptimizerConfig):
    vec = [float(x) for x in start]
    current = obj.value(vec)
    for sweep in range(1, config.max_sweeps + 1):
        before = current
        for i in range(obj.n_edges):
            at0, at1 = obj.edge_profile(vec, i)
            x, fx = golden_section_minimize(
                lambda t: obj.value_along(at0, at1, t), 0.0, 0.5,
                config.scalar_tol)
            if fx < current:
                vec[i] = x
                current = fx
        current = obj.value(vec)  # resync against 1-D roundoff drift
        if before - current < config.tol:
            return vec, current, True, sweep
    return vec, current, False, config.max_sweeps


def _starting_points(tree: Tree, data: DataMatrix, config: OptimizerConfig,
                     seed) -> list[list[float]]:
    n_edges = len(tree.edges)
    flips = parsimony_score(tree, data)
    q = min(0.5, flips / (n_edges * data.k))
    starts = [[q] * n_edges, [0.1] * n_edges]
    rng = np.random.default_rng(config.seed if seed is None else seed)
    while len(starts) < config.restarts:
        starts.append([float(x) for x in rng.uniform(0.0, 0.5, n_edges)])
    return starts[:max(1, config.restarts)]


def grid_minimum(tree: Tree, data: DataMatrix, initial_step: float = 0.125,
                 refinements: int = 2, shrink: int = 8):
    """Best cost on a product grid over [0, 1/2]^edges, then refined.

    Each refinement re-grids a box of one old step around the incumbent at
    step/shrink, so the defaults end at resolution 1/512. Exponential in the
    edge count; meant for trees with at most five edges.
    """
    obj = _Objective(tree, data)
    n_edges = obj.n_edges

    def sweep(axes):
        best_vec, best_val = None, math.inf
        for point in itertools.product(*axes):
            val = obj.value(list(point))
            if val < best_val:
                best_vec, best_val = list(point), val
        return best_vec, best_val

    def axis(center: float, half_width: float, step: float) -> list[float]:
        lo = max(0.0, center - half_width)
        hi = min(0.5, center + half_width)
        count = int(round((hi - lo) / step))
        return [lo + j * step for j in range(count + 1)]

    step = initial_step
    best_vec, best_val = sweep([axis(0.25, 0.25, step)] * n_edges)
    for _ in range(refinements):
        new_step = step / shrink
        axes = [axis(best_vec[i], step / 2.0, new_step) for i in range(n_edges)]
        best_vec, best_val = sweep(axes)
        step = new_step
    return best_vec, best_val


def optimize_edges(tree: Tree, data: DataMatrix,
                   config: OptimizerConfig | None = None,
                   seed=None) -> MLResult:
    """Minimize the dataset cost over edge probabilities for a fixed tree.

    Runs coordinate descent from every starting point and keeps the best.
    ``converged`` is False when the winning run hit the sweep cap; the best
    vector found is returned regardless so callers can still compare.
    """
    config = config or OptimizerConfig()
    obj = _Objective(tree, data)
    starts = _starting_points(tree, data, config, seed)
    start_values = tuple(obj.value(s) for s in starts)
    best = None
    for start in starts:
        vec, val, converged, sweeps = _coordinate_descent(obj, start, config)
        if best is None or val < best[1]:
            best = (vec, val, converged, sweeps)
    vec, val, converged, sweeps = best
    if config.grid_fallback and obj.n_edges <= 5:
        grid_vec, grid_val = grid_minimum(tree, data)
        if grid_val < val - config.tol:
            vec2, val2, converged, sweeps = _coordinate_descent(
                obj, grid_vec, config)
            if val2 < val:
                vec, val = vec2, val2
    return MLResult(tree, EdgeProbs.from_vector(tree, vec), val,
                    converged, sweeps, start_values)


def ml_search(data: DataMatrix, config: OptimizerConfig | None = None,
              cap: int = DEFAULT_TOPOLOGY_CAP,
              n_jobs: int = 1) -> tuple[MLResult, list[Tree]]:
    """Optimize every binary topology; return the best fit and all ties.

    Per-topology random starts are seeded from (config.seed, topology index),
    so results do not depend on worker scheduling. Ties are topologies whose
    optimized cost is within ``tie_tol`` of the minimum, in canonical order;
    the returned result is the minimum-cost fit, canonical order breaking
    exact ties.
    """
    config = config or OptimizerConfig()
    topologies = list(enumerate_topologies(data.n, cap))

    def run(indexed):
        index, tree = indexed
        return optimize_edges(tree, data, config, seed=(config.seed, index))

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run, enumerate(topologies)))
    else:
        results = [run(pair) for pair in enumerate(topologies)]

    best = min(results, key=lambda r: (r.value, canonical_newick(r.tree)))
    tied = [r.tree for r in results if r.value <= best.value + config.tie_tol]
    tied.sort(key=canonical_newick)
    return best, tied
