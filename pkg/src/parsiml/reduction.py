"""Numerical verifiers for the padding reduction's inequality chain.

After a matrix X on a tree T is padded with N_c all-zero columns, the
normalized cost

    -ln(padded likelihood) / ln(k + N_c)

is squeezed against the flip score l(X, T). The checks here measure that
squeeze at desk scale:

  claim1  At the canonical uniform probability q = l / (E (k + N_c)) the
          normalized cost is at most (1 + 2 eps) l. Its proof rests on the
          per-character inequality ln f >= l_chi ln q - E (q + 2 q^2),
          which holds for every q in (0, 1/2] with no size caveat and is
          asserted unconditionally.
  claim2  Any vector with some edge above the threshold
          p_bar = l ln(k + N_c) / N_c forces the normalized cost strictly
          above l. Unconditional; checked on randomized conditioned trials.
  claim3  Every vector keeps the normalized cost at least (1 - 5 eps) l
          once the instance is large enough. Its per-character ingredient
          f <= E (E p_bar)^l_chi (all edges at most p_bar < 1/E) is
          asserted unconditionally on probe vectors.
  prop1   End to end: exhaustive likelihood search on the padded data is
          compared, link by link, against the best flip score.

The upper and lower bounds hold "for instances large enough" without an
explicit constant, so each verifier grades a failed bound as inconclusive
when the instance size M is below a configurable threshold, and only as a
failure above it. Margins are always reported either way; the unconditional
per-character inequalities have no such escape hatch and any violation is a
hard failure.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from parsiml.characters import (DEFAULT_PAD_CAP, DataMatrix, PaddedInstance,
                                is_constant, pad_constant_sites)
from parsiml.likelihood import EdgeProbs, modified_loglik, pattern_likelihoods
from parsiml.mlopt import OptimizerConfig, ml_search, optimize_edges
from parsiml.parsimony import fitch_score, mp_search, parsimony_score
from parsiml.trees import DEFAULT_TOPOLOGY_CAP, Tree, canonical_newick

DEFAULT_M_MIN = 32

CSV_FIELDS = ("check", "instance", "epsilon", "M", "N_c", "q", "p_bar",
              "lhs", "bound", "margin", "verdict", "trials", "seed",
              "runtime_ms")


@dataclass(frozen=True)
class ReductionQuantities:
    """The derived numbers every check shares, exact functions of the
    instance: flip score l of the base matrix on the tree, edge count E,
    total column count k + N_c, and the pad size N_c."""

    score: int
    n_edges: int
    total_chars: int
    pad_count: int

    @property
    def q(self) -> float:
        """Canonical uniform edge probability l / (E (k + N_c))."""
        return self.score / (self.n_edges * self.total_chars)

    @property
    def p_bar(self) -> float:
        """Edge threshold l ln(k + N_c) / N_c."""
        return self.score * math.log(self.total_chars) / self.pad_count

    @property
    def normalizer(self) -> float:
        """ln(k + N_c), the denominator of the normalized cost."""
        return math.log(self.total_chars)


def quantities_for(tree: Tree, padded: PaddedInstance) -> ReductionQuantities:
    score = parsimony_score(tree, padded.base)
    return ReductionQuantities(score, len(tree.edges), padded.padded.k,
                               padded.params.pad_count)


def normalized_cost(tree: Tree, probs: EdgeProbs,
                    padded: PaddedInstance) -> float:
    """Padded dataset cost divided by ln(k + N_c); >= 0, +inf propagates."""
    return (modified_loglik(tree, probs, padded.padded)
            / math.log(padded.padded.k))


@dataclass
class VerifierReport:
    """Outcome of one check.

    ``lhs`` and ``bound`` are oriented by ``direction`` ("lhs<=bound" or
    "lhs>=bound") and ``margin`` is the slack toward the inequality, so a
    pass always shows margin >= 0 regardless of which side was bounded.
    ``verdict`` is "pass", "fail", or "inconclusive"; the last is reserved
    for a failed size-conditioned bound on an instance below the size
    threshold. ``note`` explains degenerate or vacuous short-circuits.
    """

    check: str
    instance: str
    epsilon: float | None
    size: int
    pad_count: int
    q: float | None
    p_bar: float | None
    lhs: float
    bound: float
    direction: str
    preconditions_met: bool
    verdict: str
    note: str = ""
    trials: int | None = None
    seed: int | None = None
    runtime_ms: float | None = None
    details: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        if self.direction == "lhs<=bound":
            return self.bound - self.lhs
        return self.lhs - self.bound

    def to_json_dict(self) -> dict:
        return {
            "check": self.check,
            "instance": self.instance,
            "quantities": {
                "epsilon": self.epsilon,
                "M": self.size,
                "N_c": self.pad_count,
                "q": self.q,
                "p_bar": self.p_bar,
            },
            "lhs": self.lhs,
            "bound": self.bound,
            "direction": self.direction,
            "margin": self.margin,
            "preconditions_met": self.preconditions_met,
            "verdict": self.verdict,
            "note": self.note,
            "trials": self.trials,
            "seed": self.seed,
            "runtime_ms": self.runtime_ms,
            "details": self.details,
        }

    def to_json(self) -> str:
        return json.dumps(jsonable(self.to_json_dict()), sort_keys=True,
                          indent=2) + "\n"

    def to_csv_row(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        row = {
            "check": self.check, "instance": self.instance,
            "epsilon": self.epsilon, "M": self.size, "N_c": self.pad_count,
            "q": self.q, "p_bar": self.p_bar, "lhs": self.lhs,
            "bound": self.bound, "margin": self.margin,
            "verdict": self.verdict, "trials": self.trials,
            "seed": self.seed, "runtime_ms": self.runtime_ms,
        }
        writer.writerow(format_cell(row[name]) for name in CSV_FIELDS)
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [
            f"check     {self.check}",
            f"instance  {self.instance}",
            f"quantities  epsilon={format_cell(self.epsilon)} M={self.size} "
            f"N_c={self.pad_count} q={format_cell(self.q)} "
            f"p_bar={format_cell(self.p_bar)}",
            f"inequality  lhs={format_cell(self.lhs)} {_direction_glyph(self.direction)} "
            f"bound={format_cell(self.bound)}  margin={format_cell(self.margin)}",
            f"verdict   {self.verdict.upper()}"
            + (f"  ({self.note})" if self.note else ""),
        ]
        if self.trials is not None:
            lines.append(f"trials    {self.trials}  seed={self.seed}")
        return "\n".join(lines) + "\n"


def _direction_glyph(direction: str) -> str:
    return "<=" if direction == "lhs<=bound" else ">="


def format_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return repr(value)
    return value


def jsonable(obj):
    if isinstance(obj, dict):
        return {key: jsonable(val) for key, val in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(val) for val in obj]
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        if math.isnan(obj):
            return "nan"
    return obj


def _instance_descriptor(padded: PaddedInstance, tree: Tree | None) -> str:
    text = f"n={padded.base.n} k={padded.base.k} N_c={padded.params.pad_count}"
    if tree is not None:
        text += f" tree={canonical_newick(tree)}"
    return text


def _per_char_lower_bound_violations(tree: Tree, padded: PaddedInstance,
                                     q: float, slack: float = 1e-12) -> int:
    """Count patterns violating ln f >= l_chi ln q - E (q + 2 q^2) at the
    uniform vector q. Holds for every q in (0, 1/2], so any hit is a bug."""
    n_edges = len(tree.edges)
    probs = EdgeProbs.uniform(tree, q)
    values = pattern_likelihoods(tree, probs,
                                 [ch for ch, _ in padded.padded.patterns])
    violations = 0
    for (ch, _), value in zip(padded.padded.patterns, values):
        lower = fitch_score(tree, ch) * math.log(q) - n_edges * (q + 2 * q * q)
        if math.log(value) < lower - slack:
            violations += 1
    return violations


def _per_char_upper_bound_violations(tree: Tree, padded: PaddedInstance,
                                     vec, p_bar: float,
                                     slack: float = 1e-12) -> int:
    """Count non-constant patterns violating f <= E (E p_bar)^l_chi.

    Only meaningful when every entry of ``vec`` is at most p_bar < 1/E.
    """
    n_edges = len(tree.edges)
    probs = EdgeProbs.from_vector(tree, vec)
    values = pattern_likelihoods(tree, probs,
                                 [ch for ch, _ in padded.padded.patterns])
    violations = 0
    for (ch, _), value in zip(padded.padded.patterns, values):
        if is_constant(ch):
            continue
        upper = n_edges * (n_edges * p_bar) ** fitch_score(tree, ch)
        if value > upper + slack:
            violations += 1
    return violations


def _degenerate_report(check: str, padded: PaddedInstance, tree: Tree,
                       qty: ReductionQuantities) -> VerifierReport:
    # l = 0 means every character is constant; padding changes nothing and
    # the all-zero probability vector already achieves cost 0 = l.
    probs = EdgeProbs.uniform(tree, 0.0)
    lhs = normalized_cost(tree, probs, padded)
    return VerifierReport(
        check=check, instance=_instance_descriptor(padded, tree),
        epsilon=padded.params.epsilon, size=padded.params.size,
        pad_count=qty.pad_count, q=0.0, p_bar=0.0,
        lhs=lhs, bound=0.0, direction="lhs<=bound",
        preconditions_met=True, verdict="pass",
        note="degenerate: flip score is 0, cost 0 attained at p = 0")


def verify_claim1(padded: PaddedInstance, tree: Tree,
                  epsilon: float | None = None,
                  m_min: int = DEFAULT_M_MIN) -> VerifierReport:
    """Upper bound at the canonical uniform probability.

    Sets every edge to q = l / (E (k + N_c)) and requires the normalized
    cost to stay at most (1 + 2 eps) l. The unconditional per-character
    lower bound is asserted alongside; a failed headline bound on an
    instance with M below ``m_min`` is graded inconclusive.
    """
    started = time.perf_counter()
    epsilon = padded.params.epsilon if epsilon is None else epsilon
    if epsilon is None:
        raise ValueError("epsilon is required (the padding carried none)")
    qty = quantities_for(tree, padded)
    if qty.score == 0:
        return _degenerate_report("claim1", padded, tree, qty)

    q = qty.q
    lhs = normalized_cost(tree, EdgeProbs.uniform(tree, q), padded)
    bound = (1.0 + 2.0 * epsilon) * qty.score
    per_char_bad = _per_char_lower_bound_violations(tree, padded, q)
    preconditions = padded.params.size >= m_min
    if per_char_bad:
        verdict = "fail"
        note = f"{per_char_bad} per-character lower-bound violations"
    elif lhs <= bound:
        verdict = "pass"
        note = ""
    elif not preconditions:
        verdict = "inconclusive"
        note = f"bound failed but M={padded.params.size} < M_min={m_min}"
    else:
        verdict = "fail"
        note = "bound failed on a large instance"
    return VerifierReport(
        check="claim1", instance=_instance_descriptor(padded, tree),
        epsilon=epsilon, size=padded.params.size, pad_count=qty.pad_count,
        q=q, p_bar=qty.p_bar, lhs=lhs, bound=bound, direction="lhs<=bound",
        preconditions_met=preconditions, verdict=verdict, note=note,
        runtime_ms=_elapsed_ms(started),
        details={"score": qty.score,
                 "per_char_checked": len(padded.padded.patterns),
                 "per_char_violations": per_char_bad})


def verify_claim2(padded: PaddedInstance, tree: Tree, trials: int = 1000,
                  seed: int = 0) -> VerifierReport:
    """Contrapositive threshold check, unconditional.

    Draws ``trials`` vectors uniform on [0, 1/2] per edge, forces one
    designated edge (rotating) strictly above p_bar, and requires every
    normalized cost to exceed the flip score. Reports the smallest observed
    gap. Vacuous when p_bar >= 1/2, since no admissible vector can cross
    the threshold.
    """
    started = time.perf_counter()
    qty = quantities_for(tree, padded)
    if qty.score == 0:
        return _degenerate_report("claim2", padded, tree, qty)
    p_bar = qty.p_bar
    instance = _instance_descriptor(padded, tree)
    if p_bar >= 0.5:
        return VerifierReport(
            check="claim2", instance=instance,
            epsilon=padded.params.epsilon, size=padded.params.size,
            pad_count=qty.pad_count, q=qty.q, p_bar=p_bar,
            lhs=math.inf, bound=float(qty.score), direction="lhs>=bound",
            preconditions_met=True, verdict="pass",
            note=f"vacuous: p_bar={p_bar} >= 1/2, no admissible vector "
                 "exceeds the threshold",
            trials=0, seed=seed, runtime_ms=_elapsed_ms(started))

    rng = np.random.default_rng(seed)
    n_edges = len(tree.edges)
    worst = math.inf
    violations = 0
    for t in range(trials):
        vec = [float(x) for x in rng.uniform(0.0, 0.5, n_edges)]
        j = t % n_edges
        # value in (p_bar, 1/2]: 1 - random() lies in (0, 1]
        vec[j] = p_bar + (0.5 - p_bar) * (1.0 - float(rng.random()))
        cost = normalized_cost(tree, EdgeProbs.from_vector(tree, vec), padded)
        if cost <= qty.score:
            violations += 1
        if cost < worst:
            worst = cost
    verdict = "pass" if violations == 0 else "fail"
    return VerifierReport(
        check="claim2", instance=instance, epsilon=padded.params.epsilon,
        size=padded.params.size, pad_count=qty.pad_count, q=qty.q,
        p_bar=p_bar, lhs=worst, bound=float(qty.score),
        direction="lhs>=bound", preconditions_met=True, verdict=verdict,
        note="" if violations == 0 else f"{violations} trials at or below the score",
        trials=trials, seed=seed, runtime_ms=_elapsed_ms(started),
        details={"score": qty.score, "violations": violations,
                 "min_gap": worst - qty.score if math.isfinite(worst) else None})


def verify_claim3(padded: PaddedInstance, tree: Tree, trials: int = 200,
                  seed: int = 0, epsilon: float | None = None,
                  m_min: int = DEFAULT_M_MIN, grid_step: float = 0.125,
                  optimize_probe: bool = True) -> VerifierReport:
    """Lower bound over the whole probability box.

    Evaluates the normalized cost on seeded random vectors, a deterministic
    coarse grid when the tree has at most five edges, the canonical uniform
    q, an optimized vector (the hardest point for a lower bound, unless
    ``optimize_probe`` is off), and probe vectors inside [0, p_bar] when
    p_bar < 1/E (those probes also feed the unconditional per-character
    upper bound). The minimum observed cost must reach (1 - 5 eps) l; when
    it does not, the verdict degrades to inconclusive only if the instance
    is below the size threshold.
    """
    started = time.perf_counter()
    epsilon = padded.params.epsilon if epsilon is None else epsilon
    if epsilon is None:
        raise ValueError("epsilon is required (the padding carried none)")
    qty = quantities_for(tree, padded)
    if qty.score == 0:
        return _degenerate_report("claim3", padded, tree, qty)

    n_edges = len(tree.edges)
    p_bar = qty.p_bar
    below_threshold = p_bar < 1.0 / n_edges
    rng = np.random.default_rng(seed)
    vectors = [[float(x) for x in rng.uniform(0.0, 0.5, n_edges)]
               for _ in range(trials)]
    vectors.append([qty.q] * n_edges)
    if optimize_probe:
        fit = optimize_edges(tree, padded.padded,
                             OptimizerConfig(restarts=2, seed=seed))
        vectors.append(fit.probs.vector(tree))
    if n_edges <= 5:
        points = [j * grid_step for j in range(int(round(0.5 / grid_step)) + 1)]
        vectors.extend(list(point)
                       for point in itertools.product(points, repeat=n_edges))
    per_char_bad = 0
    if below_threshold:
        probes = [[p_bar] * n_edges]
        probes.extend([[p_bar * float(x) for x in rng.random(n_edges)]
                       for _ in range(5)])
        for vec in probes:
            per_char_bad += _per_char_upper_bound_violations(
                tree, padded, vec, p_bar)
        vectors.extend(probes)

    lhs = math.inf
    for vec in vectors:
        cost = normalized_cost(tree, EdgeProbs.from_vector(tree, vec), padded)
        if cost < lhs:
            lhs = cost
    bound = (1.0 - 5.0 * epsilon) * qty.score
    preconditions = below_threshold and padded.params.size >= m_min
    if per_char_bad:
        verdict = "fail"
        note = f"{per_char_bad} per-character upper-bound violations"
    elif lhs >= bound:
        verdict = "pass"
        note = "" if bound > 0 else "bound is non-positive at this epsilon"
    elif not preconditions:
        verdict = "inconclusive"
        note = (f"bound failed with preconditions unmet "
                f"(p_bar<1/E: {below_threshold}, M={padded.params.size}, "
                f"M_min={m_min})")
    else:
        verdict = "fail"
        note = "bound failed on a large instance"
    return VerifierReport(
        check="claim3", instance=_instance_descriptor(padded, tree),
        epsilon=epsilon, size=padded.params.size, pad_count=qty.pad_count,
        q=qty.q, p_bar=p_bar, lhs=lhs, bound=bound, direction="lhs>=bound",
        preconditions_met=preconditions, verdict=verdict, note=note,
        trials=len(vectors), seed=seed, runtime_ms=_elapsed_ms(started),
        details={"score": qty.score, "per_char_violations": per_char_bad,
                 "threshold_probes": below_threshold})


def verify_prop1_chain(base: DataMatrix, epsilon: float,
                       config: OptimizerConfig | None = None,
                       m_min: int = DEFAULT_M_MIN,
                       opt_tol: float = 1e-8,
                       cap: int = DEFAULT_TOPOLOGY_CAP,
                       pad_cap: int | None = None,
                       n_jobs: int = 1) -> VerifierReport:
    """End-to-end reduction experiment with exact search standing in for a
    hypothetical approximation algorithm (ratio 1 + c with c = 0).

    Finds the best flip score l** over all binary topologies, pads the
    matrix, then minimizes the padded cost over topologies and edge
    probabilities. Asserts, with measured numbers:

      (i)  the optimized normalized cost is at most the normalized cost of
           any flip-optimal tree at its canonical uniform q, up to
           ``opt_tol`` (exact search can only do better than one candidate);
      (ii) the winner's flip score is at most (1 + 2 eps)/(1 - 5 eps) l**,
           asserted only for eps < 0.2 (the ratio is positive there) on
           instances past the size threshold.

    Whether the likelihood winner is exactly a flip-score optimum is
    reported, not asserted: the squeeze only promises the ratio.
    """
    started = time.perf_counter()
    config = config or OptimizerConfig()
    pad_cap = DEFAULT_PAD_CAP if pad_cap is None else pad_cap

    best_score, mp_optima = mp_search(base, cap=cap, n_jobs=n_jobs)
    padded = pad_constant_sites(base, epsilon, cap=pad_cap)
    qty = ReductionQuantities(best_score, 2 * base.n - 3, padded.padded.k,
                              padded.params.pad_count)
    instance = f"n={base.n} k={base.k} N_c={padded.params.pad_count}"

    ml_best, ml_ties = ml_search(padded.padded, config, cap=cap, n_jobs=n_jobs)
    normalizer = math.log(padded.padded.k)
    lhs_opt = ml_best.value / normalizer

    if best_score == 0:
        # every character constant: every topology is optimal on both sides
        report = VerifierReport(
            check="prop1", instance=instance, epsilon=epsilon,
            size=padded.params.size, pad_count=padded.params.pad_count,
            q=0.0, p_bar=0.0, lhs=lhs_opt, bound=opt_tol,
            direction="lhs<=bound", preconditions_met=True,
            verdict="pass" if lhs_opt <= opt_tol else "fail",
            note="degenerate: flip score is 0, all topologies tie",
            seed=config.seed, runtime_ms=_elapsed_ms(started),
            details={"mp_score": 0, "ml_tie_count": len(ml_ties),
                     "mp_optimum_count": len(mp_optima)})
        return report

    q = qty.q
    rhs_candidates = [normalized_cost(t, EdgeProbs.uniform(t, q), padded)
                      for t in mp_optima]
    rhs = min(rhs_candidates)
    chain_i_ok = lhs_opt <= rhs + opt_tol

    winner_score = parsimony_score(ml_best.tree, base)
    coincide = winner_score == best_score
    ratio_applies = epsilon < 0.2
    size_ok = padded.params.size >= m_min
    chain_ii_bound = ((1.0 + 2.0 * epsilon) / (1.0 - 5.0 * epsilon) * best_score
                      if ratio_applies else None)
    chain_ii_ok = (winner_score <= chain_ii_bound) if ratio_applies else None

    if not chain_i_ok:
        verdict = "fail"
        note = "optimized cost exceeds the canonical-q cost of a flip optimum"
    elif ratio_applies and not chain_ii_ok:
        if size_ok:
            verdict = "fail"
            note = "ratio bound failed on a large instance"
        else:
            verdict = "inconclusive"
            note = (f"ratio bound failed but M={padded.params.size} "
                    f"< M_min={m_min}")
    else:
        verdict = "pass"
        note = ("" if ratio_applies
                else "ratio not asserted at epsilon >= 0.2; measurements only")

    return VerifierReport(
        check="prop1", instance=instance, epsilon=epsilon,
        size=padded.params.size, pad_count=padded.params.pad_count,
        q=q, p_bar=qty.p_bar, lhs=lhs_opt, bound=rhs + opt_tol,
        direction="lhs<=bound", preconditions_met=ratio_applies and size_ok,
        verdict=verdict, note=note, seed=config.seed,
        runtime_ms=_elapsed_ms(started),
        details={
            "mp_score": best_score,
            "ml_tree": canonical_newick(ml_best.tree),
            "ml_tree_score": winner_score,
            "ml_cost": ml_best.value,
            "ml_normalized": lhs_opt,
            "mp_optima": [canonical_newick(t) for t in mp_optima],
            "canonical_q_cost": rhs,
            "is_mp_optimum": coincide,
            "ratio_bound": chain_ii_bound,
            "ratio_ok": chain_ii_ok,
            "ml_ties": [canonical_newick(t) for t in ml_ties],
        })


def _elapsed_ms(started: float) -> float:
    return (time.perf_counter() - started) * 1000.0
