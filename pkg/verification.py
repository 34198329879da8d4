"""
Lemma Verification Harness
==========================
Monte Carlo estimators that confront each probability bound used by the
large-girth learner with simulation, plus the exact (simulation-free) checks:
unique short shortest paths, the long-active-path bound at half the girth,
and the single-edge observation probability used by the bounded-degree
learner.

Every check returns a BoundCheckReport whose verdict is recomputed from its
own fields: an upper bound passes when estimate <= bound + 3 se, a lower bound
when estimate >= bound - 3 se, with se = sqrt(p(1 - p) / trials).
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple, Union

import networkx as nx

from cascade import CascadeOutcome, RandomStream, path_active_probability_bound, simulate_cascade
from generators import CertificationReport, certify_for_algorithm1
from graph_core import (
    DEFAULT_ENUMERATION_BUDGET,
    ContagionGraph,
    PreconditionError,
    count_simple_paths,
    girth,
    max_degree,
    path_growth_rate,
    shortest_path_distance,
    validate_vertex,
)

logger = logging.getLogger(__name__)

TOLERANCE_SE = 3.0

# Exact arithmetic checks allow this relative slack for floating-point rounding
EXACT_RTOL = 1e-12

REPORT_COLUMNS = [
    "lemma", "graph", "vertices", "trials", "successes", "estimate", "std_error",
    "bound", "direction", "in_scope", "verdict", "note",
]


@dataclass(frozen=True)
class BoundCheckReport:
    lemma: str
    graph: str
    vertices: Tuple[int, ...]
    trials: int
    successes: int
    estimate: float
    std_error: float
    bound: float
    direction: str  # 'upper', 'lower', 'two_sided' or 'exact'
    in_scope: bool = True
    note: str = ""

    @property
    def passed(self) -> bool:
        slack = TOLERANCE_SE * self.std_error
        if self.direction == "upper":
            return self.estimate <= self.bound + slack
        if self.direction == "lower":
            return self.estimate >= self.bound - slack
        if self.direction == "two_sided":
            return abs(self.estimate - self.bound) <= slack
        return self.estimate <= self.bound * (1.0 + EXACT_RTOL)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "violation"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lemma": self.lemma,
            "graph": self.graph,
            "vertices": list(self.vertices),
            "trials": self.trials,
            "successes": self.successes,
            "estimate": self.estimate,
            "std_error": self.std_error,
            "bound": self.bound,
            "direction": self.direction,
            "in_scope": self.in_scope,
            "verdict": self.verdict,
            "note": self.note,
        }


def standard_error(estimate: float, trials: int) -> float:
    if trials <= 0:
        return 0.0
    return math.sqrt(estimate * (1.0 - estimate) / trials)


def _describe(g: ContagionGraph, label: Optional[str]) -> str:
    return label if label else f"n={g.n},m={g.m}"


# =============================================================================
# MONTE CARLO PLUMBING
# =============================================================================


def _event_infected(outcome: CascadeOutcome, v: int) -> bool:
    return v in outcome.infected


def _event_infected_late(outcome: CascadeOutcome, v: int, k: int) -> bool:
    step = outcome.chain_length(v)
    return step is not None and step >= k


def _event_v_not_w(outcome: CascadeOutcome, v: int, w: int) -> bool:
    return v in outcome.infected and w not in outcome.infected


def _event_exact_pair(outcome: CascadeOutcome, u: int, v: int) -> bool:
    return outcome.infected == frozenset((u, v))


def _count_chunk(g: ContagionGraph, u: int, stream: RandomStream,
                 event: Callable[[CascadeOutcome], bool], span: Tuple[int, int]) -> int:
    seeds = frozenset([u])
    return sum(
        1 for i in range(*span)
        if event(simulate_cascade(g, seeds, stream.at(u, i)))
    )


def estimate_event(g: ContagionGraph, u: int, trials: int, stream: RandomStream,
                   event: Callable[[CascadeOutcome], bool], jobs: int = 1) -> int:
    """
    Count the single-seed rounds from u (trial i uses substream (u, i)) in
    which ``event`` holds. With jobs > 1 the trials are split into chunks run
    in worker processes and the counts summed; results do not depend on jobs.
    """
    if trials <= 0:
        return 0
    work = partial(_count_chunk, g, u, stream, event)
    if jobs <= 1:
        return work((0, trials))
    size = math.ceil(trials / jobs)
    spans = [(start, min(start + size, trials)) for start in range(0, trials, size)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return sum(pool.map(work, spans))


def _report(lemma: str, g: ContagionGraph, label: Optional[str], vertices: Tuple[int, ...],
            trials: int, successes: int, bound: float, direction: str,
            in_scope: bool, note: str = "") -> BoundCheckReport:
    estimate = successes / trials if trials else 0.0
    return BoundCheckReport(
        lemma=lemma,
        graph=_describe(g, label),
        vertices=vertices,
        trials=trials,
        successes=successes,
        estimate=estimate,
        std_error=standard_error(estimate, trials),
        bound=bound,
        direction=direction,
        in_scope=in_scope,
        note=note,
    )


def _require_delta(g: ContagionGraph) -> float:
    if g.delta is None:
        raise PreconditionError("graph has no edges, contagion parameter undefined")
    return g.delta


def _in_scope(g: ContagionGraph, certification: Optional[CertificationReport], budget: int) -> bool:
    cert = certification if certification is not None else certify_for_algorithm1(g, budget=budget)
    if not cert.passed:
        logger.warning("graph is outside the large-girth guarantee scope: %s", cert.reason)
    return cert.passed


def _distinct(g: ContagionGraph, *vertices: int) -> None:
    for x in vertices:
        validate_vertex(g, x)
    if len(set(vertices)) != len(vertices):
        raise PreconditionError(f"vertices {vertices} must be distinct")


# =============================================================================
# LEMMA CHECKS
# =============================================================================


def check_lemma1(g: ContagionGraph, label: Optional[str] = None,
                 budget: int = DEFAULT_ENUMERATION_BUDGET) -> BoundCheckReport:
    """
    Exact: every pair with 1 < d_uv < g/2 has exactly one path of length d_uv
    and none of any length in (d_uv, g/2].
    """
    half = girth(g).half()
    longest = min(math.floor(half), g.n - 1) if half != math.inf else g.n - 1
    checked = violations = 0
    for u in range(g.n):
        for v in range(u + 1, g.n):
            d = shortest_path_distance(g, u, v)
            if d is None or not 1 < d < half:
                continue
            checked += 1
            unique = count_simple_paths(g, u, v, d, budget) == 1
            extra = any(count_simple_paths(g, u, v, length, budget) for length in range(d + 1, longest + 1))
            if not unique or extra:
                violations += 1
                logger.warning("pair (%d, %d) at distance %d breaks shortest-path uniqueness", u, v, d)
    estimate = violations / checked if checked else 0.0
    return BoundCheckReport("lemma1", _describe(g, label), (), checked, violations, estimate, 0.0, 0.0,
                            "exact", True, "pairs with 1 < d < g/2; successes count violations")


def check_lemma2(g: ContagionGraph, u: int, v: int, k: int, trials: int, stream: RandomStream,
                 rho: Optional[float] = None, label: Optional[str] = None, jobs: int = 1,
                 budget: int = DEFAULT_ENUMERATION_BUDGET) -> BoundCheckReport:
    """
    Pr[v infected through a transmission chain of length >= k] against
    (rho(1 - delta))^k / (1 - rho(1 - delta)).

    Raises:
        GrowthConditionError: rho(1 - delta) >= 1
    """
    _distinct(g, u, v)
    delta = _require_delta(g)
    rho = path_growth_rate(g, budget).rho if rho is None else rho
    bound = path_active_probability_bound(rho, delta, k)
    hits = estimate_event(g, u, trials, stream.child("lemma2"),
                          partial(_event_infected_late, v=v, k=k), jobs)
    return _report("lemma2", g, label, (u, v), trials, hits, bound, "upper", True,
                   f"k={k}; event measured on the credited transmission chain in the trace")


def check_lemma3(g: ContagionGraph, u: int, v: int, w: int, trials: int, stream: RandomStream,
                 certification: Optional[CertificationReport] = None, label: Optional[str] = None,
                 jobs: int = 1, budget: int = DEFAULT_ENUMERATION_BUDGET) -> BoundCheckReport:
    """Adjacent u, v and any third w: Pr[v infected, w not] >= 7 delta^2 / 8."""
    _distinct(g, u, v, w)
    if not g.has_edge(u, v):
        raise PreconditionError(f"({u}, {v}) is not an edge")
    delta = _require_delta(g)
    in_scope = _in_scope(g, certification, budget)
    hits = estimate_event(g, u, trials, stream.child("lemma3"), partial(_event_v_not_w, v=v, w=w), jobs)
    return _report("lemma3", g, label, (u, v, w), trials, hits, 7.0 * delta ** 2 / 8.0, "lower", in_scope,
                   "" if in_scope else "outside guarantee scope")


def check_lemma4(g: ContagionGraph, u: int, v: int, trials: int, stream: RandomStream,
                 certification: Optional[CertificationReport] = None, label: Optional[str] = None,
                 jobs: int = 1, budget: int = DEFAULT_ENUMERATION_BUDGET) -> BoundCheckReport:
    """
    Non-adjacent u, v with 1 < d_uv < g/2 and w the second vertex of the
    unique shortest u-v path: Pr[v infected, w not] <= delta^2 / 4.
    """
    _distinct(g, u, v)
    d = shortest_path_distance(g, u, v)
    if d is None or d <= 1:
        raise PreconditionError(f"need 1 < d_uv, got d({u}, {v}) = {d}")
    if not d < girth(g).half():
        raise PreconditionError(f"need d_uv < g/2, got d({u}, {v}) = {d} with girth {girth(g)}")
    if count_simple_paths(g, u, v, d, budget) != 1:
        raise PreconditionError(f"shortest path from {u} to {v} is not unique")
    delta = _require_delta(g)
    w = nx.shortest_path(g.nx_graph, u, v)[1]
    in_scope = _in_scope(g, certification, budget)
    hits = estimate_event(g, u, trials, stream.child("lemma4"), partial(_event_v_not_w, v=v, w=w), jobs)
    return _report("lemma4", g, label, (u, v, w), trials, hits, delta ** 2 / 4.0, "upper", in_scope,
                   "" if in_scope else "outside guarantee scope")


def check_lemma5(g: ContagionGraph, u: int, v: int, trials: int, stream: RandomStream,
                 certification: Optional[CertificationReport] = None, label: Optional[str] = None,
                 jobs: int = 1, budget: int = DEFAULT_ENUMERATION_BUDGET) -> BoundCheckReport:
    """Non-adjacent u, v with d_uv >= g/2 (or unreachable): Pr[v infected] <= delta^2 / 4."""
    _distinct(g, u, v)
    if g.has_edge(u, v):
        raise PreconditionError(f"({u}, {v}) is an edge")
    d = shortest_path_distance(g, u, v)
    if d is not None and d < girth(g).half():
        raise PreconditionError(f"need d_uv >= g/2, got d({u}, {v}) = {d} with girth {girth(g)}")
    delta = _require_delta(g)
    in_scope = _in_scope(g, certification, budget)
    hits = estimate_event(g, u, trials, stream.child("lemma5"), partial(_event_infected, v=v), jobs)
    return _report("lemma5", g, label, (u, v), trials, hits, delta ** 2 / 4.0, "upper", in_scope,
                   "" if in_scope else "outside guarantee scope")


def check_corollary1(g: ContagionGraph, delta: Optional[float] = None,
                     certification: Optional[CertificationReport] = None, label: Optional[str] = None,
                     budget: int = DEFAULT_ENUMERATION_BUDGET) -> BoundCheckReport:
    """
    Exact: path_active_probability_bound(rho, delta, ceil(g'/2)) <= delta^2 / 4
    for a certified graph (g' the even girth bound).

    Raises:
        PreconditionError: the growth condition fails, so the bound is undefined
    """
    cert = certification if certification is not None else certify_for_algorithm1(g, delta, budget)
    delta = cert.delta if delta is None else delta
    if delta is None:
        raise PreconditionError("graph has no edges, contagion parameter undefined")
    if not cert.growth_ok:
        raise PreconditionError(f"growth condition fails: {cert.reason}")
    if cert.girth.is_infinite:
        value, k = 0.0, None
    else:
        k = math.ceil(cert.effective_girth / 2)
        value = path_active_probability_bound(cert.rho.rho, delta, k)
    return BoundCheckReport("corollary1", _describe(g, label), (), 0, 0, value, 0.0, delta ** 2 / 4.0,
                            "exact", cert.passed, f"k={k}")


# =============================================================================
# PATH SUMS AND SINGLE-EDGE OBSERVATION
# =============================================================================


def path_union_bound(g: ContagionGraph, u: int, v: int, k: int,
                     budget: int = DEFAULT_ENUMERATION_BUDGET) -> float:
    """Sum over d = k..n-1 of |P_d(u, v)| * beta^d (dominated by the closed form)."""
    _distinct(g, u, v)
    if g.beta is None:
        return 0.0
    return sum(count_simple_paths(g, u, v, d, budget) * g.beta ** d for d in range(max(k, 1), g.n))


def single_edge_probability(g: ContagionGraph, u: int, v: int) -> float:
    """Exact Pr[infected set is exactly {u, v}] for seed set {u} and edge (u, v)."""
    _distinct(g, u, v)
    if not g.has_edge(u, v):
        raise PreconditionError(f"({u}, {v}) is not an edge")
    p = g.probability(u, v)
    for x, p_ux in g.weighted_neighbors(u):
        if x != v:
            p *= 1.0 - p_ux
    for x, p_vx in g.weighted_neighbors(v):
        if x != u:
            p *= 1.0 - p_vx
    return p


def check_single_edge(g: ContagionGraph, u: int, v: int, trials: int, stream: RandomStream,
                      label: Optional[str] = None, jobs: int = 1) -> BoundCheckReport:
    """Monte Carlo frequency of the round {u, v} against its exact probability."""
    exact = single_edge_probability(g, u, v)
    floor = _require_delta(g) ** (2 * max_degree(g))
    hits = estimate_event(g, u, trials, stream.child("single_edge"), partial(_event_exact_pair, u=u, v=v), jobs)
    return _report("single_edge", g, label, (u, v), trials, hits, exact, "two_sided", exact >= floor,
                   f"exact={exact!r}; delta^(2D)={floor!r}")


# =============================================================================
# REPORT OUTPUT
# =============================================================================


def write_reports_json(reports: Iterable[BoundCheckReport], path: Union[str, Path]) -> None:
    with open(path, "w", newline="\n") as f:
        for report in reports:
            f.write(json.dumps(report.to_dict(), sort_keys=True) + "\n")


def write_reports_csv(reports: Iterable[BoundCheckReport], path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for report in reports:
            row = report.to_dict()
            row["vertices"] = " ".join(map(str, report.vertices))
            writer.writerow(row)


# =============================================================================
# BATCH RUNS
# =============================================================================

LEMMAS = ("1", "2", "3", "4", "5", "corollary1", "single_edge")


def select_vertices(g: ContagionGraph, lemma: str,
                    budget: int = DEFAULT_ENUMERATION_BUDGET) -> Optional[Tuple[int, ...]]:
    """
    First vertex tuple (in lexicographic order) meeting a lemma's
    preconditions, or None when the graph has none.
    """
    half = girth(g).half()
    for u in range(g.n):
        for v in range(g.n):
            if u == v:
                continue
            d = shortest_path_distance(g, u, v)
            if lemma in ("2", "single_edge") and g.has_edge(u, v):
                return u, v
            if lemma == "3" and g.has_edge(u, v) and g.n > 2:
                return u, v, next(w for w in range(g.n) if w not in (u, v))
            if lemma == "4" and d is not None and 1 < d < half and count_simple_paths(g, u, v, d, budget) == 1:
                return u, v
            if lemma == "5" and not g.has_edge(u, v) and (d is None or d >= half):
                return u, v
    return None


def _arity(lemma: str) -> int:
    return 3 if lemma == "3" else 2


def _run_one(g: ContagionGraph, lemma: str, chosen: Tuple[int, ...], trials: int, stream: RandomStream,
             certification: Optional[CertificationReport], k: Optional[int], label: Optional[str],
             jobs: int, budget: int) -> Optional[BoundCheckReport]:
    options = dict(trials=trials, stream=stream, label=label, jobs=jobs)
    if lemma == "2":
        if certification is None or not certification.growth_ok:
            logger.info("skipping lemma 2: growth condition fails")
            return None
        depth = k
        if depth is None:
            # forests have no half-girth scale; any k is valid there
            depth = 2 if certification.girth.is_infinite else math.ceil(certification.effective_girth / 2)
        u, v = chosen
        return check_lemma2(g, u=u, v=v, k=depth, rho=certification.rho.rho, budget=budget, **options)
    if lemma == "single_edge":
        u, v = chosen
        return check_single_edge(g, u=u, v=v, **options)
    options.update(certification=certification, budget=budget)
    if lemma == "3":
        u, v, w = chosen
        return check_lemma3(g, u=u, v=v, w=w, **options)
    check = check_lemma4 if lemma == "4" else check_lemma5
    u, v = chosen
    return check(g, u=u, v=v, **options)


def run_checks(g: ContagionGraph, lemmas: Iterable[str], trials: int, stream: RandomStream,
               vertices: Optional[Tuple[int, ...]] = None, k: Optional[int] = None,
               label: Optional[str] = None, jobs: int = 1,
               budget: int = DEFAULT_ENUMERATION_BUDGET) -> List[BoundCheckReport]:
    """
    Run the named checks. Monte Carlo checks use ``vertices`` when given and
    otherwise the first eligible tuple; checks with no eligible tuple are
    skipped with a log line.

    Explicit vertices go to every check that takes that many vertices (three
    for lemma 3, two otherwise). In a batch, checks with the wrong count or
    failed preconditions are skipped with a log line; a single named check
    raises instead.

    Raises:
        PreconditionError: unknown check, or the one named check cannot use ``vertices``
    """
    lemmas = list(lemmas)
    for lemma in lemmas:
        if lemma not in LEMMAS:
            raise PreconditionError(f"unknown check {lemma!r}; choose from {', '.join(LEMMAS)}")
    single = len(lemmas) == 1
    reports: List[BoundCheckReport] = []
    certification = None
    for lemma in lemmas:
        if lemma == "1":
            reports.append(check_lemma1(g, label, budget))
            continue
        if certification is None and g.delta is not None:
            certification = certify_for_algorithm1(g, budget=budget)
        if lemma == "corollary1":
            if certification is None or not certification.growth_ok:
                logger.info("skipping corollary1: growth condition fails")
                continue
            reports.append(check_corollary1(g, certification=certification, label=label, budget=budget))
            continue

        if vertices is None:
            chosen = select_vertices(g, lemma, budget)
            if chosen is None:
                logger.info("skipping lemma %s: no eligible vertices", lemma)
                continue
        else:
            chosen = tuple(vertices)
            if len(chosen) != _arity(lemma):
                message = f"lemma {lemma} takes {_arity(lemma)} vertices, got {len(chosen)}"
                if single:
                    raise PreconditionError(message)
                logger.info("skipping %s", message)
                continue

        try:
            report = _run_one(g, lemma, chosen, trials, stream, certification, k, label, jobs, budget)
        except PreconditionError as e:
            if single or vertices is None:
                raise
            logger.info("skipping lemma %s for %s: %s", lemma, chosen, e)
            continue
        if report is not None:
            reports.append(report)
    return reports
