"""
Structure Learners
==================
Three reconstruction algorithms over the active-query oracle:

- ``learn_tree_ahk``: the tree learner; (u, v) is an edge iff no third vertex
  w has R_u(v) a subset of R_u(w).
- ``learn_large_girth``: for large-girth, low path-growth networks; (u, v) is
  kept iff |R_u(v) minus R_u(w)| > 3 delta^2 m / 8 for every third vertex w.
- ``learn_bounded_degree``: (u, v) is kept iff some round seeded at u
  infected exactly {u, v}.

R_u(v) is the set of rounds (seed set {u}) in which v ended up infected.
Every learner collects m single-seed rounds per vertex, decides edges with a
pure function of the round records, and returns the union over all u as
unordered (min, max) pairs.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from graph_core import ConfigError, Edge, snapped_ceil
from oracle import BudgetExhausted, QueryOracle, RoundBatch, run_batch

logger = logging.getLogger(__name__)

DEFAULT_CHERNOFF_CONSTANT = 32.0

# =============================================================================
# CONFIGURATION
# =============================================================================


@dataclass(frozen=True)
class LearnerConfig:
    """
    Args:
        delta_lb: lower bound on the contagion parameter
        delta_fail: allowed failure probability
        m_override: fixed rounds per vertex, bypassing the round rules
        chernoff_constant: multiplier c of the large-girth round rule
    """

    delta_lb: float
    delta_fail: float = 0.1
    m_override: Optional[int] = None
    chernoff_constant: float = DEFAULT_CHERNOFF_CONSTANT

    def __post_init__(self):
        if self.delta_lb is None or not 0.0 < self.delta_lb <= 1.0:
            raise ConfigError(f"delta_lb must lie in (0, 1], got {self.delta_lb}")
        if not 0.0 < self.delta_fail < 1.0:
            raise ConfigError(f"delta_fail must lie in (0, 1), got {self.delta_fail}")
        if self.chernoff_constant <= 0:
            raise ConfigError(f"chernoff_constant must be positive, got {self.chernoff_constant}")
        if self.m_override is not None and self.m_override < 1:
            raise ConfigError(f"m_override must be at least 1, got {self.m_override}")

    @classmethod
    def from_oracle(cls, o: QueryOracle, **kwargs) -> "LearnerConfig":
        return cls(delta_lb=o.delta_lb, **kwargs)


# =============================================================================
# ROUND RULES
# =============================================================================


def rounds_for_large_girth(n: int, config: LearnerConfig) -> int:
    """
    m = ceil(c * ln(3 n^3 / delta_fail) / Delta^4).

    The additive Chernoff-Hoeffding route: a deviation of Delta^2 m / 8 fails
    with probability at most exp(-m Delta^4 / 32), union-bounded over at most
    3 n^3 (u, v, w) events.
    """
    if config.m_override is not None:
        return config.m_override
    n = max(n, 1)
    value = config.chernoff_constant * math.log(3 * n ** 3 / config.delta_fail) / config.delta_lb ** 4
    return max(1, snapped_ceil(value))


def rounds_for_bounded_degree(n: int, config: LearnerConfig, max_deg: int) -> int:
    """m = ceil(ln(n^2 / delta_fail) / Delta^(2 D))."""
    if config.m_override is not None:
        return config.m_override
    if max_deg < 0:
        raise ConfigError(f"max_deg must be non-negative, got {max_deg}")
    n = max(n, 1)
    value = math.log(n ** 2 / config.delta_fail) / config.delta_lb ** (2 * max_deg)
    return max(1, snapped_ceil(value))


def rounds_for_tree(n: int, config: LearnerConfig) -> int:
    """
    m = ceil(ln(n^3 / delta_fail) / Delta^2).

    For a tree edge (u, v) and any third vertex w, a round has v infected
    and w not with probability at least Delta^2; union over n^3 triples.
    """
    if config.m_override is not None:
        return config.m_override
    n = max(n, 1)
    value = math.log(n ** 3 / config.delta_fail) / config.delta_lb ** 2
    return max(1, snapped_ceil(value))


def large_girth_threshold(m: int, delta_lb: float) -> float:
    return 3.0 * delta_lb ** 2 * m / 8.0


# =============================================================================
# ROUND RECORDS
# =============================================================================


class RoundRecords:
    """
    Per-vertex round-index sets R_u(v) for one seed vertex u, stored as packed
    bit vectors (row v, bit i set iff v was infected in round i + 1).
    """

    def __init__(self, seed: int, n: int, m: int, bits: np.ndarray):
        self.seed = seed
        self.n = n
        self.m = m
        self.bits = bits

    @classmethod
    def from_answers(cls, seed: int, n: int, answers: Sequence[Iterable[int]]) -> "RoundRecords":
        m = len(answers)
        matrix = np.zeros((n, m), dtype=bool)
        for i, infected in enumerate(answers):
            matrix[list(infected), i] = True
        return cls(seed, n, m, np.packbits(matrix, axis=1))

    def matrix(self) -> np.ndarray:
        return np.unpackbits(self.bits, axis=1, count=self.m).astype(bool)

    def rounds(self, v: int) -> FrozenSet[int]:
        """R_u(v) as 1-based round indices."""
        row = np.unpackbits(self.bits[v], count=self.m)
        return frozenset(int(i) + 1 for i in np.flatnonzero(row))

    def counts(self) -> np.ndarray:
        """|R_u(v)| for every v."""
        return self.matrix().sum(axis=1)

    def difference_counts(self) -> np.ndarray:
        """C[v, w] = |R_u(v) minus R_u(w)|."""
        x = self.matrix().astype(np.int64)
        return x @ (1 - x).T

    def two_vertex_rounds(self) -> Set[int]:
        """Vertices v for which some round infected exactly {u, v}."""
        x = self.matrix()
        pairs = x[:, x.sum(axis=0) == 2]
        found = set(int(v) for v in np.flatnonzero(pairs.any(axis=1)))
        found.discard(self.seed)
        return found


def collect_rounds(o: QueryOracle, u: int, m: int) -> RoundRecords:
    """
    Perform exactly m single-seed queries from u.

    Raises:
        BudgetExhausted: fewer than m queries left
    """
    return RoundRecords.from_answers(u, o.n, o.split(u, m).run())


def collect_all(o: QueryOracle, m: int, jobs: int = 1) -> Iterable[RoundRecords]:
    """
    Round records for every vertex, in vertex order. All n * m rounds are
    reserved before this returns.

    Raises:
        BudgetExhausted: fewer than n * m queries left (nothing is charged)
    """
    remaining = o.remaining()
    if remaining is not None and remaining < o.n * m:
        raise BudgetExhausted(f"{o.n} vertices x {m} rounds needs {o.n * m} queries, {remaining} left")
    batches: List[RoundBatch] = [o.split(u, m) for u in o.vertices]
    return _records(o.n, batches, jobs)


def _records(n: int, batches: List[RoundBatch], jobs: int) -> Iterable[RoundRecords]:
    if jobs > 1 and len(batches) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for batch, answers in zip(batches, pool.map(run_batch, batches)):
                yield RoundRecords.from_answers(batch.seed, n, answers)
    else:
        for batch in batches:
            yield RoundRecords.from_answers(batch.seed, n, batch.run())


# =============================================================================
# EDGE DECISIONS
# =============================================================================


def _others(n: int, u: int, v: int) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    mask[[u, v]] = False
    return mask


def decide_ahk(records: RoundRecords) -> Set[int]:
    """
    Neighbors of u: v with R_u(v) non-empty and not contained in R_u(w) for
    any third vertex w.
    """
    u, n = records.seed, records.n
    sizes = records.counts()
    diff = records.difference_counts()
    found = set()
    for v in range(n):
        if v == u or sizes[v] == 0:
            continue
        if not np.any(diff[v][_others(n, u, v)] == 0):
            found.add(v)
    return found


def decide_large_girth(records: RoundRecords, delta_lb: float) -> Set[int]:
    """
    Neighbors of u: v with |R_u(v) minus R_u(w)| > 3 delta^2 m / 8 for every
    third vertex w. With no third vertex, |R_u(v)| itself must clear the
    threshold.
    """
    u, n = records.seed, records.n
    threshold = large_girth_threshold(records.m, delta_lb)
    diff = records.difference_counts()
    sizes = records.counts()
    found = set()
    for v in range(n):
        if v == u:
            continue
        others = diff[v][_others(n, u, v)]
        if others.size == 0:
            if sizes[v] > threshold:
                found.add(v)
        elif np.all(others > threshold):
            found.add(v)
    return found


def decide_bounded_degree(records: RoundRecords) -> Set[int]:
    return records.two_vertex_rounds()


def _union(decisions: Iterable[Tuple[int, Set[int]]]) -> FrozenSet[Edge]:
    edges = set()
    for u, nbrs in decisions:
        edges.update((min(u, v), max(u, v)) for v in nbrs)
    return frozenset(edges)


def _learn(o: QueryOracle, m: int, decide: Callable[[RoundRecords], Set[int]], jobs: int) -> FrozenSet[Edge]:
    logger.info("collecting %d rounds for each of %d vertices", m, o.n)
    return _union((rec.seed, decide(rec)) for rec in collect_all(o, m, jobs))


# =============================================================================
# LEARNERS
# =============================================================================


def learn_tree_ahk(o: QueryOracle, config: LearnerConfig, jobs: int = 1) -> FrozenSet[Edge]:
    m = rounds_for_tree(o.n, config)
    return _learn(o, m, decide_ahk, jobs)


def learn_large_girth(o: QueryOracle, config: LearnerConfig, jobs: int = 1) -> FrozenSet[Edge]:
    m = rounds_for_large_girth(o.n, config)
    return _learn(o, m, lambda rec: decide_large_girth(rec, config.delta_lb), jobs)


def learn_bounded_degree(o: QueryOracle, config: LearnerConfig, max_deg: int, jobs: int = 1) -> FrozenSet[Edge]:
    m = rounds_for_bounded_degree(o.n, config, max_deg)
    return _learn(o, m, decide_bounded_degree, jobs)


LEARNERS = ("ahk", "large_girth", "bounded_degree")


def rounds_for(name: str, n: int, config: LearnerConfig, max_deg: Optional[int] = None) -> int:
    if name == "ahk":
        return rounds_for_tree(n, config)
    if name == "large_girth":
        return rounds_for_large_girth(n, config)
    if name == "bounded_degree":
        if max_deg is None:
            raise ConfigError("bounded_degree learner needs max_deg")
        return rounds_for_bounded_degree(n, config, max_deg)
    raise ConfigError(f"unknown learner {name!r}; choose from {', '.join(LEARNERS)}")


def learn(o: QueryOracle, config: LearnerConfig, name: str,
          max_deg: Optional[int] = None, jobs: int = 1) -> FrozenSet[Edge]:
    """Run the learner called ``name`` ('ahk', 'large_girth' or 'bounded_degree')."""
    if name == "ahk":
        return learn_tree_ahk(o, config, jobs)
    if name == "large_girth":
        return learn_large_girth(o, config, jobs)
    if name == "bounded_degree":
        if max_deg is None:
            raise ConfigError("bounded_degree learner needs max_deg")
        return learn_bounded_degree(o, config, max_deg, jobs)
    raise ConfigError(f"unknown learner {name!r}; choose from {', '.join(LEARNERS)}")
