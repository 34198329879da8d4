"""
Active Query Oracle
===================
The only interface learners get: submit a seed set, receive the infected set.
The oracle owns the hidden graph, the randomness and the query budget M.

Rounds are numbered per seed set, so the answer to the k-th query with seed
set S does not depend on how queries with other seed sets were interleaved.
That is what makes the split form possible: ``split(u, m)`` charges m queries
up front and hands back a self-contained, picklable RoundBatch that can run
in another process with results identical to m sequential ``query({u})``
calls.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional

from cascade import RandomStream, seed_key, simulate_cascade
from graph_core import ContagionError, ContagionGraph, GraphError, validate_vertex

logger = logging.getLogger(__name__)


class BudgetExhausted(ContagionError):
    """The oracle's query budget M would be exceeded."""


@dataclass(frozen=True)
class RoundBatch:
    """m consecutive single-seed rounds, reserved from an oracle."""

    _graph: ContagionGraph = field(repr=False)
    _stream: RandomStream = field(repr=False)
    seed: int
    first_round: int
    m: int

    def run(self) -> List[FrozenSet[int]]:
        key = seed_key([self.seed])
        seeds = frozenset([self.seed])
        return [
            simulate_cascade(self._graph, seeds, self._stream.at(key, r)).infected
            for r in range(self.first_round, self.first_round + self.m)
        ]


def run_batch(batch: RoundBatch) -> List[FrozenSet[int]]:
    return batch.run()


class QueryOracle:
    """
    Seed set in, infected set out, with query accounting.

    Args:
        graph: hidden ground truth (never exposed to callers)
        stream: master random stream
        budget: optional maximum number of queries M
        delta_lb: lower bound on the contagion parameter handed to learners;
            defaults to the graph's exact value
    """

    def __init__(self, graph: ContagionGraph, stream: RandomStream,
                 budget: Optional[int] = None, delta_lb: Optional[float] = None):
        if budget is not None and budget < 0:
            raise ValueError(f"query budget must be non-negative, got {budget}")
        self._graph = graph
        self._stream = stream.child("oracle")
        self._budget = budget
        self._queries_used = 0
        self._rounds: Dict[str, int] = {}
        self.delta_lb = delta_lb if delta_lb is not None else graph.delta

    @property
    def n(self) -> int:
        return self._graph.n

    @property
    def vertices(self) -> range:
        return range(self._graph.n)

    @property
    def budget(self) -> Optional[int]:
        return self._budget

    def queries_used(self) -> int:
        return self._queries_used

    def remaining(self) -> Optional[int]:
        if self._budget is None:
            return None
        return self._budget - self._queries_used

    def _check_budget(self, count: int) -> None:
        if self._budget is not None and self._queries_used + count > self._budget:
            raise BudgetExhausted(
                f"query budget {self._budget} exhausted "
                f"({self._queries_used} used, {count} requested)"
            )

    def query(self, seeds: Iterable[int]) -> FrozenSet[int]:
        """
        One fresh cascade from ``seeds``; returns the infected set.

        Raises:
            GraphError: a seed vertex is out of range
            BudgetExhausted: no queries left (the counter is left unchanged)
        """
        seeds = frozenset(seeds)
        for s in seeds:
            validate_vertex(self._graph, s)
        self._check_budget(1)

        key = seed_key(seeds)
        r = self._rounds.get(key, 0)
        outcome = simulate_cascade(self._graph, seeds, self._stream.at(key, r))
        self._rounds[key] = r + 1
        self._queries_used += 1
        return outcome.infected

    def split(self, u: int, m: int) -> RoundBatch:
        """
        Reserve m single-seed rounds for vertex u (the split form).

        Raises:
            GraphError: u out of range or m < 1
            BudgetExhausted: fewer than m queries left (nothing is charged)
        """
        validate_vertex(self._graph, u)
        if m < 1:
            raise GraphError(f"round count must be at least 1, got {m}")
        self._check_budget(m)

        key = seed_key([u])
        first = self._rounds.get(key, 0)
        self._rounds[key] = first + m
        self._queries_used += m
        logger.debug("reserved rounds %d..%d for seed %d", first, first + m - 1, u)
        return RoundBatch(self._graph, self._stream, u, first, m)


def queries_used(o: QueryOracle) -> int:
    return o.queries_used()
