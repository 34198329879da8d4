"""
Independent Cascade Engine
==========================
Step-synchronous independent cascade process with reproducible per-round
randomness and an active-edge audit log.

At step t every vertex infected at step t-1 tosses one coin per neighbor that
is still uninfected, succeeding with the edge's probability. An edge is
attempted at most once, at the first step one of its endpoints becomes
infected; two vertices infected at the same step never attempt each other.
"""

from __future__ import annotations

import hashlib
import logging
import random
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

from graph_core import ContagionGraph, GrowthConditionError, validate_vertex

logger = logging.getLogger(__name__)

SEED_MASK = (1 << 64) - 1

SeedKey = Union[int, str, None]


# =============================================================================
# RANDOM STREAMS
# =============================================================================


def seed_key(seeds: Iterable[int]) -> str:
    """Stable label for a seed set, e.g. '3' or '0,4,7' ('' for the empty set)."""
    return ",".join(str(s) for s in sorted(set(seeds)))


@dataclass(frozen=True)
class RandomStream:
    """
    A 64-bit master seed plus substream coordinates (context, seed vertex,
    round). Identical coordinates always reproduce the identical coins, so
    rounds can be simulated in any order or in parallel.
    """

    master_seed: int
    context: str = "root"
    vertex: SeedKey = None
    round_index: Optional[int] = None

    def child(self, context: str) -> "RandomStream":
        return replace(self, context=f"{self.context}/{context}", vertex=None, round_index=None)

    def at(self, vertex: SeedKey, round_index: int) -> "RandomStream":
        return replace(self, vertex=vertex, round_index=round_index)

    def derive_seed(self) -> int:
        key = (self.master_seed & SEED_MASK).to_bytes(8, "little")
        digest = hashlib.blake2b(
            f"{self.context}|{self.vertex}|{self.round_index}".encode("utf-8"),
            key=key,
            digest_size=8,
        ).digest()
        return int.from_bytes(digest, "little")

    def rng(self) -> random.Random:
        return random.Random(self.derive_seed())


# =============================================================================
# CASCADE OUTCOME
# =============================================================================


@dataclass(frozen=True)
class CascadeOutcome:
    seeds: FrozenSet[int]
    infected: FrozenSet[int]
    infection_step: Dict[int, int] = field(hash=False)
    active_edges: Tuple[Tuple[int, int], ...]

    @property
    def steps(self) -> int:
        return max(self.infection_step.values(), default=0)

    def chain_length(self, v: int) -> Optional[int]:
        """Length of the credited transmission chain from the seed set to v."""
        return self.infection_step.get(v)

    def infected_at(self, t: int) -> FrozenSet[int]:
        return frozenset(v for v, s in self.infection_step.items() if s == t)


def simulate_cascade(g: ContagionGraph, seeds: Iterable[int], stream: RandomStream) -> CascadeOutcome:
    """
    Run one cascade from ``seeds``.

    Frontier vertices attempt neighbors in ascending (frontier vertex,
    neighbor) order and coins are drawn lazily per attempt; when several
    frontier vertices could infect the same vertex, the lowest-id successful
    infector is credited and later attempts on it in that step are skipped.

    Raises:
        GraphError: a seed vertex is out of range
    """
    seeds = frozenset(seeds)
    for s in seeds:
        validate_vertex(g, s)

    coin = stream.rng().random
    step = {s: 0 for s in seeds}
    active: List[Tuple[int, int]] = []
    frontier = sorted(seeds)
    t = 0
    while frontier:
        t += 1
        newly = []
        for u in frontier:
            for v, p in g.weighted_neighbors(u):
                if v in step:
                    continue
                if coin() < p:
                    step[v] = t
                    newly.append(v)
                    active.append((u, v))
        frontier = sorted(newly)

    return CascadeOutcome(
        seeds=seeds,
        infected=frozenset(step),
        infection_step=step,
        active_edges=tuple(active),
    )


def replay_steps(seeds: Iterable[int], active_edges: Iterable[Tuple[int, int]]) -> Dict[int, int]:
    """Rebuild infection steps from the active-edge log."""
    step = {s: 0 for s in seeds}
    pending = list(active_edges)
    while pending:
        remaining = []
        for u, v in pending:
            if u in step:
                step[v] = step[u] + 1
            else:
                remaining.append((u, v))
        if len(remaining) == len(pending):
            raise ValueError(f"active edges {remaining} are not reachable from the seed set")
        pending = remaining
    return step


def format_trace(outcome: CascadeOutcome) -> str:
    """One ``t u v`` line per active edge."""
    return "".join(f"{outcome.infection_step[v]} {u} {v}\n" for u, v in outcome.active_edges)


# =============================================================================
# LONG ACTIVE PATHS
# =============================================================================


def path_active_probability_bound(rho: float, delta: float, k: int) -> float:
    """
    Upper bound (rho(1-delta))^k / (1 - rho(1-delta)) on the probability that
    a seed infects a given vertex along paths of length at least k.

    Raises:
        GrowthConditionError: rho(1 - delta) >= 1
    """
    if k < 1:
        raise ValueError(f"path length k must be at least 1, got {k}")
    x = rho * (1.0 - delta)
    if x >= 1.0:
        raise GrowthConditionError(f"rho(1 - delta) = {x} is not below 1")
    return x ** k / (1.0 - x)
