"""
Contagion Graph Core
====================
Undirected graph with per-edge infection probabilities, and the exact
structural analyses the learners' guarantees are stated in: shortest-path
distance, girth, simple-path counts, path growth rate, degree bounds and the
minimum-girth condition.

Also home of the canonical edge-list text format:

    # comment lines start with '#'
    n m
    u v p_uv          (m lines, p as decimal)

The writer emits edges sorted by (min endpoint, max endpoint).
"""

from __future__ import annotations

import logging
import math
import numbers
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple, Union

import networkx as nx

logger = logging.getLogger(__name__)

# =============================================================================
# CONSTANTS
# =============================================================================

# Node expansions allowed for exhaustive simple-path enumeration
DEFAULT_ENUMERATION_BUDGET = 10 ** 8

# Ratios within this distance of an integer are snapped before a ceiling
GUARD_BAND = 1e-9

Edge = Tuple[int, int]

# =============================================================================
# ERRORS
# =============================================================================


class ContagionError(Exception):
    """Base class for every error raised by this package."""


class GraphError(ContagionError, ValueError):
    """Invalid graph construction, vertex out of range or malformed edge list."""


class EnumerationBudgetExceeded(ContagionError):
    """Exhaustive path enumeration needed more node expansions than allowed."""


class GrowthConditionError(ContagionError, ValueError):
    """The growth condition 1 <= rho < 1/(1 - delta) does not hold."""


class PreconditionError(ContagionError, ValueError):
    """A check was asked about vertices that do not meet its precondition."""


class ConfigError(ContagionError, ValueError):
    """Invalid learner or experiment configuration."""


# =============================================================================
# GIRTH VALUES
# =============================================================================


class GirthValue:
    """Shortest-cycle length: either Finite(g) or Infinite (acyclic graph)."""

    is_infinite = False

    def effective(self) -> float:
        """Even lower bound g' on the girth (g - 1 for odd g)."""
        raise NotImplementedError

    def satisfies(self, bound: int) -> bool:
        return self.effective() >= bound

    def half(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class Finite(GirthValue):
    g: int

    def __post_init__(self):
        if self.g < 3:
            raise GraphError(f"girth must be at least 3, got {self.g}")

    def effective(self) -> float:
        return self.g - 1 if self.g % 2 else self.g

    def half(self) -> float:
        return self.g / 2

    def __str__(self) -> str:
        return str(self.g)


@dataclass(frozen=True)
class Infinite(GirthValue):
    is_infinite = True

    def effective(self) -> float:
        return math.inf

    def half(self) -> float:
        return math.inf

    def __str__(self) -> str:
        return "inf"


INFINITE = Infinite()


@dataclass(frozen=True)
class PathGrowthRate:
    rho: float
    witness_d: int
    witness_count: int


# =============================================================================
# CONTAGION GRAPH
# =============================================================================


class ContagionGraph:
    """
    Hidden ground-truth network: vertices 0..n-1, undirected edges each with
    an infection probability strictly inside (0, 1).

    Instances are immutable after construction.
    """

    def __init__(self, n: int, edges: Union[Mapping[Edge, float], Iterable[Tuple[int, int, float]]] = ()):
        if not isinstance(n, numbers.Integral) or isinstance(n, bool) or n < 0:
            raise GraphError(f"vertex count must be a non-negative integer, got {n!r}")
        self._n = n = int(n)

        items = edges.items() if isinstance(edges, Mapping) else (((a, b), p) for a, b, p in edges)
        probs: Dict[Edge, float] = {}
        for (u, v), p in items:
            u, v, p = int(u), int(v), float(p)
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) has an endpoint outside 0..{n - 1}")
            if not 0.0 < p < 1.0:
                raise GraphError(f"edge ({u}, {v}) probability {p} is not strictly inside (0, 1)")
            key = (u, v) if u < v else (v, u)
            if key in probs:
                raise GraphError(f"duplicate edge {key}")
            probs[key] = p
        self._probs = dict(sorted(probs.items()))

        adjacency: List[List[Tuple[int, float]]] = [[] for _ in range(n)]
        for (u, v), p in self._probs.items():
            adjacency[u].append((v, p))
            adjacency[v].append((u, p))
        self._weighted = tuple(tuple(sorted(nbrs)) for nbrs in adjacency)
        self._neighbors = tuple(tuple(v for v, _ in nbrs) for nbrs in self._weighted)

    # -- basic accessors ------------------------------------------------------

    @property
    def n(self) -> int:
        return self._n

    @property
    def m(self) -> int:
        return len(self._probs)

    @property
    def edges(self) -> Tuple[Edge, ...]:
        """Edges as (min, max) pairs in canonical order."""
        return tuple(self._probs)

    def edge_set(self) -> FrozenSet[Edge]:
        return frozenset(self._probs)

    def edge_items(self) -> Tuple[Tuple[int, int, float], ...]:
        return tuple((u, v, p) for (u, v), p in self._probs.items())

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self._probs

    def probability(self, u: int, v: int) -> float:
        try:
            return self._probs[(min(u, v), max(u, v))]
        except KeyError:
            raise GraphError(f"({u}, {v}) is not an edge") from None

    def neighbors(self, u: int) -> Tuple[int, ...]:
        validate_vertex(self, u)
        return self._neighbors[u]

    def weighted_neighbors(self, u: int) -> Tuple[Tuple[int, float], ...]:
        """(neighbor, p_uv) pairs in ascending neighbor order."""
        return self._weighted[u]

    def degree(self, u: int) -> int:
        return len(self.neighbors(u))

    # -- contagion parameter --------------------------------------------------

    @property
    def alpha(self) -> Optional[float]:
        return min(self._probs.values()) if self._probs else None

    @property
    def beta(self) -> Optional[float]:
        return max(self._probs.values()) if self._probs else None

    @property
    def delta(self) -> Optional[float]:
        if not self._probs:
            return None
        return min(self.alpha, 1.0 - self.beta)

    @cached_property
    def nx_graph(self) -> nx.Graph:
        return to_networkx(self)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ContagionGraph):
            return NotImplemented
        return self._n == other._n and self._probs == other._probs

    def __hash__(self) -> int:
        return hash((self._n, tuple(self._probs.items())))

    def __repr__(self) -> str:
        return f"ContagionGraph(n={self._n}, m={self.m})"

    def __getstate__(self):
        state = self.__dict__.copy()
        state.pop("nx_graph", None)
        return state


def validate_vertex(g: ContagionGraph, u: int) -> None:
    if not isinstance(u, numbers.Integral) or isinstance(u, bool) or not 0 <= u < g.n:
        raise GraphError(f"vertex {u!r} out of range 0..{g.n - 1}")


def to_networkx(g: ContagionGraph) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    for u, v, p in g.edge_items():
        G.add_edge(u, v, p=p)
    return G


def contagion_parameter(g: ContagionGraph) -> Tuple[Optional[float], Optional[float], Optional[float]]:
    """Return (alpha, beta, delta); all None for an edgeless graph."""
    return g.alpha, g.beta, g.delta


def neighbors(g: ContagionGraph, u: int) -> Tuple[int, ...]:
    return g.neighbors(u)


def is_forest(g: ContagionGraph) -> bool:
    return nx.is_forest(g.nx_graph) if g.n else True


# =============================================================================
# DISTANCES AND GIRTH
# =============================================================================


def shortest_path_distance(g: ContagionGraph, u: int, v: int) -> Optional[int]:
    """
    Hop count of a shortest u-v path.

    Returns:
        0 when u == v, None when v is unreachable from u.
    """
    validate_vertex(g, u)
    validate_vertex(g, v)
    try:
        return nx.shortest_path_length(g.nx_graph, u, v)
    except nx.NetworkXNoPath:
        return None


def distances_from(g: ContagionGraph, u: int) -> Dict[int, int]:
    validate_vertex(g, u)
    return dict(nx.single_source_shortest_path_length(g.nx_graph, u))


def girth(g: ContagionGraph) -> GirthValue:
    """
    Exact shortest-cycle length by breadth-first search from every vertex.

    A non-tree edge (x, y) met during the search from a root closes a walk of
    length dist[x] + dist[y] + 1 containing a cycle; the minimum over all
    roots is attained when the root lies on a shortest cycle.
    """
    best = math.inf
    for root in range(g.n):
        dist = {root: 0}
        parent = {root: -1}
        frontier = [root]
        while frontier:
            # Nothing shorter can be found below this level
            if 2 * dist[frontier[0]] + 1 >= best:
                break
            nxt = []
            for x in frontier:
                for y in g._neighbors[x]:
                    if y not in dist:
                        dist[y] = dist[x] + 1
                        parent[y] = x
                        nxt.append(y)
                    elif parent[x] != y:
                        best = min(best, dist[x] + dist[y] + 1)
            frontier = nxt
    return INFINITE if best == math.inf else Finite(int(best))


def effective_girth(value: GirthValue) -> float:
    """g' = g - 1 when g is odd (an even lower bound), otherwise g."""
    return value.effective()


def max_degree(g: ContagionGraph) -> int:
    return max((len(nbrs) for nbrs in g._neighbors), default=0)


# =============================================================================
# SIMPLE PATHS AND PATH GROWTH RATE
# =============================================================================


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def spend(self) -> None:
        self.used += 1
        if self.used > self.limit:
            raise EnumerationBudgetExceeded(
                f"simple-path enumeration exceeded {self.limit} node expansions"
            )


def count_simple_paths(g: ContagionGraph, u: int, v: int, d: int,
                       budget: int = DEFAULT_ENUMERATION_BUDGET) -> int:
    """
    Exact number of simple paths with exactly d edges from u to v.

    Depth-first enumeration, pruned by the BFS distance to v (a simple path
    can never reach v in fewer steps than the distance).

    Raises:
        EnumerationBudgetExceeded: more than ``budget`` node expansions needed
    """
    validate_vertex(g, u)
    validate_vertex(g, v)
    if u == v:
        raise GraphError("simple paths need distinct endpoints")
    if d < 1:
        raise GraphError(f"path length must be at least 1, got {d}")

    to_v = distances_from(g, v)
    if u not in to_v or to_v[u] > d:
        return 0

    adj = g._neighbors
    spent = _Budget(budget)
    on_path = {u}
    count = 0

    def extend(x: int, remaining: int) -> None:
        nonlocal count
        for y in adj[x]:
            if y in on_path:
                continue
            if y == v:
                if remaining == 1:
                    count += 1
                continue
            if to_v.get(y, math.inf) > remaining - 1:
                continue
            spent.spend()
            on_path.add(y)
            extend(y, remaining - 1)
            on_path.discard(y)

    extend(u, d)
    return count


def path_length_profile(g: ContagionGraph, budget: int = DEFAULT_ENUMERATION_BUDGET) -> List[int]:
    """
    p_d for d = 0..n-1, where p_d is the largest number of simple paths of
    exactly d edges between any ordered pair of distinct vertices
    (p_0 is always 0).
    """
    n = g.n
    adj = g._neighbors
    spent = _Budget(budget)
    profile = [0] * max(n, 1)

    for source in range(n):
        # counts[t][d] for paths source -> t of length d
        counts = [[0] * n for _ in range(n)]
        on_path = [False] * n
        on_path[source] = True

        def walk(x: int, depth: int) -> None:
            for y in adj[x]:
                if on_path[y]:
                    continue
                spent.spend()
                counts[y][depth + 1] += 1
                on_path[y] = True
                walk(y, depth + 1)
                on_path[y] = False

        walk(source, 0)
        for row in counts:
            for d, c in enumerate(row):
                if c > profile[d]:
                    profile[d] = c

    logger.debug("path profile computed with %d expansions", spent.used)
    return profile


def path_growth_rate(g: ContagionGraph, budget: int = DEFAULT_ENUMERATION_BUDGET) -> PathGrowthRate:
    """
    Exact rho = max_d (p_d)^(1/d) over d in [1, n-1].

    Ties keep the smallest d. An edgeless graph reports rho = 1 with an empty
    witness (witness_d = witness_count = 0).
    """
    if g.m == 0:
        return PathGrowthRate(rho=1.0, witness_d=0, witness_count=0)
    if is_forest(g):
        return PathGrowthRate(rho=1.0, witness_d=1, witness_count=1)

    profile = path_length_profile(g, budget)
    best_d, best_count, best_log = 0, 0, -math.inf
    for d in range(1, len(profile)):
        c = profile[d]
        if c == 0:
            continue
        score = math.log(c) / d
        if score > best_log + 1e-15:
            best_d, best_count, best_log = d, c, score
    return PathGrowthRate(rho=best_count ** (1.0 / best_d), witness_d=best_d, witness_count=best_count)


# =============================================================================
# GIRTH REQUIREMENT
# =============================================================================


def check_growth_condition(delta: float, rho: float) -> float:
    """Validate 0 < delta <= 1 and 1 <= rho < 1/(1 - delta); return rho(1 - delta)."""
    if not 0.0 < delta <= 1.0:
        raise GrowthConditionError(f"contagion parameter must lie in (0, 1], got {delta}")
    x = rho * (1.0 - delta)
    if rho < 1.0 or x >= 1.0:
        raise GrowthConditionError(
            f"growth condition fails: need 1 <= rho < 1/(1 - delta), got rho={rho}, delta={delta}"
        )
    return x


def snapped_ceil(value: float) -> int:
    nearest = round(value)
    if abs(value - nearest) <= GUARD_BAND:
        return int(nearest)
    return math.ceil(value)


def min_girth_required(delta: float, rho: float) -> int:
    """
    Even lower bound on the girth under which long active paths are rare:

        2 * ceil((2 log(delta/2) + log(1 - rho(1 - delta))) / log(rho(1 - delta)))

    Raises:
        GrowthConditionError: 1 <= rho < 1/(1 - delta) does not hold
    """
    x = check_growth_condition(delta, rho)
    if x == 0.0:
        return 0
    ratio = (2.0 * math.log(delta / 2.0) + math.log(1.0 - x)) / math.log(x)
    return 2 * snapped_ceil(ratio)


# =============================================================================
# EDGE-LIST I/O
# =============================================================================


def _content_lines(text: str) -> List[str]:
    return [line.strip() for line in text.splitlines()
            if line.strip() and not line.strip().startswith("#")]


def _parse_header(lines: List[str]) -> Tuple[int, int]:
    if not lines:
        raise GraphError("edge list is empty (missing 'n m' header)")
    parts = lines[0].split()
    if len(parts) != 2:
        raise GraphError(f"malformed header {lines[0]!r}, expected 'n m'")
    try:
        n, m = int(parts[0]), int(parts[1])
    except ValueError:
        raise GraphError(f"malformed header {lines[0]!r}") from None
    if len(lines) - 1 != m:
        raise GraphError(f"header announces {m} edges but {len(lines) - 1} edge lines follow")
    return n, m


def parse_edge_list(text: str) -> ContagionGraph:
    lines = _content_lines(text)
    n, _ = _parse_header(lines)
    edges = []
    for line in lines[1:]:
        parts = line.split()
        if len(parts) != 3:
            raise GraphError(f"malformed edge line {line!r}, expected 'u v p'")
        try:
            edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError:
            raise GraphError(f"malformed edge line {line!r}") from None
    return ContagionGraph(n, edges)


def parse_edge_set(text: str) -> Tuple[int, FrozenSet[Edge]]:
    """Read a structure-only edge list (``u v`` lines; a trailing p is ignored)."""
    lines = _content_lines(text)
    n, _ = _parse_header(lines)
    edges = set()
    for line in lines[1:]:
        parts = line.split()
        if len(parts) not in (2, 3):
            raise GraphError(f"malformed edge line {line!r}")
        u, v = int(parts[0]), int(parts[1])
        edges.add((min(u, v), max(u, v)))
    return n, frozenset(edges)


def format_edge_list(g: ContagionGraph) -> str:
    lines = [f"{g.n} {g.m}"]
    lines.extend(f"{u} {v} {p!r}" for u, v, p in g.edge_items())
    return "\n".join(lines) + "\n"


def format_edge_set(n: int, edges: Iterable[Edge]) -> str:
    canonical = sorted({(min(u, v), max(u, v)) for u, v in edges})
    lines = [f"{n} {len(canonical)}"]
    lines.extend(f"{u} {v}" for u, v in canonical)
    return "\n".join(lines) + "\n"


def read_edge_list(path: Union[str, Path]) -> ContagionGraph:
    with open(path, "r") as f:
        return parse_edge_list(f.read())


def write_edge_list(g: ContagionGraph, path: Union[str, Path]) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(format_edge_list(g))
