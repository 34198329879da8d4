"""
Graph Family Generators
=======================
Deterministic, seeded constructors for the graph families the learners are
tested on, plus the certification check for the large-girth learner.

Families:
    tree(n)                         uniform labeled tree via a Prüfer sequence
    cycle(n)                        C_n
    star_cycle_H(n)                 star on n vertices joined at v0 = 0 with an
                                    n-cycle through v0 (2n - 1 vertices)
    generalized_theta(lengths)      hubs 0 and 1 joined by internally disjoint
                                    paths of the given lengths
    bounded_degree_random(n, D)     pairing model with restarts; max degree <= D
    erdos_renyi(n, edge_prob)       G(n, q); outside every guarantee, stress only
    path(n), star(n), complete(n)   small fixtures
    from_file(path)                 an edge-list file, used as is

Edge probabilities are drawn uniformly from [p_lo, p_hi] in canonical edge
order (p_lo == p_hi gives a constant).
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Mapping, Optional, Tuple

import networkx as nx
import numpy as np

from graph_core import (
    DEFAULT_ENUMERATION_BUDGET,
    ContagionGraph,
    GirthValue,
    GraphError,
    GrowthConditionError,
    PathGrowthRate,
    format_edge_list,
    girth,
    min_girth_required,
    path_growth_rate,
    read_edge_list,
)

logger = logging.getLogger(__name__)

FAMILIES = (
    "tree", "cycle", "star_cycle_H", "generalized_theta", "bounded_degree_random",
    "erdos_renyi", "path", "star", "complete", "from_file",
)

# Families whose graphs sit outside every recovery guarantee
STRESS_FAMILIES = ("erdos_renyi",)

MAX_PAIRING_RESTARTS = 100


class GeneratorError(GraphError):
    """Invalid family parameters, or the pairing model gave up."""


# =============================================================================
# FAMILY SPEC
# =============================================================================


@dataclass(frozen=True)
class GraphFamilySpec:
    family: str
    n: Optional[int] = None
    lengths: Tuple[int, ...] = ()
    max_deg: Optional[int] = None
    regular: bool = True
    edge_prob: Optional[float] = None
    p_lo: float = 0.5
    p_hi: float = 0.5
    seed: int = 0
    path: Optional[str] = None

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise GeneratorError(f"unknown graph family {self.family!r}; choose from {', '.join(FAMILIES)}")
        if self.family != "from_file" and not 0.0 < self.p_lo <= self.p_hi < 1.0:
            raise GeneratorError(f"probability range [{self.p_lo}, {self.p_hi}] must lie inside (0, 1)")

        n = self.n
        if self.family in ("tree", "path", "star", "complete", "erdos_renyi", "bounded_degree_random"):
            if n is None or n < 1:
                raise GeneratorError(f"{self.family} needs n >= 1, got {n}")
        if self.family in ("cycle", "star_cycle_H") and (n is None or n < 3):
            raise GeneratorError(f"{self.family} needs n >= 3, got {n}")
        if self.family == "generalized_theta":
            if not self.lengths or any(length < 2 for length in self.lengths):
                raise GeneratorError(f"generalized_theta needs path lengths >= 2, got {list(self.lengths)}")
        if self.family == "bounded_degree_random":
            if self.max_deg is None or self.max_deg < 1:
                raise GeneratorError(f"bounded_degree_random needs max_deg >= 1, got {self.max_deg}")
            if self.max_deg >= n:
                raise GeneratorError(f"max_deg {self.max_deg} impossible on {n} vertices")
            if self.regular and (n * self.max_deg) % 2:
                raise GeneratorError(f"no {self.max_deg}-regular graph on {n} vertices (n*D is odd)")
        if self.family == "erdos_renyi" and (self.edge_prob is None or not 0.0 <= self.edge_prob <= 1.0):
            raise GeneratorError(f"erdos_renyi needs edge_prob in [0, 1], got {self.edge_prob}")
        if self.family == "from_file" and not self.path:
            raise GeneratorError("from_file needs a path")

    def with_seed(self, seed: int) -> "GraphFamilySpec":
        return GraphFamilySpec(**{**asdict(self), "seed": seed})

    def describe(self) -> str:
        if self.family == "generalized_theta":
            return f"generalized_theta({','.join(map(str, self.lengths))})"
        if self.family == "from_file":
            return f"from_file({self.path})"
        if self.family == "bounded_degree_random":
            return f"bounded_degree_random(n={self.n},D={self.max_deg})"
        if self.family == "erdos_renyi":
            return f"erdos_renyi(n={self.n},q={self.edge_prob})"
        return f"{self.family}({self.n})"

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GraphFamilySpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known - {"fixed"}
        if unknown:
            raise GeneratorError(f"unknown graph keys: {', '.join(sorted(unknown))}")
        values = {k: v for k, v in data.items() if k in known}
        if "lengths" in values:
            values["lengths"] = tuple(int(x) for x in values["lengths"])
        spec = cls(**values)
        spec.validate()
        return spec

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["lengths"] = list(self.lengths)
        return data


# =============================================================================
# STRUCTURES
# =============================================================================


def _cycle_edges(n: int) -> List[Tuple[int, int]]:
    return [(i, (i + 1) % n) for i in range(n)]


def _star_cycle_edges(n: int) -> Tuple[int, List[Tuple[int, int]]]:
    # cycle on 0..n-1 through v0 = 0, star leaves n..2n-2 hang off v0
    edges = _cycle_edges(n) + [(0, leaf) for leaf in range(n, 2 * n - 1)]
    return 2 * n - 1, edges


def _theta_edges(lengths: Tuple[int, ...]) -> Tuple[int, List[Tuple[int, int]]]:
    edges = []
    next_vertex = 2
    for length in lengths:
        chain = [0] + list(range(next_vertex, next_vertex + length - 1)) + [1]
        next_vertex += length - 1
        edges.extend(zip(chain, chain[1:]))
    return next_vertex, edges


def _tree_edges(n: int, rng: np.random.Generator) -> List[Tuple[int, int]]:
    if n == 1:
        return []
    if n == 2:
        return [(0, 1)]
    sequence = [int(x) for x in rng.integers(0, n, size=n - 2)]
    return list(nx.from_prufer_sequence(sequence).edges())


def _pairing_edges(n: int, max_deg: int, regular: bool, rng: np.random.Generator) -> List[Tuple[int, int]]:
    if regular:
        degrees = [max_deg] * n
    else:
        degrees = [int(d) for d in rng.integers(1, max_deg + 1, size=n)]
        if sum(degrees) % 2:
            # drop one stub from the first vertex that can spare it
            i = next(i for i, d in enumerate(degrees) if d > 1) if any(d > 1 for d in degrees) else 0
            degrees[i] -= 1
    stubs = np.repeat(np.arange(n), degrees)

    for attempt in range(MAX_PAIRING_RESTARTS + 1):
        shuffled = rng.permutation(stubs)
        pairs = set()
        ok = True
        for a, b in zip(shuffled[0::2], shuffled[1::2]):
            a, b = int(a), int(b)
            key = (min(a, b), max(a, b))
            if a == b or key in pairs:
                ok = False
                break
            pairs.add(key)
        if ok:
            logger.debug("pairing succeeded after %d restarts", attempt)
            return sorted(pairs)
    raise GeneratorError(
        f"pairing model found no simple graph with max degree {max_deg} on {n} vertices "
        f"after {MAX_PAIRING_RESTARTS} restarts"
    )


def _structure(spec: GraphFamilySpec, rng: np.random.Generator) -> Tuple[int, List[Tuple[int, int]]]:
    family, n = spec.family, spec.n
    if family == "tree":
        return n, _tree_edges(n, rng)
    if family == "cycle":
        return n, _cycle_edges(n)
    if family == "star_cycle_H":
        return _star_cycle_edges(n)
    if family == "generalized_theta":
        return _theta_edges(spec.lengths)
    if family == "bounded_degree_random":
        return n, _pairing_edges(n, spec.max_deg, spec.regular, rng)
    if family == "erdos_renyi":
        graph_seed = int(rng.integers(0, 2 ** 32))
        return n, list(nx.gnp_random_graph(n, spec.edge_prob, seed=graph_seed).edges())
    if family == "path":
        return n, [(i, i + 1) for i in range(n - 1)]
    if family == "star":
        return n, [(0, i) for i in range(1, n)]
    if family == "complete":
        return n, [(i, j) for i in range(n) for j in range(i + 1, n)]
    raise GeneratorError(f"unknown graph family {family!r}")


def generate(spec: GraphFamilySpec) -> ContagionGraph:
    """
    Build the graph described by ``spec``; deterministic in (spec, seed).

    Raises:
        GeneratorError: invalid parameters or pairing restarts exhausted
    """
    spec.validate()
    if spec.family == "from_file":
        return read_edge_list(spec.path)

    rng = np.random.default_rng(spec.seed)
    n, edges = _structure(spec, rng)
    canonical = sorted({(min(u, v), max(u, v)) for u, v in edges})
    if spec.p_lo == spec.p_hi:
        probs = np.full(len(canonical), spec.p_lo)
    else:
        probs = rng.uniform(spec.p_lo, spec.p_hi, size=len(canonical))
    return ContagionGraph(n, {e: float(p) for e, p in zip(canonical, probs)})


def canonical_bytes(g: ContagionGraph) -> bytes:
    return format_edge_list(g).encode("utf-8")


# =============================================================================
# CERTIFICATION
# =============================================================================


@dataclass(frozen=True)
class CertificationReport:
    rho: PathGrowthRate
    girth: GirthValue
    effective_girth: float
    delta: Optional[float]
    required_girth: Optional[int]
    growth_ok: bool
    girth_ok: bool
    reason: str = ""

    @property
    def passed(self) -> bool:
        return self.growth_ok and self.girth_ok

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rho": self.rho.rho,
            "rho_witness_d": self.rho.witness_d,
            "rho_witness_count": self.rho.witness_count,
            "girth": str(self.girth),
            "effective_girth": "inf" if self.girth.is_infinite else int(self.effective_girth),
            "delta": self.delta,
            "required_girth": self.required_girth,
            "growth_ok": self.growth_ok,
            "girth_ok": self.girth_ok,
            "passed": self.passed,
            "reason": self.reason,
        }


def certify_for_algorithm1(g: ContagionGraph, delta: Optional[float] = None,
                           budget: int = DEFAULT_ENUMERATION_BUDGET) -> CertificationReport:
    """
    Check the large-girth learner's hypotheses: 1 <= rho < 1/(1 - delta) and
    g' >= min_girth_required(delta, rho), with g' = g - 1 for odd girth.

    Raises:
        EnumerationBudgetExceeded: the graph is too large for exact rho
    """
    delta = g.delta if delta is None else delta
    g_value = girth(g)
    rho = path_growth_rate(g, budget)

    if delta is None:
        # edgeless: nothing to learn, nothing can go wrong
        return CertificationReport(rho, g_value, g_value.effective(), None, None, True, True,
                                   "edgeless graph")
    try:
        required = min_girth_required(delta, rho.rho)
    except GrowthConditionError as e:
        logger.info("certification failed: %s", e)
        return CertificationReport(rho, g_value, g_value.effective(), delta, None, False, False, str(e))

    girth_ok = g_value.satisfies(required)
    reason = "" if girth_ok else f"girth {g_value} below required {required}"
    return CertificationReport(rho, g_value, g_value.effective(), delta, required, True, girth_ok, reason)
