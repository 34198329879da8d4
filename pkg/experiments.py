"""
Experiment Harness
==================
Seeded, deterministic recovery experiments: each trial generates a graph,
hides it behind a fresh oracle, runs one learner and scores the predicted
edge set against the truth.

Per-trial seeds are hash-derived from the master seed and the trial index,
so trial i gets the same graph and the same coins whether trials run in one
process or many. Reports are assembled in trial order.

Outputs:
    CSV     one row per trial (plot-ready)
    JSON    spec, summary and full per-trial detail (edge lists included)
    XLSX    optional workbook copy of the CSV (needs openpyxl)
    ledger  optional SQLite run log
"""

from __future__ import annotations

import csv
import json
import logging
import sqlite3
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Tuple, Union

from cascade import RandomStream
from generators import GraphFamilySpec, certify_for_algorithm1, generate
from graph_core import (
    DEFAULT_ENUMERATION_BUDGET,
    ConfigError,
    ContagionGraph,
    Edge,
    EnumerationBudgetExceeded,
    is_forest,
    max_degree,
)
from learners import LEARNERS, LearnerConfig, learn, rounds_for
from oracle import QueryOracle

# Optional: openpyxl for workbook export
try:
    from openpyxl import Workbook
    from openpyxl.styles import Font
    from openpyxl.utils import get_column_letter
    HAS_OPENPYXL = True
except ImportError:
    HAS_OPENPYXL = False

logger = logging.getLogger(__name__)

TRIAL_COLUMNS = [
    "trial", "graph_seed", "n", "true_edges", "predicted_edges", "precision",
    "recall", "exact", "queries", "rounds_per_vertex", "in_scope",
]


# =============================================================================
# EXPERIMENT SPEC
# =============================================================================


@dataclass(frozen=True)
class ExperimentSpec:
    graph: GraphFamilySpec
    learner: str
    trials: int
    master_seed: int
    delta_lb: Optional[float] = None  # None: the generated graph's exact delta
    delta_fail: float = 0.1
    m_override: Optional[int] = None
    chernoff_constant: float = 32.0
    max_deg: Optional[int] = None
    fixed_graph: bool = False
    jobs: int = 1
    enumeration_budget: int = DEFAULT_ENUMERATION_BUDGET
    name: str = "experiment"
    csv_path: Optional[str] = None
    json_path: Optional[str] = None
    xlsx_path: Optional[str] = None
    ledger_path: Optional[str] = None

    def __post_init__(self):
        if self.learner not in LEARNERS:
            raise ConfigError(f"unknown learner {self.learner!r}; choose from {', '.join(LEARNERS)}")
        if self.learner == "bounded_degree" and self.max_deg is None:
            raise ConfigError("bounded_degree learner needs max_deg")
        if not isinstance(self.trials, int) or self.trials < 0:
            raise ConfigError(f"trials must be a non-negative integer, got {self.trials!r}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be at least 1, got {self.jobs}")
        # delta_lb is resolved per graph; everything else can be checked now
        self.learner_config(1.0 if self.delta_lb is None else self.delta_lb)

    def learner_config(self, delta_lb: float) -> LearnerConfig:
        return LearnerConfig(
            delta_lb=delta_lb,
            delta_fail=self.delta_fail,
            m_override=self.m_override,
            chernoff_constant=self.chernoff_constant,
        )

    @classmethod
    def from_config(cls, config: Mapping[str, Any]) -> "ExperimentSpec":
        """
        Build a spec from a loaded configuration dict (see README for the
        schema).

        Raises:
            ConfigError: missing or invalid keys
        """
        graph = dict(config.get("graph") or {})
        learner = dict(config.get("learner") or {})
        output = dict(config.get("output") or {})
        if "family" not in graph:
            raise ConfigError("config needs graph.family")
        if "name" not in learner:
            raise ConfigError("config needs learner.name")

        fixed = bool(graph.get("fixed", False))
        try:
            family = GraphFamilySpec.from_dict(graph)
        except ValueError as e:
            raise ConfigError(str(e)) from e

        max_deg = learner.get("max_deg")
        if max_deg is None and learner["name"] == "bounded_degree":
            max_deg = family.max_deg

        try:
            return cls(
                graph=family,
                learner=learner["name"],
                trials=int(config.get("trials", 0)),
                master_seed=int(config.get("master_seed", 0)),
                delta_lb=learner.get("delta_lb"),
                delta_fail=float(learner.get("delta_fail", 0.1)),
                m_override=learner.get("m_override"),
                chernoff_constant=float(learner.get("chernoff_constant", 32.0)),
                max_deg=max_deg,
                fixed_graph=fixed,
                jobs=int(config.get("jobs", 1)),
                enumeration_budget=int(config.get("enumeration_budget", DEFAULT_ENUMERATION_BUDGET)),
                name=str(config.get("name", "experiment")),
                csv_path=output.get("csv"),
                json_path=output.get("json"),
                xlsx_path=output.get("xlsx"),
                ledger_path=output.get("ledger"),
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"invalid experiment config: {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        """The parts that determine results (no output paths, no job count)."""
        return {
            "name": self.name,
            "graph": self.graph.to_dict(),
            "fixed_graph": self.fixed_graph,
            "learner": {
                "name": self.learner,
                "delta_lb": self.delta_lb,
                "delta_fail": self.delta_fail,
                "m_override": self.m_override,
                "chernoff_constant": self.chernoff_constant,
                "max_deg": self.max_deg,
            },
            "trials": self.trials,
            "master_seed": self.master_seed,
            "enumeration_budget": self.enumeration_budget,
        }


# =============================================================================
# RESULTS
# =============================================================================


def precision_recall(predicted: FrozenSet[Edge], truth: FrozenSet[Edge]) -> Tuple[float, float]:
    """An empty prediction has precision 1; an empty truth has recall 1."""
    hit = len(predicted & truth)
    precision = hit / len(predicted) if predicted else 1.0
    recall = hit / len(truth) if truth else 1.0
    return precision, recall


@dataclass(frozen=True)
class TrialResult:
    index: int
    graph_seed: int
    n: int
    true_edges: FrozenSet[Edge]
    predicted_edges: FrozenSet[Edge]
    queries: int
    rounds_per_vertex: int
    in_scope: bool

    @property
    def precision(self) -> float:
        return precision_recall(self.predicted_edges, self.true_edges)[0]

    @property
    def recall(self) -> float:
        return precision_recall(self.predicted_edges, self.true_edges)[1]

    @property
    def exact(self) -> bool:
        return self.predicted_edges == self.true_edges

    def to_row(self) -> Dict[str, Any]:
        return {
            "trial": self.index,
            "graph_seed": self.graph_seed,
            "n": self.n,
            "true_edges": len(self.true_edges),
            "predicted_edges": len(self.predicted_edges),
            "precision": self.precision,
            "recall": self.recall,
            "exact": int(self.exact),
            "queries": self.queries,
            "rounds_per_vertex": self.rounds_per_vertex,
            "in_scope": int(self.in_scope),
        }

    def to_dict(self) -> Dict[str, Any]:
        data = self.to_row()
        data["exact"] = self.exact
        data["in_scope"] = self.in_scope
        data["true_edges"] = [list(e) for e in sorted(self.true_edges)]
        data["predicted_edges"] = [list(e) for e in sorted(self.predicted_edges)]
        return data


@dataclass
class RecoveryReport:
    spec: ExperimentSpec
    trials: List[TrialResult] = field(default_factory=list)

    @property
    def exact_recovery_rate(self) -> float:
        if not self.trials:
            return 0.0
        return sum(t.exact for t in self.trials) / len(self.trials)

    @property
    def mean_precision(self) -> float:
        if not self.trials:
            return 0.0
        return sum(t.precision for t in self.trials) / len(self.trials)

    @property
    def mean_recall(self) -> float:
        if not self.trials:
            return 0.0
        return sum(t.recall for t in self.trials) / len(self.trials)

    @property
    def total_queries(self) -> int:
        return sum(t.queries for t in self.trials)

    def summary(self) -> Dict[str, Any]:
        return {
            "trials": len(self.trials),
            "exact_recovery_rate": self.exact_recovery_rate,
            "mean_precision": self.mean_precision,
            "mean_recall": self.mean_recall,
            "total_queries": self.total_queries,
            "in_scope_trials": sum(t.in_scope for t in self.trials),
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            "spec": self.spec.to_dict(),
            "summary": self.summary(),
            "trials": [t.to_dict() for t in self.trials],
        }


# =============================================================================
# TRIALS
# =============================================================================


def guarantee_scope(spec: ExperimentSpec, g: ContagionGraph) -> Tuple[bool, str]:
    """Whether the learner's recovery guarantee covers g, with a reason when not."""
    if spec.learner == "ahk":
        return (True, "") if is_forest(g) else (False, "graph is not a forest")
    if spec.learner == "bounded_degree":
        d = max_degree(g)
        return (True, "") if d <= spec.max_deg else (False, f"max degree {d} exceeds {spec.max_deg}")
    try:
        cert = certify_for_algorithm1(g, budget=spec.enumeration_budget)
    except EnumerationBudgetExceeded as e:
        return False, f"certification skipped: {e}"
    return cert.passed, cert.reason


def trial_graph_seed(spec: ExperimentSpec, index: int) -> int:
    root = RandomStream(spec.master_seed).child("graph")
    return root.derive_seed() if spec.fixed_graph else root.at(None, index).derive_seed()


def run_trial(spec: ExperimentSpec, index: int) -> TrialResult:
    """
    One trial: generate, certify (warning only), query, learn, score.

    Raises:
        ConfigError: delta_lb unset and the graph has no edges
    """
    graph_seed = trial_graph_seed(spec, index)
    g = generate(spec.graph.with_seed(graph_seed))

    in_scope, reason = guarantee_scope(spec, g)
    if not in_scope:
        logger.warning("trial %d: outside %s guarantee scope (%s)", index, spec.learner, reason)

    delta_lb = spec.delta_lb if spec.delta_lb is not None else g.delta
    if delta_lb is None:
        raise ConfigError("graph has no edges; set learner.delta_lb explicitly")
    config = spec.learner_config(delta_lb)

    stream = RandomStream(spec.master_seed).child(f"trial{index}")
    oracle = QueryOracle(g, stream, delta_lb=delta_lb)
    predicted = learn(oracle, config, spec.learner, spec.max_deg)

    result = TrialResult(
        index=index,
        graph_seed=graph_seed,
        n=g.n,
        true_edges=g.edge_set(),
        predicted_edges=predicted,
        queries=oracle.queries_used(),
        rounds_per_vertex=rounds_for(spec.learner, g.n, config, spec.max_deg),
        in_scope=in_scope,
    )
    logger.info("trial %d: precision=%.3f recall=%.3f exact=%s queries=%d",
                index, result.precision, result.recall, result.exact, result.queries)
    return result


def run_experiment(spec: ExperimentSpec, write: bool = True) -> RecoveryReport:
    """
    Run every trial (up to spec.jobs at once) and write the configured
    outputs. Zero trials give an empty report.
    """
    logger.info("running %d trials of %s on %s", spec.trials, spec.learner, spec.graph.describe())
    work = partial(run_trial, spec)
    if spec.jobs > 1 and spec.trials > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            results = list(pool.map(work, range(spec.trials)))
    else:
        results = [work(i) for i in range(spec.trials)]

    report = RecoveryReport(spec, results)
    if write:
        write_outputs(report)
    return report


# =============================================================================
# OUTPUT
# =============================================================================


def write_csv(report: RecoveryReport, path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=TRIAL_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for t in report.trials:
            writer.writerow(t.to_row())


def write_json(report: RecoveryReport, path: Union[str, Path]) -> None:
    with open(path, "w", newline="\n") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")


def write_xlsx(report: RecoveryReport, path: Union[str, Path]) -> Dict[str, Any]:
    """
    Workbook copy of the per-trial table plus a summary sheet.

    Returns:
        dict with 'success' and 'message' or 'error'
    """
    if not HAS_OPENPYXL:
        return {'success': False, 'error': 'openpyxl not installed'}

    try:
        wb = Workbook()
        ws = wb.active
        ws.title = "Trials"

        for col_num, header in enumerate(TRIAL_COLUMNS, 1):
            cell = ws.cell(row=1, column=col_num)
            cell.value = header
            cell.font = Font(bold=True)
            ws.column_dimensions[get_column_letter(col_num)].width = max(len(header) + 2, 10)

        for row_num, t in enumerate(report.trials, 2):
            row = t.to_row()
            for col_num, header in enumerate(TRIAL_COLUMNS, 1):
                ws.cell(row=row_num, column=col_num).value = row[header]

        summary = wb.create_sheet("Summary")
        for row_num, (key, value) in enumerate(report.summary().items(), 1):
            summary.cell(row=row_num, column=1).value = key
            summary.cell(row=row_num, column=1).font = Font(bold=True)
            summary.cell(row=row_num, column=2).value = value
        summary.column_dimensions["A"].width = 22

        wb.save(path)
        wb.close()
        return {'success': True, 'message': f'Wrote {len(report.trials)} trials to {path}'}
    except PermissionError:
        return {'success': False, 'error': f'{path} is open in another program. Please close it and try again.'}
    except Exception as e:
        return {'success': False, 'error': f'Failed to write workbook: {str(e)}'}


# =============================================================================
# RUN LEDGER
# =============================================================================


def get_db(path: Union[str, Path]) -> sqlite3.Connection:
    """Get database connection with row factory."""
    conn = sqlite3.connect(str(path))
    conn.row_factory = sqlite3.Row
    return conn


def init_db(conn: sqlite3.Connection) -> None:
    cursor = conn.cursor()
    cursor.execute('''
        CREATE TABLE IF NOT EXISTS experiment (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            name TEXT NOT NULL,
            master_seed INTEGER NOT NULL,
            spec TEXT NOT NULL,
            created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
        )
    ''')
    cursor.execute('''
        CREATE TABLE IF NOT EXISTS trial (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            experiment_id INTEGER NOT NULL,
            trial_index INTEGER NOT NULL,
            learner TEXT NOT NULL,
            n INTEGER NOT NULL,
            edges TEXT NOT NULL,
            predicted TEXT NOT NULL,
            precision REAL,
            recall REAL,
            exact INTEGER,
            queries INTEGER,
            FOREIGN KEY (experiment_id) REFERENCES experiment(id) ON DELETE CASCADE,
            UNIQUE(experiment_id, trial_index)
        )
    ''')
    conn.commit()


def record_run(report: RecoveryReport, path: Union[str, Path]) -> int:
    """Append the experiment and its trials to the ledger; returns the experiment id."""
    conn = get_db(path)
    try:
        init_db(conn)
        cursor = conn.cursor()
        cursor.execute(
            'INSERT INTO experiment (name, master_seed, spec) VALUES (?, ?, ?)',
            (report.spec.name, report.spec.master_seed, json.dumps(report.spec.to_dict(), sort_keys=True)),
        )
        experiment_id = cursor.lastrowid
        for t in report.trials:
            cursor.execute('''
                INSERT INTO trial (experiment_id, trial_index, learner, n, edges, predicted,
                                   precision, recall, exact, queries)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
            ''', (
                experiment_id, t.index, report.spec.learner, t.n,
                json.dumps(sorted(t.true_edges)), json.dumps(sorted(t.predicted_edges)),
                t.precision, t.recall, int(t.exact), t.queries,
            ))
        conn.commit()
        return experiment_id
    finally:
        conn.close()


def write_outputs(report: RecoveryReport) -> None:
    spec = report.spec
    if spec.csv_path:
        write_csv(report, spec.csv_path)
        logger.info("wrote %s", spec.csv_path)
    if spec.json_path:
        write_json(report, spec.json_path)
        logger.info("wrote %s", spec.json_path)
    if spec.xlsx_path:
        result = write_xlsx(report, spec.xlsx_path)
        if not result['success']:
            logger.warning("workbook export skipped: %s", result['error'])
    if spec.ledger_path:
        experiment_id = record_run(report, spec.ledger_path)
        logger.info("recorded experiment %d in %s", experiment_id, spec.ledger_path)
