"""
Contagion Structure Learner - Experiment CLI
============================================
Generates contagion networks, analyzes the large-girth learner's hypotheses,
simulates independent cascades, learns hidden edge sets through the query
oracle, checks the probability bounds by Monte Carlo and runs seeded batch
experiments.

Run: python app.py <command> --help
  generate    family -> edge-list file
  analyze     edge-list -> girth / rho / delta / certification
  simulate    edge-list + seeds -> infected set (optional trace)
  learn       edge-list + learner -> predicted edges + recovery summary
  verify      edge-list -> bound checks (JSON lines + CSV)
  experiment  config file -> CSV / JSON reports (optional xlsx, ledger)
"""

import argparse
import copy
import json
import logging
import sys
from pathlib import Path

import yaml

from cascade import RandomStream, format_trace, seed_key, simulate_cascade
from experiments import ExperimentSpec, precision_recall, run_experiment
from generators import FAMILIES, GraphFamilySpec, certify_for_algorithm1, generate
from graph_core import (
    DEFAULT_ENUMERATION_BUDGET,
    ConfigError,
    ContagionError,
    format_edge_set,
    max_degree,
    read_edge_list,
    write_edge_list,
)
from learners import LEARNERS, LearnerConfig, learn, rounds_for
from oracle import QueryOracle
from verification import LEMMAS, run_checks, write_reports_csv, write_reports_json

logger = logging.getLogger(__name__)

# =============================================================================
# CONFIGURATION
# =============================================================================

# Default experiment configuration
DEFAULT_CONFIG = {
    "name": "experiment",
    "graph": {
        "family": "tree",
        "n": 30,
        "p_lo": 0.5,
        "p_hi": 0.5,
        "fixed": False,
    },
    "learner": {
        "name": "ahk",
        "delta_lb": None,  # None: use each generated graph's exact delta
        "delta_fail": 0.1,
        "m_override": None,
        "chernoff_constant": 32.0,
        "max_deg": None,
    },
    "trials": 10,
    "master_seed": 0,
    "jobs": 1,
    "output": {
        "csv": "results.csv",
        "json": "results.json",
        "xlsx": None,
        "ledger": None,
    },
    "enumeration_budget": DEFAULT_ENUMERATION_BUDGET,
}


def load_config(path=None):
    """
    Load an experiment config (YAML, or JSON by suffix) and fill missing keys
    from DEFAULT_CONFIG, one nested level deep.

    Raises:
        ConfigError: file missing or not a mapping
    """
    if path is None:
        return copy.deepcopy(DEFAULT_CONFIG)
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")

    text = path.read_text()
    try:
        if path.suffix.lower() == ".json":
            config = json.loads(text)
        else:
            config = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"could not parse {path}: {e}") from e
    if not isinstance(config, dict):
        raise ConfigError(f"{path} must hold a mapping at the top level")

    # Merge with defaults for any missing keys
    for key, value in DEFAULT_CONFIG.items():
        if key not in config or config[key] is None:
            config[key] = copy.deepcopy(value)
        elif isinstance(value, dict) and isinstance(config[key], dict):
            for sub_key, sub_value in value.items():
                config[key].setdefault(sub_key, sub_value)
    return config


def setup_logging(verbose=False):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s |%(levelname)s: %(message)s',
    )


def banner(title):
    print("=" * 60)
    print(title)
    print("=" * 60)


def mark(ok):
    return "✓" if ok else "✗"


def format_number(x):
    return "inf" if x == float("inf") else f"{x:.12g}"


# =============================================================================
# COMMANDS
# =============================================================================


def cmd_generate(args):
    spec = GraphFamilySpec(
        family=args.family,
        n=args.n,
        lengths=tuple(args.lengths or ()),
        max_deg=args.max_deg,
        regular=not args.irregular,
        edge_prob=args.edge_prob,
        p_lo=args.p_lo,
        p_hi=args.p_hi,
        seed=args.seed,
        path=args.path,
    )
    g = generate(spec)
    write_edge_list(g, args.out)
    print(f"✓ {spec.describe()}: n={g.n} m={g.m} -> {args.out}")
    return 0


def cmd_analyze(args):
    g = read_edge_list(args.edges)
    cert = certify_for_algorithm1(g, args.delta, args.budget)

    banner(f"Analysis: {args.edges}")
    print(f"n={g.n} m={g.m} max_degree={max_degree(g)}")
    print(f"girth={cert.girth}")
    print(f"effective_girth={format_number(cert.effective_girth)}")
    print(f"rho={format_number(cert.rho.rho)} (witness d={cert.rho.witness_d}, p_d={cert.rho.witness_count})")
    if g.delta is None:
        print("delta=undefined (no edges)")
    else:
        print(f"alpha={format_number(g.alpha)} beta={format_number(g.beta)} delta={format_number(g.delta)}")
    if cert.required_girth is not None:
        print(f"required_girth={cert.required_girth}")
    print(f"{mark(cert.passed)} large-girth certification {'passed' if cert.passed else 'failed'}"
          + (f": {cert.reason}" if cert.reason else ""))

    if args.out:
        with open(args.out, "w", newline="\n") as f:
            json.dump(cert.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
    return 0


def cmd_simulate(args):
    g = read_edge_list(args.edges)
    seeds = frozenset(args.seeds)
    stream = RandomStream(args.seed).child("simulate").at(seed_key(seeds), args.round)
    outcome = simulate_cascade(g, seeds, stream)

    print(f"seeds={' '.join(map(str, sorted(seeds)))}")
    print(f"infected={' '.join(map(str, sorted(outcome.infected)))}")
    print(f"size={len(outcome.infected)} steps={outcome.steps}")

    if args.trace:
        with open(args.trace, "w", newline="\n") as f:
            f.write(format_trace(outcome))
    if args.out:
        with open(args.out, "w", newline="\n") as f:
            json.dump({
                "seeds": sorted(seeds),
                "infected": sorted(outcome.infected),
                "infection_step": {str(v): t for v, t in sorted(outcome.infection_step.items())},
                "active_edges": [list(e) for e in outcome.active_edges],
            }, f, indent=2, sort_keys=True)
            f.write("\n")
    return 0


def cmd_learn(args):
    g = read_edge_list(args.edges)
    delta_lb = args.delta_lb if args.delta_lb is not None else g.delta
    if delta_lb is None:
        raise ConfigError("graph has no edges; pass --delta-lb")
    config = LearnerConfig(delta_lb=delta_lb, delta_fail=args.delta_fail, m_override=args.m)
    max_deg = args.max_deg
    if args.learner == "bounded_degree" and max_deg is None:
        max_deg = max_degree(g)

    oracle = QueryOracle(g, RandomStream(args.seed), budget=args.budget, delta_lb=delta_lb)
    predicted = learn(oracle, config, args.learner, max_deg, args.jobs)
    precision, recall = precision_recall(predicted, g.edge_set())

    banner(f"Learner: {args.learner}")
    print(f"rounds per vertex: {rounds_for(args.learner, g.n, config, max_deg)}")
    print(f"queries used: {oracle.queries_used()}")
    print(f"predicted edges: {len(predicted)} / true edges: {g.m}")
    print(f"precision={precision:.4f} recall={recall:.4f}")
    print(f"{mark(predicted == g.edge_set())} exact recovery")

    if args.out:
        with open(args.out, "w", newline="\n") as f:
            f.write(format_edge_set(g.n, predicted))
    return 0


def cmd_verify(args):
    g = read_edge_list(args.edges)
    lemmas = LEMMAS if args.lemma == "all" else (args.lemma,)
    vertices = None
    if args.u is not None and args.v is not None:
        vertices = (args.u, args.v) if args.w is None else (args.u, args.v, args.w)

    reports = run_checks(g, lemmas, args.trials, RandomStream(args.seed), vertices=vertices, k=args.k,
                         label=Path(args.edges).name, jobs=args.jobs, budget=args.budget)

    banner(f"Bound checks: {args.edges}")
    for r in reports:
        scope = "" if r.in_scope else " (outside guarantee scope)"
        print(f"{mark(r.passed)} {r.lemma} {r.vertices}: estimate={r.estimate:.6f} "
              f"{r.direction} bound={r.bound:.6f} se={r.std_error:.6f}{scope}")

    if args.out:
        write_reports_json(reports, args.out)
        write_reports_csv(reports, args.csv or str(Path(args.out).with_suffix(".csv")))
    return 0 if all(r.passed for r in reports if r.in_scope) else 1


def cmd_experiment(args):
    config = load_config(args.config)
    if args.seed is not None:
        config["master_seed"] = args.seed
    if args.jobs is not None:
        config["jobs"] = args.jobs
    if args.ledger:
        config["output"]["ledger"] = args.ledger
    if args.xlsx:
        config["output"]["xlsx"] = args.xlsx
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        name = config.get("name", "experiment")
        config["output"]["csv"] = str(out / f"{name}.csv")
        config["output"]["json"] = str(out / f"{name}.json")

    spec = ExperimentSpec.from_config(config)
    banner(f"Experiment: {spec.name}")
    print(f"{spec.trials} trials of {spec.learner} on {spec.graph.describe()} (master seed {spec.master_seed})")

    report = run_experiment(spec)
    summary = report.summary()
    print(f"exact recovery rate: {summary['exact_recovery_rate']:.3f}")
    print(f"mean precision: {summary['mean_precision']:.4f}  mean recall: {summary['mean_recall']:.4f}")
    print(f"total queries: {summary['total_queries']}")
    print(f"in-scope trials: {summary['in_scope_trials']} / {summary['trials']}")
    for label, path in (("CSV", spec.csv_path), ("JSON", spec.json_path)):
        if path:
            print(f"✓ {label} report: {path}")
    return 0


# =============================================================================
# ARGUMENT PARSING
# =============================================================================


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file")
    common.add_argument("--verbose", action="store_true", help="debug logging")

    # experiment takes its own --seed, defaulting to the config's master_seed
    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--seed", type=int, default=0, help="master seed (default 0)")

    budget = argparse.ArgumentParser(add_help=False)
    budget.add_argument("--budget", type=int, default=DEFAULT_ENUMERATION_BUDGET,
                        help="path-enumeration node budget")

    parser = argparse.ArgumentParser(
        description="Independent cascade simulation and active-query structure learning",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common, seeded], help="write a generated graph as an edge list")
    p.add_argument("family", choices=FAMILIES)
    p.add_argument("--n", type=int)
    p.add_argument("--lengths", type=int, nargs="+", help="path lengths for generalized_theta")
    p.add_argument("--max-deg", type=int)
    p.add_argument("--irregular", action="store_true", help="degrees drawn from 1..max_deg")
    p.add_argument("--edge-prob", type=float, help="G(n, q) edge probability")
    p.add_argument("--p-lo", type=float, default=0.5)
    p.add_argument("--p-hi", type=float, default=0.5)
    p.add_argument("--path", help="edge-list file for from_file")
    p.set_defaults(func=cmd_generate, out_required=True)

    p = sub.add_parser("analyze", parents=[common, seeded, budget], help="girth, rho, delta and certification")
    p.add_argument("edges")
    p.add_argument("--delta", type=float, help="delta to certify against (default: the graph's)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", parents=[common, seeded], help="run one cascade")
    p.add_argument("edges")
    p.add_argument("--seeds", type=int, nargs="+", required=True)
    p.add_argument("--round", type=int, default=0, help="round index of the substream")
    p.add_argument("--trace", help="write 't u v' active-edge lines here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("learn", parents=[common, seeded], help="recover the edge set through the oracle")
    p.add_argument("edges")
    p.add_argument("--learner", choices=LEARNERS, default="large_girth")
    p.add_argument("--delta-lb", type=float)
    p.add_argument("--delta-fail", type=float, default=0.1)
    p.add_argument("--m", type=int, help="rounds per vertex (overrides the round rule)")
    p.add_argument("--max-deg", type=int, help="degree bound D (default: the graph's)")
    p.add_argument("--budget", type=int, help="oracle query budget M")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("verify", parents=[common, seeded, budget], help="Monte Carlo and exact bound checks")
    p.add_argument("edges")
    p.add_argument("--lemma", choices=LEMMAS + ("all",), default="all")
    p.add_argument("--u", type=int)
    p.add_argument("--v", type=int)
    p.add_argument("--w", type=int)
    p.add_argument("--k", type=int, help="chain length for lemma 2")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--csv", help="CSV summary path (default: --out with .csv)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment", parents=[common], help="run a config-file experiment")
    p.add_argument("config")
    p.add_argument("--seed", type=int, help="override master_seed from the config")
    p.add_argument("--jobs", type=int)
    p.add_argument("--ledger", help="SQLite run ledger")
    p.add_argument("--xlsx", help="workbook copy of the trial table")
    p.set_defaults(func=cmd_experiment)

    return parser


# =============================================================================
# MAIN ENTRY POINT
# =============================================================================


def main(argv=None):
    """Main entry point; returns the process exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "out_required", False) and not args.out:
        parser.error(f"{args.command} needs --out")
    setup_logging(args.verbose)

    try:
        return args.func(args)
    except (ContagionError, OSError) as e:
        print(f"ERROR: {e}")
        logger.debug("command failed", exc_info=True)
        return 1


if __name__ == '__main__':
    sys.exit(main())
