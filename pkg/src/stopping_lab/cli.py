"""Command-line interface.

Exit status: 0 on success, 1 on validation errors (bad flags or values),
2 when an exact enumeration would exceed its order budget.
"""

from __future__ import annotations

import argparse
from dataclasses import fields
import logging
import sys
from typing import List, Optional

from . import harness
from . import matching as mt
from . import matroids as mr
from .errors import BudgetExceeded, ConfigError, InvalidArgument
from .oracle import EnumerationBudget, enumerate_win_prob, format_fraction, write_golden
from .rng import generator
from .secretary import exact_threshold_table, optimize_mu


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# flags of `simulate` that map onto ExperimentConfig fields
CONFIG_FLAGS = [
    ("--problem", dict(choices=harness.PROBLEMS, help="which online problem to simulate")),
    ("--n", dict(type=int, help="number of items / ground set size / left vertices")),
    ("--k", dict(type=int, help="arrivals per item")),
    ("--policy", dict(help="secretary: no-wait|threshold|time; matroid: greedy-after-n|continued-greedy; "
                           "matching: returning-matching")),
    ("--f-value", dict(type=int, dest="f_value", help="distinct-count threshold for the threshold policy")),
    ("--mu", dict(type=float, help="time threshold in [0,1) for the time policy")),
    ("--trials", dict(type=int, help="number of independent trials")),
    ("--seed", dict(type=int, help=f"master seed (default ${harness.SEED_ENV} or {harness.DEFAULT_SEED})")),
    ("--output", dict(help="write the report to this file instead of stdout")),
    ("--format", dict(choices=("csv", "json"), help="report format (default csv)")),
    ("--instance", dict(help="matroid or bipartite instance file")),
    ("--kind", dict(choices=mr.KINDS, help="generated matroid kind (default uniform)")),
    ("--rank", dict(type=int, help="rank of a generated uniform matroid (default 3)")),
    ("--vertices", dict(type=int, help="vertex count of a generated complete graph (default 5)")),
    ("--n-right", dict(type=int, dest="n_right", help="right-side size for transversal/matching (default n)")),
    ("--edge-prob", dict(type=float, dest="edge_prob", help="edge probability for generated transversal matroids")),
    ("--first-arrivals-only", dict(action="store_const", const=True, dest="first_arrivals_only",
                                   help="matching: only act on rounds where a new vertex arrives")),
]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stopping-lab", description="Returning-secretary simulations and exact oracles.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("simulate", help="Monte Carlo estimate for one configuration")
    for flag, kw in CONFIG_FLAGS:
        s.add_argument(flag, default=None, **kw)
    s.add_argument("--config", help="flat key=value file; explicit flags override it")
    s.add_argument("--jobs", type=int, default=1, help="worker processes (results do not depend on this)")

    e = sub.add_parser("exact", help="exact win probability by enumerating every arrival order")
    e.add_argument("--n", type=int, required=True, help="number of items")
    e.add_argument("--k", type=int, default=2, help="arrivals per item (default 2)")
    e.add_argument("--policy", choices=("no-wait", "threshold"), default="no-wait", help="policy to evaluate")
    e.add_argument("--f-value", type=int, default=0, dest="f_value", help="threshold parameter")
    e.add_argument("--max-orders", type=int, default=10**7, help="enumeration budget")
    e.add_argument("--golden-dir", help="also write oracle_n{n}_k{k}_{policy}.txt here")

    o = sub.add_parser("optimize-mu", help="maximise the limiting win probability over mu")
    o.add_argument("--tol", type=float, default=1e-6, help="tolerance on the maximiser")

    t = sub.add_parser("table", help="exact win probability of every distinct-count threshold")
    t.add_argument("--n", type=int, required=True, help="number of items")
    t.add_argument("--max-orders", type=int, default=10**7, help="enumeration budget")

    m = sub.add_parser("matroid", help="returning matroid secretary experiment")
    m.add_argument("--kind", choices=mr.KINDS, default="uniform", help="generated matroid kind")
    m.add_argument("--n", type=int, default=10, help="ground set size (uniform) or left side (transversal)")
    m.add_argument("--rank", type=int, default=3, help="rank of the uniform matroid")
    m.add_argument("--vertices", type=int, default=5, help="vertices of the complete graph (graphic)")
    m.add_argument("--n-right", type=int, dest="n_right", help="right side size (transversal, default n)")
    m.add_argument("--edge-prob", type=float, default=0.6, dest="edge_prob", help="transversal edge probability")
    m.add_argument("--instance", help="instance file (overrides the generator flags)")
    m.add_argument("--adversarial", action="store_true", help="use the heavy-edge graphic example")
    m.add_argument("--m", type=int, default=20, help="spokes in the heavy-edge example")
    m.add_argument("--eps", type=float, help="light-edge scale in the heavy-edge example")
    m.add_argument("--continued", action="store_true", help="keep adding greedily after round n")
    m.add_argument("--trials", type=int, default=10_000, help="number of arrival orders")
    m.add_argument("--seed", type=int, default=None, help="master seed")
    m.add_argument("--jobs", type=int, default=1, help="worker processes")

    g = sub.add_parser("matching", help="returning bipartite matching experiment")
    g.add_argument("--n", type=int, default=50, help="left vertices")
    g.add_argument("--n-right", type=int, dest="n_right", help="right vertices (default n)")
    g.add_argument("--instance", help="instance file; otherwise a fresh random complete graph per trial")
    g.add_argument("--first-arrivals-only", action="store_true", help="skip rounds where a vertex returns")
    g.add_argument("--trace", help="write the per-round trace of one run to this CSV")
    g.add_argument("--trials", type=int, default=1000, help="number of trials")
    g.add_argument("--seed", type=int, default=None, help="master seed")
    g.add_argument("--jobs", type=int, default=1, help="worker processes")

    c = sub.add_parser("concentration", help="distribution of items seen exactly once by round n")
    c.add_argument("--n", type=int, required=True, help="number of items")
    c.add_argument("--trials", type=int, default=10_000, help="number of trials")
    c.add_argument("--seed", type=int, default=None, help="master seed")
    return p


def _config_from_args(args) -> harness.ExperimentConfig:
    values = {}
    if args.config:
        values.update(harness.read_config_file(args.config))
    for name in (f.name for f in fields(harness.ExperimentConfig)):
        given = getattr(args, name, None)
        if given is not None:
            values[name] = given
    return harness.ExperimentConfig(**values)


def cmd_simulate(args) -> int:
    config = _config_from_args(args)
    report = harness.monte_carlo(config, jobs=args.jobs)
    text = report.render(config.format)
    if config.output:
        harness.write_report(report, config.output, config.format)
        print(f"mean={report.empirical_mean!r} std_err={report.std_error!r} -> {config.output}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_exact(args) -> int:
    budget = EnumerationBudget(args.max_orders)
    param = args.f_value if args.policy == "threshold" else None
    value = enumerate_win_prob(args.n, args.k, args.policy, budget, param=param)
    print(format_fraction(value))
    if args.golden_dir:
        write_golden(args.golden_dir, args.n, args.k, args.policy, budget)
    return 0


def cmd_optimize_mu(args) -> int:
    res = optimize_mu(args.tol)
    print(f"mu_star={res.mu_star:.6f} x_star={res.x_star:.6f} p={res.win_prob:.6f}")
    return 0


def cmd_table(args) -> int:
    table = exact_threshold_table(args.n, args.max_orders)
    print("f_value,prob,approx")
    for f, q in table.rows:
        print(f"{f},{format_fraction(q)},{float(q):.6f}")
    print(f"argmax f_value={table.best_f} prob={format_fraction(table.best_prob)}")
    return 0


def cmd_matroid(args) -> int:
    seed = harness.default_seed() if args.seed is None else args.seed
    rng = generator(seed, harness.INSTANCE_STREAM)
    if args.instance:
        inst = mr.load_instance(args.instance)
    elif args.adversarial:
        inst = mr.adversarial_instance(args.m, args.eps, rng)
    elif args.kind == "uniform":
        inst = mr.uniform_instance(args.n, args.rank, rng)
    elif args.kind == "graphic":
        inst = mr.graphic_instance(args.vertices, mr.complete_graph_edges(args.vertices), rng)
    else:
        inst = mr.transversal_instance(args.n, args.n_right or args.n, args.edge_prob, rng)
    continued = args.continued or args.adversarial
    exp = harness.matroid_experiment(inst, args.trials, seed, continued, args.jobs)
    n = inst.ground_size
    print(f"kind={inst.kind} ground_size={n} trials={args.trials} seed={seed}")
    print(f"opt={exp.opt!r} mean_weight={exp.mean_weight!r} std_err={exp.std_error!r}")
    print(f"ratio={exp.mean_weight / exp.opt:.6f} bound={n}/{2 * n - 1}={n / (2 * n - 1):.6f}")
    print(f"membership_freq min={exp.membership_freq.min():.6f} max={exp.membership_freq.max():.6f}")
    if args.adversarial:
        frac = exp.heavy_added_late / exp.heavy_missing if exp.heavy_missing else float("nan")
        print(f"heavy_missing={exp.heavy_missing} heavy_added_late={exp.heavy_added_late} fraction={frac:.6f}")
    return 0


def cmd_matching(args) -> int:
    seed = harness.default_seed() if args.seed is None else args.seed
    inst = mt.load_instance(args.instance) if args.instance else None
    exp = harness.matching_experiment(args.n, args.trials, seed, args.n_right, inst, args.first_arrivals_only, args.jobs)
    print(f"n={exp.n} trials={exp.trials} seed={seed}")
    print(f"ratio={exp.mean_ratio:.6f} std_err={exp.ratio_se:.6f} bound=9/16={9 / 16:.6f}")
    print(f"round_n_ratio={exp.round_n_ratio:.6f} std_err={exp.round_n_se:.6f}")
    print(f"addable_rate={exp.addable_rate:.6f} mean_round_n_unmatched={exp.mean_round_n_unmatched:.6f}")
    if args.trace:
        rng = generator(seed, harness.INSTANCE_STREAM)
        one = inst if inst is not None else mt.random_complete_instance(args.n, args.n_right or args.n, rng)
        result, _ = mt.simulate_once(one, rng, args.first_arrivals_only)
        with open(args.trace, "w", newline="") as fh:
            fh.write(mt.trace_to_csv(result.trace))
    return 0


def cmd_concentration(args) -> int:
    seed = harness.default_seed() if args.seed is None else args.seed
    s = mt.concentration_stats(args.n, args.trials, seed)
    print(f"n={s.n} trials={s.trials} mean={s.mean:.4f} expected={s.expected_mean:.4f} "
          f"std={s.std:.4f} std_err={s.std_error:.4f}")
    for c, frac in s.outside.items():
        print(f"outside n/2 +- {c:g}*sqrt(n): {frac:.6f}")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "exact": cmd_exact,
    "optimize-mu": cmd_optimize_mu,
    "table": cmd_table,
    "matroid": cmd_matroid,
    "matching": cmd_matching,
    "concentration": cmd_concentration,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, InvalidArgument, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
