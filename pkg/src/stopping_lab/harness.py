"""Seeded Monte Carlo engine and report writing.

Trials are cut into fixed-size blocks. Block ``b`` draws all of its
randomness from ``generator(seed, b)`` and the block size depends only on
the configuration, so the sums coming out of each block are the same no
matter how many worker processes run them. Block results are reduced in
block order, which keeps float totals bit-identical as well.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional

import numpy as np

from . import matching as mt
from . import matroids as mr
from .errors import ConfigError, InvalidArgument
from .oracle import enumerate_win_prob, format_fraction, order_count
from .rng import generator
from .secretary import (
    asymptotic_win,
    k3_win_prob_exact,
    no_wait_hires,
    no_wait_win_prob,
    pairwise_dominance_hits,
    threshold_policy_hires,
    time_policy_hires,
)

log = logging.getLogger(__name__)

SEED_ENV = "STOPPING_LAB_SEED"
DEFAULT_SEED = 20140101
REPORT_COLUMNS = ("problem", "n", "k", "policy", "param", "trials", "mean", "std_err", "ci95", "analytic", "source", "seed")
PROBLEMS = ("secretary", "matroid", "matching")
POLICIES = {
    "secretary": ("no-wait", "threshold", "time"),
    "matroid": ("greedy-after-n", "continued-greedy"),
    "matching": ("returning-matching",),
}
INSTANCE_STREAM = 1 << 40
# cap on floats drawn per secretary block
BLOCK_FLOATS = 2_000_000


def default_seed() -> int:
    return int(os.environ.get(SEED_ENV, DEFAULT_SEED))


@dataclass
class ExperimentConfig:
    problem: str = "secretary"
    n: int = 10
    k: int = 2
    policy: Optional[str] = None
    f_value: Optional[int] = None
    mu: Optional[float] = None
    trials: int = 10_000
    seed: int = field(default_factory=default_seed)
    output: Optional[str] = None
    format: str = "csv"
    instance: Optional[str] = None
    kind: str = "uniform"
    rank: int = 3
    vertices: int = 5
    n_right: Optional[int] = None
    edge_prob: float = 0.6
    first_arrivals_only: bool = False

    def resolved_policy(self) -> str:
        if self.policy:
            return self.policy
        return POLICIES.get(self.problem, ("",))[0]

    def param(self) -> str:
        policy = self.resolved_policy()
        if policy == "threshold":
            return str(self.f_value)
        if policy == "time":
            return repr(float(self.mu))
        if self.problem == "matroid":
            return self.kind
        if self.problem == "matching" and self.first_arrivals_only:
            return "first-arrivals-only"
        return ""

    def problems(self) -> List[str]:
        """Every validation problem, so callers can report them together."""
        out = []
        if self.problem not in PROBLEMS:
            out.append(f"problem must be one of {PROBLEMS}, got {self.problem!r}")
            return out
        policy = self.resolved_policy()
        if policy not in POLICIES[self.problem]:
            out.append(f"policy {policy!r} not valid for {self.problem}; choose from {POLICIES[self.problem]}")
        if self.n is None or self.n < 1:
            out.append("n must be a positive integer")
        if self.k is None or self.k < 1:
            out.append("k must be a positive integer")
        if self.trials is None or self.trials < 1:
            out.append("trials must be a positive integer")
        if self.format not in ("csv", "json"):
            out.append("format must be csv or json")
        if self.mu is not None and policy != "time":
            out.append("mu is only meaningful for the time policy")
        if policy == "time":
            if self.mu is None or not 0.0 <= self.mu < 1.0:
                out.append("time policy needs mu in [0, 1)")
        if self.f_value is not None and policy != "threshold":
            out.append("f_value is only meaningful for the threshold policy")
        if policy == "threshold":
            if self.f_value is None or self.n is None or not 0 <= self.f_value <= self.n:
                out.append("threshold policy needs f_value in [0, n]")
        if policy in ("threshold", "time") and self.k != 2:
            out.append(f"{policy} policy requires k=2")
        if self.problem in ("matroid", "matching") and self.k != 2:
            out.append(f"{self.problem} problem requires k=2")
        if self.problem == "secretary" and self.instance:
            out.append("instance files apply only to matroid and matching problems")
        if self.problem == "matroid" and self.kind not in mr.KINDS:
            out.append(f"kind must be one of {mr.KINDS}")
        if self.instance and not os.path.exists(self.instance):
            out.append(f"instance file {self.instance!r} does not exist")
        return out

    def validate(self) -> None:
        problems = self.problems()
        if problems:
            raise ConfigError(problems)


@dataclass
class SimulationReport:
    problem: str
    n: int
    k: int
    policy: str
    param: str
    trials: int
    empirical_mean: float
    std_error: float
    ci95_halfwidth: float
    analytic_reference: Optional[str]
    source: str
    seed: int
    wall_time: float = 0.0
    analytic_value: Optional[float] = None
    checked: bool = False

    @property
    def consistent(self) -> Optional[bool]:
        """|empirical - analytic| <= 4 standard errors, for exact references only."""
        if not self.checked or self.analytic_value is None:
            return None
        return abs(self.empirical_mean - self.analytic_value) <= 4 * self.std_error + 1e-12

    def row(self) -> Dict[str, str]:
        source = self.source
        if self.consistent is False:
            source += "|MISMATCH>4se"
        return {
            "problem": self.problem,
            "n": str(self.n),
            "k": str(self.k),
            "policy": self.policy,
            "param": self.param,
            "trials": str(self.trials),
            "mean": repr(self.empirical_mean),
            "std_err": repr(self.std_error),
            "ci95": repr(self.ci95_halfwidth),
            "analytic": self.analytic_reference or "",
            "source": source,
            "seed": str(self.seed),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, REPORT_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerow(self.row())
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.row(), indent=2) + "\n"

    def render(self, fmt: str = "csv") -> str:
        return self.to_json() if fmt == "json" else self.to_csv()


# -- block machinery ----------------------------------------------------------


def block_plan(trials: int, block_size: int) -> List[int]:
    block_size = max(1, block_size)
    full, rest = divmod(trials, block_size)
    return [block_size] * full + ([rest] if rest else [])


def _call(args):
    fn, payload, b, size = args
    return fn(payload, b, size)


def run_blocks(fn: Callable, payload, trials: int, block_size: int, jobs: int = 1) -> Dict[str, object]:
    """Run ``fn(payload, block_index, block_trials)`` over all blocks and sum the dicts.

    ``fn`` must be a module-level function so worker processes can import it.
    """
    sizes = block_plan(trials, block_size)
    tasks = [(fn, payload, b, size) for b, size in enumerate(sizes)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_call, tasks))
    else:
        results = [_call(t) for t in tasks]
    total: Dict[str, object] = {}
    for res in results:
        for key, value in res.items():
            total[key] = value if key not in total else total[key] + value
    return total


def _mean_se(total: float, total_sq: float, trials: int):
    mean = total / trials
    if trials < 2:
        return mean, 0.0
    var = max(total_sq - total * total / trials, 0.0) / (trials - 1)
    return mean, math.sqrt(var / trials)


def binomial_se(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / trials)


# -- secretary ----------------------------------------------------------------


def secretary_block_size(n: int, k: int) -> int:
    return max(1, BLOCK_FLOATS // (n * k))


def _secretary_block(payload, b, size):
    seed, n, k, policy, param = payload
    rng = generator(seed, b)
    times = rng.random((size, n, k))
    if policy == "no-wait":
        hired = no_wait_hires(times)
    elif policy == "threshold":
        hired = threshold_policy_hires(times, param)
    else:
        hired = time_policy_hires(times, param)
    return {"wins": int((hired == 0).sum()), "hired": int((hired >= 0).sum())}


def secretary_win_rate(n: int, k: int, policy: str, trials: int, seed: int, param=None, jobs: int = 1):
    """Empirical win probability; returns ``(wins, hires)`` counts."""
    total = run_blocks(_secretary_block, (seed, n, k, policy, param), trials, secretary_block_size(n, k), jobs)
    return total["wins"], total["hired"]


def secretary_reference(n: int, k: int, policy: str, param=None):
    """Analytic reference for a secretary configuration: (value, label, source, exact)."""
    if policy == "no-wait" or (policy == "threshold" and param == 0):
        if k == 2:
            q = no_wait_win_prob(n)
            return float(q), format_fraction(q), "no_wait_win_prob", True
        if k == 3 and n >= 2:
            q = k3_win_prob_exact(n)
            return float(q), format_fraction(q), "k3_closed_form", True
        if k == 1 or n == 1:
            q = Fraction(1, n)
            return float(q), format_fraction(q), "first_item_baseline", True
    if policy == "threshold" and order_count(n, 2) <= 5000:
        q = enumerate_win_prob(n, 2, "threshold", param=param)
        return float(q), format_fraction(q), "exact_oracle", True
    if policy == "time":
        value = asymptotic_win(1.0 - param)
        return value, repr(value), "asymptotic_limit", False
    return None, None, "", False


def _pairwise_block(payload, b, size):
    seed, k = payload
    rng = generator(seed, b)
    times = rng.random((size, 2, k))
    return {"hits": int(pairwise_dominance_hits(times[:, 0], times[:, 1]).sum())}


def pairwise_dominance_frequency(k: int, trials: int, seed: int, jobs: int = 1) -> float:
    """Empirical frequency that all k arrivals of item a precede those of item b."""
    total = run_blocks(_pairwise_block, (seed, k), trials, max(1, BLOCK_FLOATS // (2 * k)), jobs)
    return total["hits"] / trials


# -- matroid ------------------------------------------------------------------


def build_matroid(config: ExperimentConfig) -> mr.WeightedMatroidInstance:
    if config.instance:
        return mr.load_instance(config.instance)
    rng = generator(config.seed, INSTANCE_STREAM)
    if config.kind == "uniform":
        return mr.uniform_instance(config.n, config.rank, rng)
    if config.kind == "graphic":
        edges = mr.complete_graph_edges(config.vertices)
        return mr.graphic_instance(config.vertices, edges, rng)
    return mr.transversal_instance(config.n, config.n_right or config.n, config.edge_prob, rng)


def _matroid_block(payload, b, size):
    seed, inst, continued = payload
    rng = generator(seed, b)
    n = inst.ground_size
    base = np.repeat(np.arange(n), 2)
    weight = weight_sq = 0.0
    membership = np.zeros(n, dtype=np.int64)
    heavy_missing = heavy_added_late = 0
    heavy = inst.labels.get("heavy_edge")
    for _ in range(size):
        labels = rng.permutation(base)
        e_prime = mr.singletons_from_labels(labels, n)
        membership[e_prime] += 1
        picked = mr.greedy_basis(inst, e_prime.tolist())
        chosen = list(picked.basis)
        if continued:
            taken = set(chosen)
            for item in labels[n:].tolist():
                if item not in taken and inst.is_independent(chosen + [item]):
                    chosen.append(item)
                    taken.add(item)
            if heavy is not None and heavy not in set(e_prime.tolist()):
                heavy_missing += 1
                heavy_added_late += heavy in taken
        w = inst.weight(chosen)
        weight += w
        weight_sq += w * w
    return {
        "weight": weight,
        "weight_sq": weight_sq,
        "membership": membership,
        "heavy_missing": heavy_missing,
        "heavy_added_late": heavy_added_late,
    }


@dataclass
class MatroidExperiment:
    trials: int
    opt: float
    mean_weight: float
    std_error: float
    membership_freq: np.ndarray
    heavy_missing: int = 0
    heavy_added_late: int = 0

    @property
    def bound(self) -> float:
        n = len(self.membership_freq)
        return n / (2 * n - 1) * self.opt


def matroid_experiment(inst: mr.WeightedMatroidInstance, trials: int, seed: int, continued: bool = False, jobs: int = 1) -> MatroidExperiment:
    total = run_blocks(_matroid_block, (seed, inst, continued), trials, 2048, jobs)
    mean, se = _mean_se(total["weight"], total["weight_sq"], trials)
    return MatroidExperiment(
        trials,
        mr.greedy_basis(inst).weight,
        mean,
        se,
        total["membership"] / trials,
        total["heavy_missing"],
        total["heavy_added_late"],
    )


# -- matching -----------------------------------------------------------------


def _matching_block(payload, b, size):
    seed, n, n_right, fixed, first_only = payload
    rng = generator(seed, b)
    acc = dict.fromkeys(
        ("ratio", "ratio_sq", "round_n_ratio", "round_n_ratio_sq", "late_new", "late_new_addable",
         "edge_weight_over_opt", "round_n_size", "round_n_unmatched"),
        0.0,
    )
    for _ in range(size):
        inst = fixed if fixed is not None else mt.random_complete_instance(n, n_right, rng)
        result, opt = mt.simulate_once(inst, rng, first_only)
        ratio = result.matching.weight / opt if opt > 0 else 1.0
        r0 = result.round_n_matching.weight / opt if opt > 0 else 1.0
        acc["ratio"] += ratio
        acc["ratio_sq"] += ratio * ratio
        acc["round_n_ratio"] += r0
        acc["round_n_ratio_sq"] += r0 * r0
        acc["round_n_size"] += len(result.round_n_matching)
        acc["round_n_unmatched"] += mt.unmatched_right_fraction(result)[0]
        for rec in result.trace[1:]:
            if rec.new_vertex:
                acc["late_new"] += 1
                acc["late_new_addable"] += rec.addable
                acc["edge_weight_over_opt"] += rec.proposed_weight / opt if opt > 0 else 0.0
    return acc


@dataclass
class MatchingExperiment:
    trials: int
    n: int
    mean_ratio: float
    ratio_se: float
    round_n_ratio: float
    round_n_se: float
    addable_rate: float
    addable_count: int
    late_new_count: int
    edge_weight_over_opt: float
    mean_round_n_size: float
    mean_round_n_unmatched: float


def matching_experiment(
    n: int,
    trials: int,
    seed: int,
    n_right: Optional[int] = None,
    instance: Optional[mt.BipartiteInstance] = None,
    first_arrivals_only: bool = False,
    jobs: int = 1,
) -> MatchingExperiment:
    """Average performance ratio of the returning matching algorithm.

    Without ``instance`` every trial draws a fresh complete bipartite graph
    with i.i.d. uniform weights; OPT is recomputed per trial.
    """
    if instance is not None:
        n, n_right = instance.n_left, instance.n_right
    n_right = n if n_right is None else n_right
    payload = (seed, n, n_right, instance, first_arrivals_only)
    total = run_blocks(_matching_block, payload, trials, 64, jobs)
    mean, se = _mean_se(total["ratio"], total["ratio_sq"], trials)
    m0, se0 = _mean_se(total["round_n_ratio"], total["round_n_ratio_sq"], trials)
    late = int(total["late_new"])
    return MatchingExperiment(
        trials, n, mean, se, m0, se0,
        total["late_new_addable"] / late if late else float("nan"),
        int(total["late_new_addable"]),
        late,
        total["edge_weight_over_opt"] / late if late else float("nan"),
        total["round_n_size"] / trials,
        total["round_n_unmatched"] / trials,
    )


# -- entry point --------------------------------------------------------------


def monte_carlo(config: ExperimentConfig, jobs: int = 1) -> SimulationReport:
    """Run ``config.trials`` simulations and summarise them."""
    config.validate()
    start = time.perf_counter()
    policy = config.resolved_policy()
    analytic_value, analytic, source, exact = None, None, "", False
    if config.problem == "secretary":
        param = config.f_value if policy == "threshold" else config.mu
        wins, _ = secretary_win_rate(config.n, config.k, policy, config.trials, config.seed, param, jobs)
        mean = wins / config.trials
        se = binomial_se(mean, config.trials)
        analytic_value, analytic, source, exact = secretary_reference(config.n, config.k, policy, param)
    elif config.problem == "matroid":
        inst = build_matroid(config)
        exp = matroid_experiment(inst, config.trials, config.seed, policy == "continued-greedy", jobs)
        mean = exp.mean_weight / exp.opt
        se = exp.std_error / exp.opt
        n = inst.ground_size
        q = Fraction(n, 2 * n - 1)
        analytic_value, analytic, source = float(q), format_fraction(q), "matroid_ratio_lower_bound"
    else:
        fixed = mt.load_instance(config.instance) if config.instance else None
        exp = matching_experiment(
            config.n, config.trials, config.seed, config.n_right, fixed, config.first_arrivals_only, jobs
        )
        mean, se = exp.mean_ratio, exp.ratio_se
        analytic_value, analytic, source = 9 / 16, "9/16", "matching_ratio_lower_bound"
    report = SimulationReport(
        problem=config.problem,
        n=config.n,
        k=config.k,
        policy=policy,
        param=config.param(),
        trials=config.trials,
        empirical_mean=mean,
        std_error=se,
        ci95_halfwidth=1.96 * se,
        analytic_reference=analytic,
        source=source,
        seed=config.seed,
        wall_time=time.perf_counter() - start,
        analytic_value=analytic_value,
        checked=exact,
    )
    if report.consistent is False:
        log.warning("empirical mean %.6f differs from %s=%s by more than 4 standard errors",
                    mean, source, analytic)
    return report


def write_report(report: SimulationReport, path: str, fmt: str = "csv") -> None:
    with open(path, "w", newline="") as fh:
        fh.write(report.render(fmt))


# -- flat key=value configuration files ------------------------------------------


def _coerce(name: str, raw: str):
    kinds = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}
    if name not in kinds:
        raise InvalidArgument(f"unknown config key {name!r}")
    kind = str(kinds[name])
    if raw.lower() in ("", "none"):
        return None
    if "bool" in kind:
        return raw.lower() in ("1", "true", "yes", "on")
    if "int" in kind:
        return int(float(raw)) if "e" in raw.lower() else int(raw)
    if "float" in kind:
        return float(raw)
    return raw


def read_config_file(path: str) -> Dict[str, object]:
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidArgument(f"{path}:{lineno}: expected key=value")
            key, raw = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            values[key] = _coerce(key, raw)
    return values
