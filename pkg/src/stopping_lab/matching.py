"""Returning bipartite edge-weighted matching.

Left vertices arrive online, twice each; the right side is known up front.
The online algorithm waits n rounds, matches the left vertices seen exactly
once optimally, then tries to add each later arrival's edge from a fresh
optimal matching on everything seen so far.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .arrivals import ArrivalSequence, gen_permutation_sequence
from .errors import InvalidArgument
from .matroids import first_half_singletons
from .rng import generator

TRACE_HEADER = ("round", "event_item", "occurrence", "matching_size", "matching_weight", "added_edge")

Edge = Tuple[int, int]


@dataclass(frozen=True)
class BipartiteInstance:
    """Weighted bipartite graph stored as a dense matrix.

    ``weights[l, r]`` is the weight of edge (l, r); ``adjacent[l, r]``
    says whether that edge exists.
    """

    weights: np.ndarray
    adjacent: np.ndarray

    def __post_init__(self):
        if self.weights.shape != self.adjacent.shape or self.weights.ndim != 2:
            raise InvalidArgument("weights and adjacency must be matching 2-d arrays")
        if (self.weights[self.adjacent] < 0).any():
            raise InvalidArgument("edge weights must be non-negative")

    @property
    def n_left(self) -> int:
        return self.weights.shape[0]

    @property
    def n_right(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def from_edges(cls, n_left: int, n_right: int, edges: Iterable[Tuple[int, int, float]]) -> "BipartiteInstance":
        w = np.zeros((n_left, n_right))
        adj = np.zeros((n_left, n_right), dtype=bool)
        for l, r, wt in edges:
            if not (0 <= l < n_left and 0 <= r < n_right):
                raise InvalidArgument(f"edge ({l}, {r}) out of range")
            if adj[l, r]:
                raise InvalidArgument(f"duplicate edge ({l}, {r})")
            adj[l, r] = True
            w[l, r] = wt
        return cls(w, adj)

    @classmethod
    def complete(cls, weights: np.ndarray) -> "BipartiteInstance":
        weights = np.asarray(weights, dtype=float)
        return cls(weights, np.ones(weights.shape, dtype=bool))

    def edges(self) -> List[Tuple[int, int, float]]:
        return [(int(l), int(r), float(self.weights[l, r])) for l, r in zip(*np.nonzero(self.adjacent))]

    def edge_weight(self, l: int, r: int) -> float:
        return float(self.weights[l, r])


@dataclass(frozen=True)
class Matching:
    edges: Tuple[Edge, ...] = ()
    weight: float = 0.0

    def __len__(self) -> int:
        return len(self.edges)

    def is_valid(self) -> bool:
        lefts = [l for l, _ in self.edges]
        rights = [r for _, r in self.edges]
        return len(set(lefts)) == len(lefts) and len(set(rights)) == len(rights)


def max_weight_matching(inst: BipartiteInstance, left_subset: Optional[Iterable[int]] = None) -> Matching:
    """Maximum-weight matching of ``G[left_subset ∪ R]`` (all of L by default).

    Missing edges are scored 0 in a rectangular assignment problem, then
    dropped together with zero-weight pairs, so no edge is ever forced.
    """
    lefts = np.arange(inst.n_left) if left_subset is None else np.asarray(sorted(left_subset), dtype=np.int64)
    if lefts.size == 0 or inst.n_right == 0:
        return Matching()
    sub_w = np.where(inst.adjacent[lefts], inst.weights[lefts], 0.0)
    rows, cols = linear_sum_assignment(sub_w, maximize=True)
    keep = inst.adjacent[lefts[rows], cols] & (sub_w[rows, cols] > 0)
    edges = tuple((int(lefts[r]), int(c)) for r, c in zip(rows[keep], cols[keep]))
    return Matching(edges, float(sub_w[rows[keep], cols[keep]].sum()))


def brute_force_matching_weight(inst: BipartiteInstance) -> float:
    """Best matching weight by trying every assignment (tiny graphs only)."""
    best = 0.0

    def extend(l: int, used: int, total: float):
        nonlocal best
        if l == inst.n_left:
            best = max(best, total)
            return
        extend(l + 1, used, total)
        for r in range(inst.n_right):
            if inst.adjacent[l, r] and not used >> r & 1:
                extend(l + 1, used | (1 << r), total + inst.weights[l, r])

    extend(0, 0, 0.0)
    return best


@dataclass(frozen=True)
class RoundRecord:
    """State after processing one round t > n (or round n itself)."""

    round: int
    event_item: int
    occurrence: int
    matching_size: int
    matching_weight: float
    added_edge: Optional[Edge]
    proposed_edge: Optional[Edge] = None
    proposed_weight: float = 0.0
    addable: bool = False
    new_vertex: bool = False


@dataclass
class ReturningMatchingResult:
    matching: Matching
    round_n_matching: Matching
    n_right: int
    trace: List[RoundRecord] = field(default_factory=list)


def run_returning_matching(
    inst: BipartiteInstance,
    seq: ArrivalSequence,
    first_arrivals_only: bool = False,
    record_trace: bool = True,
) -> ReturningMatchingResult:
    """Online returning matching over the arrival order ``seq`` of L.

    After round n, M is an optimal matching on the left vertices seen exactly
    once. For every later round the arriving vertex's edge in a fresh optimal
    matching on all vertices seen so far is added to M when both endpoints
    are still free. With ``first_arrivals_only`` rounds where a vertex
    returns are skipped.
    """
    if seq.k != 2:
        raise InvalidArgument("returning matching needs k=2")
    if seq.n != inst.n_left:
        raise InvalidArgument("sequence must cover exactly the left vertices")
    n = seq.n
    e_prime = first_half_singletons(seq)
    m0 = max_weight_matching(inst, e_prime)
    edges = list(m0.edges)
    weight = m0.weight
    used_l = {l for l, _ in edges}
    used_r = {r for _, r in edges}
    seen = {e.item for e in seq.events[:n]}
    trace: List[RoundRecord] = []
    if record_trace:
        last = seq.events[n - 1]
        trace.append(RoundRecord(n, last.item, last.occurrence, len(edges), weight, None))
    for e in seq.events[n:]:
        new_vertex = e.occurrence == 1
        seen.add(e.item)
        if first_arrivals_only and not new_vertex:
            if record_trace:
                trace.append(RoundRecord(e.round, e.item, e.occurrence, len(edges), weight, None))
            continue
        m_t = max_weight_matching(inst, seen)
        proposed = next((edge for edge in m_t.edges if edge[0] == e.item), None)
        added = None
        addable = False
        proposed_weight = 0.0
        if proposed is not None:
            proposed_weight = inst.edge_weight(*proposed)
            addable = proposed in edges or (proposed[0] not in used_l and proposed[1] not in used_r)
            if addable and proposed not in edges:
                edges.append(proposed)
                used_l.add(proposed[0])
                used_r.add(proposed[1])
                weight += proposed_weight
                added = proposed
        if record_trace:
            trace.append(
                RoundRecord(
                    e.round, e.item, e.occurrence, len(edges), weight, added,
                    proposed, proposed_weight, addable, new_vertex,
                )
            )
    return ReturningMatchingResult(Matching(tuple(edges), weight), m0, inst.n_right, trace)


def unmatched_right_fraction(result: ReturningMatchingResult) -> List[float]:
    """Fraction of R left unmatched by M after each recorded round t >= n."""
    if result.n_right == 0:
        return [0.0 for _ in result.trace]
    return [1.0 - rec.matching_size / result.n_right for rec in result.trace]


def trace_to_csv(trace: Sequence[RoundRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for rec in trace:
        added = "" if rec.added_edge is None else f"{rec.added_edge[0]}-{rec.added_edge[1]}"
        w.writerow((rec.round, rec.event_item, rec.occurrence, rec.matching_size, repr(rec.matching_weight), added))
    return buf.getvalue()


@dataclass(frozen=True)
class ConcentrationSummary:
    n: int
    trials: int
    mean: float
    std: float
    expected_mean: float
    std_error: float
    outside: dict  # c -> fraction with |s_n - n/2| > c sqrt(n)


def sample_first_half_singletons(n: int, trials: int, rng: np.random.Generator, block: int = 0) -> np.ndarray:
    """s_n (items seen exactly once in the first n of 2n arrivals), per trial."""
    out = np.empty(trials, dtype=np.int64)
    block = block or max(1, 4_000_000 // (2 * n))
    for start in range(0, trials, block):
        b = min(block, trials - start)
        keys = rng.random((b, 2 * n))
        # slot 2i and 2i+1 belong to item i; the first n rounds are the n smallest keys
        first_half = np.zeros((b, 2 * n), dtype=bool)
        idx = np.argpartition(keys, n - 1, axis=1)[:, :n]
        np.put_along_axis(first_half, idx, True, axis=1)
        per_item = first_half.reshape(b, n, 2).sum(axis=2)
        out[start:start + b] = (per_item == 1).sum(axis=1)
    return out


def concentration_stats(n: int, trials: int, seed: int, cs: Sequence[float] = (2, 4, 8)) -> ConcentrationSummary:
    if n < 1:
        raise InvalidArgument("n must be positive")
    if trials < 2:
        raise InvalidArgument("need at least two trials")
    s = sample_first_half_singletons(n, trials, generator(seed, 0)).astype(float)
    dev = np.abs(s - n / 2)
    outside = {c: float((dev > c * np.sqrt(n)).mean()) for c in cs}
    std = float(s.std(ddof=1))
    return ConcentrationSummary(
        n, trials, float(s.mean()), std, n * n / (2 * n - 1), std / np.sqrt(trials), outside
    )


# -- instance files -----------------------------------------------------------


def dump_instance(inst: BipartiteInstance) -> str:
    lines = [f"{inst.n_left} {inst.n_right}"]
    lines += [f"{l} {r} {w!r}" for l, r, w in inst.edges()]
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> BipartiteInstance:
    rows = [r for r in (line.split("#", 1)[0].split() for line in text.splitlines()) if r]
    if not rows:
        raise InvalidArgument("empty instance file")
    n_left, n_right = int(rows[0][0]), int(rows[0][1])
    return BipartiteInstance.from_edges(n_left, n_right, ((int(a), int(b), float(c)) for a, b, c in rows[1:]))


def load_instance(path) -> BipartiteInstance:
    return parse_instance(Path(path).read_text())


def random_complete_instance(n_left: int, n_right: int, rng: np.random.Generator) -> BipartiteInstance:
    return BipartiteInstance.complete(rng.random((n_left, n_right)))


def simulate_once(inst: BipartiteInstance, seed_rng: np.random.Generator, first_arrivals_only: bool = False):
    """One arrival order for ``inst``; returns (result, OPT)."""
    seq = gen_permutation_sequence(inst.n_left, 2, int(seed_rng.integers(2**63)))
    result = run_returning_matching(inst, seq, first_arrivals_only, record_trace=True)
    return result, max_weight_matching(inst).weight
