"""Weighted matroids and the returning matroid secretary algorithm.

Three kinds are supported, each with its own independence test:

* ``uniform``: a set is independent when it has at most ``rank`` elements.
* ``graphic``: elements are edges; independent sets are forests
  (union-find cycle check).
* ``transversal``: elements are left vertices of a bipartite graph;
  independent sets are those that can be matched into the right side
  (augmenting paths).

``TableMatroid`` stores the independent family explicitly and exists only as
a slow reference for exhaustive axiom checks on small ground sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .arrivals import ArrivalSequence
from .errors import InvalidArgument

KINDS = ("uniform", "graphic", "transversal")


class UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))
        self.rank = [0] * size

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: int, y: int) -> bool:
        """Merge the sets of x and y; False if they were already joined."""
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        if self.rank[rx] < self.rank[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        if self.rank[rx] == self.rank[ry]:
            self.rank[rx] += 1
        return True


def _matchable(lefts: Iterable[int], adjacency: Sequence[Sequence[int]]) -> bool:
    match_right: Dict[int, int] = {}

    def augment(u: int, visited: set) -> bool:
        for r in adjacency[u]:
            if r in visited:
                continue
            visited.add(r)
            if r not in match_right or augment(match_right[r], visited):
                match_right[r] = u
                return True
        return False

    return all(augment(u, set()) for u in lefts)


@dataclass(frozen=True)
class WeightedMatroidInstance:
    """A weighted matroid of one of the supported kinds.

    ``structure`` holds the kind-specific data: the rank for ``uniform``,
    ``(num_vertices, edges)`` for ``graphic`` and ``(num_right, adjacency)``
    for ``transversal``.
    """

    kind: str
    weights: Tuple[float, ...]
    structure: object
    labels: Dict[str, int] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown matroid kind {self.kind!r}")
        if any(w <= 0 for w in self.weights):
            raise InvalidArgument("weights must be positive")
        if len(set(self.weights)) != len(self.weights):
            raise InvalidArgument("weights must be pairwise distinct")

    @property
    def ground_size(self) -> int:
        return len(self.weights)

    def weight(self, subset: Iterable[int]) -> float:
        return float(sum(self.weights[e] for e in subset))

    def is_independent(self, subset: Iterable[int]) -> bool:
        subset = list(subset)
        for e in subset:
            if not 0 <= e < self.ground_size:
                raise InvalidArgument(f"element {e} outside ground set of size {self.ground_size}")
        if len(set(subset)) != len(subset):
            return False
        if self.kind == "uniform":
            return len(subset) <= self.structure
        if self.kind == "graphic":
            num_vertices, edges = self.structure
            uf = UnionFind(num_vertices)
            return all(uf.union(*edges[e]) for e in subset)
        _, adjacency = self.structure
        return _matchable(subset, adjacency)


@dataclass(frozen=True)
class TableMatroid:
    """Independent family listed explicitly, as bitmasks."""

    ground_size: int
    independent: FrozenSet[int]

    @classmethod
    def from_instance(cls, inst: WeightedMatroidInstance) -> "TableMatroid":
        n = inst.ground_size
        masks = frozenset(
            m for m in range(1 << n) if inst.is_independent([e for e in range(n) if m >> e & 1])
        )
        return cls(n, masks)

    def is_independent(self, subset: Iterable[int]) -> bool:
        mask = 0
        for e in subset:
            mask |= 1 << e
        return mask in self.independent


@dataclass(frozen=True)
class GreedyResult:
    basis: Tuple[int, ...]
    weight: float


def greedy_basis(inst: WeightedMatroidInstance, elements: Optional[Iterable[int]] = None) -> GreedyResult:
    """Maximum-weight basis of the restriction to ``elements`` (default: all).

    Elements are scanned heaviest first and kept when independence survives.
    The basis is returned in that order.
    """
    pool = range(inst.ground_size) if elements is None else elements
    order = sorted(pool, key=lambda e: -inst.weights[e])
    chosen: List[int] = []
    if inst.kind == "graphic":
        # incremental union-find instead of re-testing the whole set
        num_vertices, edges = inst.structure
        uf = UnionFind(num_vertices)
        for e in order:
            if uf.union(*edges[e]):
                chosen.append(e)
    else:
        for e in order:
            if inst.is_independent(chosen + [e]):
                chosen.append(e)
    return GreedyResult(tuple(chosen), inst.weight(chosen))


def first_half_singletons(seq: ArrivalSequence) -> List[int]:
    """Elements that arrived exactly once among the first n events."""
    return singletons_from_labels(seq.items, seq.n).tolist()


def singletons_from_labels(labels: np.ndarray, n: int) -> np.ndarray:
    """Same as :func:`first_half_singletons` for a raw label array."""
    return np.flatnonzero(np.bincount(labels[:n], minlength=n) == 1)


@dataclass(frozen=True)
class MatroidOutcome:
    selected: Tuple[int, ...]
    weight: float
    e_prime: Tuple[int, ...]


def run_matroid_secretary(inst: WeightedMatroidInstance, seq: ArrivalSequence) -> MatroidOutcome:
    """Watch the first n arrivals, then run greedy on the elements seen once.

    Selections are committed at round n; every selected element still has
    its second arrival ahead of it, so each acceptance is legal.
    """
    if seq.k != 2:
        raise InvalidArgument("returning matroid secretary needs k=2")
    if seq.n != inst.ground_size:
        raise InvalidArgument("sequence must cover exactly the ground set")
    e_prime = first_half_singletons(seq)
    result = greedy_basis(inst, e_prime)
    return MatroidOutcome(result.basis, result.weight, tuple(e_prime))


def run_continued_greedy(inst: WeightedMatroidInstance, seq: ArrivalSequence) -> MatroidOutcome:
    """Diagnostic variant: after round n, keep adding arriving elements greedily.

    Any arrival after round n of an element whose window is still open is
    added when independence allows. Only used to reproduce the negative
    graphic example.
    """
    base = run_matroid_secretary(inst, seq)
    chosen = list(base.selected)
    taken = set(chosen)
    for e in seq.events[seq.n:]:
        if e.item in taken:
            continue
        if inst.is_independent(chosen + [e.item]):
            chosen.append(e.item)
            taken.add(e.item)
    return MatroidOutcome(tuple(chosen), inst.weight(chosen), base.e_prime)


def greedy_dominance_check(inst: WeightedMatroidInstance, e_prime: Iterable[int]) -> bool:
    """Check that greedy on ``e_prime`` dominates the optimal basis restricted to it.

    The i-th heaviest greedy pick must weigh at least the i-th heaviest
    element of B* restricted to ``e_prime``, for every i.
    """
    e_prime = set(e_prime)
    ours = sorted((inst.weights[e] for e in greedy_basis(inst, e_prime).basis), reverse=True)
    best = greedy_basis(inst).basis
    restricted = sorted((inst.weights[e] for e in best if e in e_prime), reverse=True)
    if len(ours) < len(restricted):
        return False
    return all(a >= b for a, b in zip(ours, restricted))


# -- brute force references --------------------------------------------------


def brute_force_max_weight(inst: WeightedMatroidInstance) -> float:
    """Heaviest basis by exhaustive search over all subsets (small ground sets only)."""
    n = inst.ground_size
    best = 0.0
    for size in range(n + 1):
        for subset in combinations(range(n), size):
            if inst.is_independent(subset):
                best = max(best, inst.weight(subset))
    return best


def axiom_violations(oracle, ground_size: int) -> List[str]:
    """Exhaustively test the three matroid axioms; returns a list of failures."""
    n = ground_size
    full = 1 << n
    indep = np.zeros(full, dtype=bool)
    for m in range(full):
        indep[m] = oracle.is_independent([e for e in range(n) if m >> e & 1])
    problems = []
    if not indep[0]:
        problems.append("empty set is dependent")
    masks = np.arange(full)
    sizes = np.array([bin(m).count("1") for m in range(full)])
    for m in np.flatnonzero(indep):
        for e in range(n):
            if m >> e & 1 and not indep[m & ~(1 << e)]:
                problems.append(f"hereditary: {m:b} independent but {m & ~(1 << e):b} is not")
    # exchange: every independent A smaller than an independent B extends by some x in B \ A
    extend = np.zeros(full, dtype=np.int64)
    for m in range(full):
        bits = 0
        for e in range(n):
            if not m >> e & 1 and indep[m | (1 << e)]:
                bits |= 1 << e
        extend[m] = bits
    for a in np.flatnonzero(indep):
        bigger = indep & (sizes > sizes[a])
        stuck = bigger & ((masks & ~a & extend[a]) == 0)
        if stuck.any():
            b = int(np.flatnonzero(stuck)[0])
            problems.append(f"exchange: A={int(a):b} cannot grow from B={b:b}")
    return problems


# -- generators ---------------------------------------------------------------


def distinct_weights(rng: np.random.Generator, size: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
    """Uniform weights in (low, high) with ties and endpoints re-drawn."""
    w = rng.uniform(low, high, size)
    while True:
        bad = (w <= low) | (w >= high)
        _, first = np.unique(w, return_index=True)
        dup = np.ones(size, dtype=bool)
        dup[first] = False
        bad |= dup
        if not bad.any():
            return w
        w[bad] = rng.uniform(low, high, int(bad.sum()))


def uniform_instance(size: int, rank: int, rng: np.random.Generator) -> WeightedMatroidInstance:
    if size < 1 or rank < 0:
        raise InvalidArgument("uniform matroid needs size >= 1 and rank >= 0")
    w = distinct_weights(rng, size)
    return WeightedMatroidInstance("uniform", tuple(w.tolist()), rank)


def complete_graph_edges(num_vertices: int) -> List[Tuple[int, int]]:
    return list(combinations(range(num_vertices), 2))


def graphic_instance(num_vertices: int, edges: Sequence[Tuple[int, int]], rng: np.random.Generator) -> WeightedMatroidInstance:
    w = distinct_weights(rng, len(edges))
    return WeightedMatroidInstance("graphic", tuple(w.tolist()), (num_vertices, tuple(map(tuple, edges))))


def random_graph_instance(num_vertices: int, edge_prob: float, rng: np.random.Generator, max_edges: Optional[int] = None) -> WeightedMatroidInstance:
    edges = [e for e in complete_graph_edges(num_vertices) if rng.random() < edge_prob]
    if max_edges is not None:
        edges = edges[:max_edges]
    if not edges:
        edges = [(0, 1)]
    return graphic_instance(num_vertices, edges, rng)


def transversal_instance(num_left: int, num_right: int, edge_prob: float, rng: np.random.Generator) -> WeightedMatroidInstance:
    adjacency = tuple(
        tuple(r for r in range(num_right) if rng.random() < edge_prob) for _ in range(num_left)
    )
    w = distinct_weights(rng, num_left)
    return WeightedMatroidInstance("transversal", tuple(w.tolist()), (num_right, adjacency))


def adversarial_instance(m: int, eps: Optional[float] = None, rng: Optional[np.random.Generator] = None) -> WeightedMatroidInstance:
    """Graph on u, v, w_1..w_m with a heavy edge (u, v) and 2m light spokes.

    w(u,v) = m + 1, w(u, w_i) in (eps, 2 eps), w(v, w_i) in (2 eps, 3 eps).
    Element 0 is (u, v); the spokes follow as (u,w_1), (v,w_1), (u,w_2), ...
    """
    if m < 1:
        raise InvalidArgument("m must be positive")
    if eps is None:
        eps = 1e-3 / (m + 1)
    if eps <= 0:
        raise InvalidArgument("eps must be positive")
    rng = np.random.default_rng() if rng is None else rng
    u, v = 0, 1
    edges = [(u, v)]
    weights = [float(m + 1)]
    low = distinct_weights(rng, m, eps, 2 * eps)
    high = distinct_weights(rng, m, 2 * eps, 3 * eps)
    for i in range(m):
        w_i = 2 + i
        edges += [(u, w_i), (v, w_i)]
        weights += [float(low[i]), float(high[i])]
    return WeightedMatroidInstance("graphic", tuple(weights), (m + 2, tuple(edges)), {"heavy_edge": 0})


# -- instance files -----------------------------------------------------------
#
#   kind n [rank | num_vertices | num_right]
#   id weight [u v | r1,r2,...]


def dump_instance(inst: WeightedMatroidInstance) -> str:
    lines = []
    if inst.kind == "uniform":
        lines.append(f"uniform {inst.ground_size} {inst.structure}")
        lines += [f"{e} {w!r}" for e, w in enumerate(inst.weights)]
    elif inst.kind == "graphic":
        nv, edges = inst.structure
        lines.append(f"graphic {inst.ground_size} {nv}")
        lines += [f"{e} {w!r} {a} {b}" for e, (w, (a, b)) in enumerate(zip(inst.weights, edges))]
    else:
        nr, adjacency = inst.structure
        lines.append(f"transversal {inst.ground_size} {nr}")
        lines += [
            f"{e} {w!r} {','.join(map(str, adj)) or '-'}"
            for e, (w, adj) in enumerate(zip(inst.weights, adjacency))
        ]
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> WeightedMatroidInstance:
    rows = [r for r in (line.split("#", 1)[0].split() for line in text.splitlines()) if r]
    if not rows:
        raise InvalidArgument("empty instance file")
    kind, n = rows[0][0], int(rows[0][1])
    extra = int(rows[0][2]) if len(rows[0]) > 2 else None
    body = sorted(rows[1:], key=lambda r: int(r[0]))
    if len(body) != n or [int(r[0]) for r in body] != list(range(n)):
        raise InvalidArgument(f"expected element lines 0..{n - 1}")
    weights = tuple(float(r[1]) for r in body)
    if kind == "uniform":
        if extra is None:
            raise InvalidArgument("uniform instance needs a rank on the header line")
        return WeightedMatroidInstance("uniform", weights, extra)
    if kind == "graphic":
        edges = tuple((int(r[2]), int(r[3])) for r in body)
        nv = extra if extra is not None else 1 + max(max(e) for e in edges)
        return WeightedMatroidInstance("graphic", weights, (nv, edges))
    if kind == "transversal":
        adjacency = tuple(
            tuple(int(x) for x in r[2].split(",")) if len(r) > 2 and r[2] != "-" else () for r in body
        )
        nr = extra if extra is not None else 1 + max((max(a) for a in adjacency if a), default=-1)
        return WeightedMatroidInstance("transversal", weights, (nr, adjacency))
    raise InvalidArgument(f"unknown matroid kind {kind!r}")


def load_instance(path) -> WeightedMatroidInstance:
    return parse_instance(Path(path).read_text())
