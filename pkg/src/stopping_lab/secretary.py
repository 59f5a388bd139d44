"""Stopping policies and win-probability formulas for the returning secretary.

Policies come in two flavours. The event-level state machines
(:func:`run_threshold_policy`, :func:`run_time_policy`,
:func:`run_k_returning_no_wait`) consume an :class:`ArrivalSequence` and
follow the pseudocode one event at a time. The batch kernels
(:func:`no_wait_hires`, :func:`time_policy_hires`,
:func:`threshold_policy_hires`) compute the same outcomes for many trials at
once from raw timestamp arrays and are what the Monte Carlo harness runs.

Batch kernels fix ranks to the identity: item 0 is the best, item 1 the
second best, and so on. Randomising the arrival order alone is enough
because only relative order matters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .arrivals import ArrivalSequence
from .errors import InvalidArgument

MU_OPTIMAL = 0.272626


@dataclass(frozen=True)
class RankedInstance:
    """Rank of every item, 1 = best."""

    n: int
    rank: tuple

    def __post_init__(self):
        if sorted(self.rank) != list(range(1, self.n + 1)):
            raise InvalidArgument("rank must be a bijection onto 1..n")

    @classmethod
    def identity(cls, n: int) -> "RankedInstance":
        return cls(n, tuple(range(1, n + 1)))

    @classmethod
    def from_ranks(cls, ranks: Sequence[int]) -> "RankedInstance":
        return cls(len(ranks), tuple(int(r) for r in ranks))

    @property
    def best(self) -> int:
        return self.rank.index(1)


@dataclass(frozen=True)
class PolicyOutcome:
    hired: Optional[int] = None
    decision_round: Optional[int] = None
    decision_time: Optional[float] = None
    won: bool = False


@dataclass(frozen=True)
class OptimalMuResult:
    mu_star: float
    x_star: float
    win_prob: float


def _check_match(seq: ArrivalSequence, inst: RankedInstance) -> None:
    if seq.n != inst.n:
        raise InvalidArgument(f"sequence has n={seq.n} but instance has n={inst.n}")


def _hire(event, inst: RankedInstance) -> PolicyOutcome:
    return PolicyOutcome(event.item, event.round, event.time, inst.rank[event.item] == 1)


def run_threshold_policy(seq: ArrivalSequence, inst: RankedInstance, f_value: int) -> PolicyOutcome:
    """Wait until more than ``f_value`` distinct items have arrived, then
    accept the candidate when it is seen again.

    A candidate whose second arrival falls inside the waiting phase is
    passed over for good; the run may end without a hire.
    """
    _check_match(seq, inst)
    if seq.k != 2:
        raise InvalidArgument("threshold policy is defined for k=2")
    if not 0 <= f_value <= seq.n:
        raise InvalidArgument(f"f_value must lie in [0, {seq.n}]")
    candidate = None
    distinct = 0
    for e in seq.events:
        if e.occurrence == 1:
            distinct += 1
        if e.item == candidate and distinct > f_value:
            return _hire(e, inst)
        if candidate is None or inst.rank[e.item] < inst.rank[candidate]:
            candidate = e.item
    return PolicyOutcome()


def run_time_policy(seq: ArrivalSequence, inst: RankedInstance, mu: float) -> PolicyOutcome:
    """Accept the candidate when it is seen again at a time ``>= mu``."""
    _check_match(seq, inst)
    if not seq.timed:
        raise InvalidArgument("time policy needs a timed sequence")
    if not 0.0 <= mu < 1.0:
        raise InvalidArgument(f"mu must lie in [0, 1), got {mu}")
    candidate = None
    for e in seq.events:
        if e.item == candidate and e.time >= mu:
            return _hire(e, inst)
        if candidate is None or inst.rank[e.item] < inst.rank[candidate]:
            candidate = e.item
    return PolicyOutcome()


def run_k_returning_no_wait(seq: ArrivalSequence, inst: RankedInstance) -> PolicyOutcome:
    """Accept the best-so-far item on its k-th (last) arrival."""
    _check_match(seq, inst)
    candidate = None
    for e in seq.events:
        if candidate is None or inst.rank[e.item] < inst.rank[candidate]:
            candidate = e.item
        if e.item == candidate and e.occurrence == seq.k:
            return _hire(e, inst)
    return PolicyOutcome()


# -- batch kernels -----------------------------------------------------------
#
# times has shape (trials, n, k). For item i let first_i / last_i be its
# earliest and latest arrival and better_i = min(first_j for j < i). Item i
# is the candidate at its last arrival iff last_i < better_i, and the policy
# hires the eligible item with the earliest decision time.


def _first_last(times: np.ndarray):
    # explicit loop over k: much faster than min/max along a short last axis
    first = times[..., 0].copy()
    last = first.copy()
    for j in range(1, times.shape[-1]):
        np.minimum(first, times[..., j], out=first)
        np.maximum(last, times[..., j], out=last)
    return first, last


def _better_first(first: np.ndarray) -> np.ndarray:
    better = np.empty_like(first)
    better[:, 0] = np.inf
    np.minimum.accumulate(first[:, :-1], axis=1, out=better[:, 1:])
    return better


def _earliest(eligible: np.ndarray, when: np.ndarray) -> np.ndarray:
    keyed = np.where(eligible, when, np.inf)
    hired = keyed.argmin(axis=1)
    hired[~eligible.any(axis=1)] = -1
    return hired


def no_wait_hires(times: np.ndarray) -> np.ndarray:
    """Hired item per trial for the no-waiting policy, any k."""
    first, last = _first_last(times)
    return _earliest(last < _better_first(first), last)


def time_policy_hires(times: np.ndarray, mu: float) -> np.ndarray:
    """Hired item per trial (-1 for none) for the time-threshold policy, k=2."""
    first, last = _first_last(times)
    return _earliest((last < _better_first(first)) & (last >= mu), last)


def threshold_policy_hires(times: np.ndarray, f_value: int) -> np.ndarray:
    """Hired item per trial (-1 for none) for the distinct-count threshold policy, k=2."""
    first, last = _first_last(times)
    trials, n = first.shape
    # distinct items seen by each item's second arrival: count of first <= last,
    # done with one flat searchsorted by shifting row b into [2b, 2b+1)
    shift = 2.0 * np.arange(trials)[:, None]
    flat = np.sort(first, axis=1) + shift
    seen = np.searchsorted(flat.ravel(), (last + shift).ravel(), side="right").reshape(trials, n)
    seen -= n * np.arange(trials)[:, None]
    return _earliest((last < _better_first(first)) & (seen > f_value), last)


def pairwise_dominance_hits(times_a: np.ndarray, times_b: np.ndarray) -> np.ndarray:
    """Whether every arrival of ``a`` precedes every arrival of ``b``, per trial."""
    return times_a.max(axis=1) < times_b.min(axis=1)


# -- closed forms ------------------------------------------------------------


def no_wait_win_prob(n: int) -> Fraction:
    """Exact win probability of the no-waiting policy with two arrivals per item."""
    if n < 1:
        raise InvalidArgument("n must be positive")
    return Fraction(2 * n + 1, 3 * n)


def k3_win_prob_exact(n: int) -> Fraction:
    """The closed-form sum for three arrivals per item, as a rational."""
    if n < 2:
        raise InvalidArgument("closed form needs n >= 2; enumerate n=1 instead")
    m = 3 * n
    head = (
        Fraction(3, m)
        + Fraction(m - 3, m) * Fraction(3, m - 1)
        + Fraction(m - 3, m) * Fraction(m - 4, m - 1) * Fraction(3, m - 2)
    )
    tail = sum((m - i) * (m - i - 1) * (m - i - 2) * (m + i - 9) for i in range(4, m - 2))
    return head + Fraction(tail, n * (m - 1) * (m - 2) * (m - 4) * (m - 5))


def k3_win_prob(n: int) -> float:
    return float(k3_win_prob_exact(n))


def win_lower_bound(mu: float, k_terms: int) -> float:
    """Finite series lower bound on the time policy's win probability."""
    if not 0.0 <= mu < 1.0:
        raise InvalidArgument(f"mu must lie in [0, 1), got {mu}")
    if k_terms < 1:
        raise InvalidArgument("k_terms must be positive")
    q = 1.0 - mu
    i = np.arange(1, k_terms + 1, dtype=float)
    terms = q ** (2 * i) * (mu * mu + 4 * mu * i - 2 * mu * mu * i) / (3 * i)
    return 2 * mu * q + math.fsum(terms) + (2.0 / 3.0) * q ** (2 * k_terms + 1)


def asymptotic_win(x: float) -> float:
    """Limit of the series bound at ``x = 1 - mu``."""
    if not 0.0 <= x < 1.0:
        raise InvalidArgument(f"x must lie in [0, 1), got {x}")
    return 2 * x - (4.0 / 3.0) * x * x - (1.0 / 3.0) * (1 - x) ** 2 * math.log1p(-x * x)


def distinct_seen_fraction(x: float) -> float:
    """Expected fraction of items (two arrivals each) seen by time ``x``."""
    return x * x + 2 * x * (1 - x)


_INV_PHI = (math.sqrt(5) - 1) / 2


def _golden_max(f, lo: float, hi: float, tol: float):
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return a, b


def _central_diff(f, x: float, h: float = 1e-6) -> float:
    return (f(x + h) - f(x - h)) / (2 * h)


def optimize_mu(tolerance: float = 1e-6) -> OptimalMuResult:
    """Maximise :func:`asymptotic_win` over (0, 1).

    Golden-section search narrows the bracket, then bisection on the
    central-difference derivative pins the stationary point.
    """
    if tolerance <= 0:
        raise InvalidArgument("tolerance must be positive")
    a, b = _golden_max(asymptotic_win, 0.01, 0.99, max(tolerance, 1e-4))
    a, b = max(a - 1e-3, 0.01), min(b + 1e-3, 0.99)
    da = _central_diff(asymptotic_win, a)
    while b - a > tolerance:
        mid = 0.5 * (a + b)
        dm = _central_diff(asymptotic_win, mid)
        if (dm > 0) == (da > 0):
            a, da = mid, dm
        else:
            b = mid
    x = 0.5 * (a + b)
    return OptimalMuResult(mu_star=1.0 - x, x_star=x, win_prob=asymptotic_win(x))


def pairwise_dominance_prob(k: int) -> Fraction:
    """Probability that all k arrivals of one item precede all k of another."""
    if k < 1:
        raise InvalidArgument("k must be positive")
    return Fraction(1, math.comb(2 * k, k))


@dataclass(frozen=True)
class ThresholdTable:
    n: int
    rows: tuple  # (f_value, Fraction) pairs
    best_f: int
    best_prob: Fraction


def exact_threshold_table(n: int, max_orders: int = 10**7) -> ThresholdTable:
    """Exact win probability of the threshold policy for every f in [0, n]."""
    from .oracle import EnumerationBudget, enumerate_policy_table

    rows = enumerate_policy_table(n, 2, "threshold", EnumerationBudget(max_orders))
    best_f, best_prob = max(rows, key=lambda r: (r[1], -r[0]))
    return ThresholdTable(n, tuple(rows), best_f, best_prob)


__all__ = [
    "MU_OPTIMAL",
    "RankedInstance",
    "PolicyOutcome",
    "OptimalMuResult",
    "ThresholdTable",
    "run_threshold_policy",
    "run_time_policy",
    "run_k_returning_no_wait",
    "no_wait_hires",
    "time_policy_hires",
    "threshold_policy_hires",
    "pairwise_dominance_hits",
    "no_wait_win_prob",
    "k3_win_prob",
    "k3_win_prob_exact",
    "win_lower_bound",
    "asymptotic_win",
    "distinct_seen_fraction",
    "optimize_mu",
    "pairwise_dominance_prob",
    "exact_threshold_table",
]
