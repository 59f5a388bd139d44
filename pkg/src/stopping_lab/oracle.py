"""Exhaustive enumeration of arrival orders for tiny instances.

Every distinguishable order of the multiset {0^k, 1^k, ..., (n-1)^k} is
visited once and the policy under test is run on it with identity ranks.
The resulting win probability is an exact rational, which is what the
closed forms in :mod:`stopping_lab.secretary` are checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterator, List, Optional, Tuple, Union

from .arrivals import sequence_from_order
from .errors import BudgetExceeded, InvalidArgument
from .secretary import (
    RankedInstance,
    run_k_returning_no_wait,
    run_threshold_policy,
)

PolicyFn = Callable[..., object]
POLICIES = ("no-wait", "threshold")


@dataclass(frozen=True)
class EnumerationBudget:
    max_orders: int = 10**7


def order_count(n: int, k: int) -> int:
    """Number of distinguishable orders, (kn)! / (k!)^n."""
    return math.factorial(k * n) // math.factorial(k) ** n


def multiset_orders(n: int, k: int) -> Iterator[Tuple[int, ...]]:
    """Lexicographic walk over all orders of k copies of each item."""
    a = [i for i in range(n) for _ in range(k)]
    size = len(a)
    while True:
        yield tuple(a)
        j = size - 2
        while j >= 0 and a[j] >= a[j + 1]:
            j -= 1
        if j < 0:
            return
        m = size - 1
        while a[m] <= a[j]:
            m -= 1
        a[j], a[m] = a[m], a[j]
        a[j + 1:] = reversed(a[j + 1:])


def _resolve(policy: Union[str, PolicyFn], param: Optional[int]) -> PolicyFn:
    if callable(policy):
        return policy
    if policy == "no-wait":
        return run_k_returning_no_wait
    if policy == "threshold":
        if param is None:
            raise InvalidArgument("threshold policy needs an integer parameter")
        return lambda seq, inst: run_threshold_policy(seq, inst, param)
    raise InvalidArgument(f"unknown policy {policy!r}; expected one of {POLICIES}")


def enumerate_win_prob(
    n: int,
    k: int,
    policy: Union[str, PolicyFn] = "no-wait",
    budget: EnumerationBudget = EnumerationBudget(),
    param: Optional[int] = None,
    ranks: Optional[Tuple[int, ...]] = None,
) -> Fraction:
    """Exact probability that ``policy`` hires the best item.

    ``ranks`` defaults to the identity; passing a permutation is only useful
    for checking that the answer does not depend on labelling.
    """
    if n < 1 or k < 1:
        raise InvalidArgument(f"n and k must be positive, got n={n}, k={k}")
    total = order_count(n, k)
    if total > budget.max_orders:
        raise BudgetExceeded(total, budget.max_orders)
    run = _resolve(policy, param)
    inst = RankedInstance.identity(n) if ranks is None else RankedInstance.from_ranks(ranks)
    wins = 0
    for order in multiset_orders(n, k):
        if run(sequence_from_order(order, n, k), inst).won:
            wins += 1
    return Fraction(wins, total)


def enumerate_policy_table(
    n: int,
    k: int,
    policy: Union[str, Callable[[int], PolicyFn]] = "threshold",
    budget: EnumerationBudget = EnumerationBudget(),
    params: Optional[range] = None,
) -> List[Tuple[int, Fraction]]:
    """``enumerate_win_prob`` for each parameter of an integer policy family.

    ``policy`` is either a registered name or a factory mapping the
    parameter to a policy callable. Parameters default to ``0..n``.
    """
    total = order_count(n, k)
    if total > budget.max_orders:
        raise BudgetExceeded(total, budget.max_orders)
    params = range(n + 1) if params is None else params
    rows = []
    for p in params:
        if callable(policy):
            value = enumerate_win_prob(n, k, policy(p), budget)
        else:
            value = enumerate_win_prob(n, k, policy, budget, param=p)
        rows.append((p, value))
    return rows


def format_fraction(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def golden_name(n: int, k: int, policy: str) -> str:
    return f"oracle_n{n}_k{k}_{policy}.txt"


def write_golden(directory, n: int, k: int, policy: str, budget: EnumerationBudget = EnumerationBudget()) -> Path:
    """Write the oracle value (or ``param p/q`` table for threshold) to a golden file."""
    path = Path(directory) / golden_name(n, k, policy)
    if policy == "threshold":
        rows = enumerate_policy_table(n, k, "threshold", budget)
        text = "".join(f"{p} {format_fraction(v)}\n" for p, v in rows)
    else:
        text = format_fraction(enumerate_win_prob(n, k, policy, budget)) + "\n"
    path.write_text(text)
    return path
