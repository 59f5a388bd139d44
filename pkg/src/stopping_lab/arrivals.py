"""Random arrival streams: n items, each arriving k times.

Two models are supported. In the permutation model the kn arrivals are a
uniformly random interleaving of k copies of every item. In the timed model
each arrival carries an independent uniform timestamp in [0, 1) and rounds
follow time order. Both models induce the same distribution over orders.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidArgument
from .rng import generator

CSV_HEADER = ("round", "item", "occurrence", "time")


@dataclass(frozen=True)
class ArrivalEvent:
    item: int
    occurrence: int
    round: int
    time: Optional[float] = None


@dataclass(frozen=True)
class ArrivalSequence:
    n: int
    k: int
    events: tuple

    @property
    def timed(self) -> bool:
        return bool(self.events) and self.events[0].time is not None

    @property
    def items(self) -> np.ndarray:
        return np.fromiter((e.item for e in self.events), dtype=np.int64, count=len(self.events))

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def validate(self) -> None:
        """Raise :class:`InvalidArgument` if any structural invariant fails."""
        if len(self.events) != self.n * self.k:
            raise InvalidArgument(f"expected {self.n * self.k} events, got {len(self.events)}")
        seen = [0] * self.n
        last_time = -1.0
        for r, e in enumerate(self.events, start=1):
            if not 0 <= e.item < self.n:
                raise InvalidArgument(f"item {e.item} out of range for n={self.n}")
            seen[e.item] += 1
            if e.occurrence != seen[e.item] or e.round != r:
                raise InvalidArgument(f"event {r} has inconsistent occurrence/round")
            if e.time is not None:
                if e.time <= last_time or not 0.0 <= e.time < 1.0:
                    raise InvalidArgument(f"event {r} time {e.time} not strictly increasing in [0,1)")
                last_time = e.time
        if any(c != self.k for c in seen):
            raise InvalidArgument("every item must appear exactly k times")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for e in self.events:
            w.writerow((e.round, e.item, e.occurrence, "" if e.time is None else repr(e.time)))
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, k: Optional[int] = None) -> "ArrivalSequence":
        rows = list(csv.DictReader(io.StringIO(text)))
        items = [int(r["item"]) for r in rows]
        times = [float(r["time"]) for r in rows] if rows and rows[0]["time"] else None
        n = max(items) + 1 if items else 0
        if k is None:
            k = len(items) // n if n else 0
        seq = _build(n, k, items, times)
        seq.validate()
        return seq


def _check_nk(n: int, k: int) -> None:
    if n < 1 or k < 1:
        raise InvalidArgument(f"n and k must be positive, got n={n}, k={k}")


def _build(n: int, k: int, items: Sequence[int], times: Optional[Sequence[float]]) -> ArrivalSequence:
    counts = [0] * n
    events = []
    for r, it in enumerate(items, start=1):
        counts[it] += 1
        t = None if times is None else float(times[r - 1])
        events.append(ArrivalEvent(int(it), counts[it], r, t))
    return ArrivalSequence(n, k, tuple(events))


def sequence_from_order(items: Iterable[int], n: int, k: int) -> ArrivalSequence:
    """Untimed sequence from an explicit order of item labels."""
    _check_nk(n, k)
    seq = _build(n, k, list(items), None)
    seq.validate()
    return seq


def sequence_from_times(times: np.ndarray) -> ArrivalSequence:
    """Timed sequence from an ``(n, k)`` array of arrival timestamps."""
    times = np.asarray(times, dtype=float)
    n, k = times.shape
    _check_nk(n, k)
    flat = times.ravel()
    order = np.argsort(flat, kind="stable")
    items = order // k
    seq = _build(n, k, items.tolist(), flat[order].tolist())
    return seq


def shuffled_orders(n: int, k: int, trials: int, rng: np.random.Generator) -> np.ndarray:
    """``(trials, k*n)`` item labels, each row an independent Fisher-Yates shuffle."""
    _check_nk(n, k)
    out = np.empty((trials, k * n), dtype=np.int64)
    base = np.repeat(np.arange(n), k)
    for t in range(trials):
        row = base.copy()
        rng.shuffle(row)
        out[t] = row
    return out


def gen_permutation_sequence(n: int, k: int, seed: int) -> ArrivalSequence:
    """Uniform interleaving of k copies of each of n items (Fisher-Yates shuffle)."""
    labels = shuffled_orders(n, k, 1, generator(seed))[0]
    return _build(n, k, labels.tolist(), None)


def draw_times(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """``(n, k)`` uniform timestamps with exact collisions re-drawn."""
    times = rng.random((n, k))
    while True:
        flat = times.ravel()
        _, first, counts = np.unique(flat, return_index=True, return_counts=True)
        if counts.max(initial=1) == 1:
            return times
        # keep one copy of each colliding value, re-draw the rest
        dup = np.ones(flat.size, dtype=bool)
        dup[first] = False
        flat[dup] = rng.random(int(dup.sum()))
        times = flat.reshape(n, k)


def gen_timed_sequence(n: int, k: int, seed: int) -> ArrivalSequence:
    """k independent uniform [0,1) timestamps per item, events sorted by time."""
    _check_nk(n, k)
    return sequence_from_times(draw_times(generator(seed), n, k))


def distinct_count_prefix(seq: ArrivalSequence, r: int) -> int:
    """Number of distinct items among the first ``r`` events."""
    if not 1 <= r <= len(seq.events):
        raise InvalidArgument(f"round {r} outside [1, {len(seq.events)}]")
    return sum(1 for e in seq.events[:r] if e.occurrence == 1)
