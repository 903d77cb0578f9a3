"""Trust agent running at a VO coordinator.

Feedback is kept in an append-only ledger; the agent reduces a node's
scores to (min, median, max) and passes them through the fuzzy engine.
The weighted-sum global reputation and multiplicative transitive trust
are here too, since they are compared against the fuzzy result.
"""

from __future__ import annotations

import csv
import enum
import math
import statistics
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Iterable, Iterator, Mapping, Sequence

from .fuzzy import DomainError, FuzzyEngine, Label

__all__ = [
    "SelfRatingError",
    "UnknownNodeError",
    "FeedbackScore",
    "FeedbackLedger",
    "TrustRecord",
    "ThresholdPolicy",
    "Verdict",
    "NEUTRAL_TRUST",
    "reduce_scores",
    "compute_trust",
    "classify",
    "weighted_global_reputation",
    "transitive_trust",
    "path_trust",
    "best_path_trust",
    "TrustAgent",
]

NodeId = Hashable
NEUTRAL_TRUST = 0.5


class SelfRatingError(ValueError):
    pass


class UnknownNodeError(LookupError):
    """No feedback exists for the node in the requested window."""


@dataclass(frozen=True)
class FeedbackScore:
    rater: NodeId
    ratee: NodeId
    value: float
    round: int = 0

    def __post_init__(self) -> None:
        if self.rater == self.ratee:
            raise SelfRatingError(f"node {self.rater!r} cannot rate itself")
        if not 0.0 <= float(self.value) <= 1.0:
            raise DomainError(f"score {self.value!r} outside [0, 1]")
        if self.round < 0:
            raise ValueError("round must be non-negative")


class FeedbackLedger:
    """Append-only feedback store indexed by ratee.

    One writer, many readers: appends take a lock, reads work on tuples
    snapshotted under the same lock.
    """

    def __init__(self, entries: Iterable[FeedbackScore] = ()) -> None:
        self._entries: list[FeedbackScore] = []
        self._by_ratee: dict[NodeId, list[FeedbackScore]] = {}
        self._lock = threading.Lock()
        for entry in entries:
            self.submit(entry)

    def submit(self, score: FeedbackScore) -> "FeedbackLedger":
        with self._lock:
            self._entries.append(score)
            self._by_ratee.setdefault(score.ratee, []).append(score)
        return self

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[FeedbackScore]:
        with self._lock:
            return iter(tuple(self._entries))

    def ratees(self) -> list[NodeId]:
        with self._lock:
            return list(self._by_ratee)

    def scores_for(self, node: NodeId, window: int | None = None,
                   current_round: int | None = None) -> tuple[FeedbackScore, ...]:
        """Entries about ``node``, restricted to the last ``window`` rounds."""
        with self._lock:
            entries = tuple(self._by_ratee.get(node, ()))
        if window is None or not entries:
            return entries
        latest = current_round if current_round is not None else max(e.round for e in entries)
        return tuple(e for e in entries if e.round > latest - window)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["rater", "ratee", "value", "round"])
            for e in self:
                writer.writerow([e.rater, e.ratee, repr(float(e.value)), e.round])

    @classmethod
    def from_csv(cls, path: str | Path) -> "FeedbackLedger":
        def node(text: str) -> NodeId:
            return int(text) if text.lstrip("-").isdigit() else text

        with open(path, newline="", encoding="utf-8") as fh:
            rows = csv.DictReader(fh)
            return cls(
                FeedbackScore(node(r["rater"]), node(r["ratee"]), float(r["value"]), int(r["round"]))
                for r in rows
            )


@dataclass(frozen=True)
class TrustRecord:
    node: NodeId
    crisp: float
    label: Label
    round: int = 0


@dataclass(frozen=True)
class ThresholdPolicy:
    theta: float = 0.35

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta <= 1.0:
            raise DomainError(f"theta {self.theta!r} outside [0, 1]")


class Verdict(str, enum.Enum):
    TRUSTED = "trusted"
    MALICIOUS = "malicious"


def reduce_scores(scores: Sequence[float]) -> tuple[float, float, float]:
    """Collapse any number of scores to the engine's three inputs.

    >>> reduce_scores([0.2, 0.8, 0.5])
    (0.2, 0.5, 0.8)
    """
    if len(scores) == 0:
        raise ValueError("cannot reduce an empty score list")
    ordered = sorted(float(s) for s in scores)
    return ordered[0], statistics.median(ordered), ordered[-1]


def compute_trust(ledger: FeedbackLedger, node: NodeId, engine: FuzzyEngine,
                  window: int | None = None, current_round: int | None = None) -> TrustRecord:
    entries = ledger.scores_for(node, window, current_round)
    if not entries:
        raise UnknownNodeError(f"no feedback for node {node!r}")
    value = engine.evaluate(reduce_scores([e.value for e in entries]))
    rnd = current_round if current_round is not None else max(e.round for e in entries)
    return TrustRecord(node, value.crisp, value.label, rnd)


def classify(record: TrustRecord | float, policy: ThresholdPolicy = ThresholdPolicy()) -> Verdict:
    crisp = record.crisp if isinstance(record, TrustRecord) else float(record)
    return Verdict.MALICIOUS if crisp < policy.theta else Verdict.TRUSTED


def weighted_global_reputation(local_scores: Sequence[tuple[float, float]],
                               normalized: bool = False) -> float:
    """Sum of ``score * rater_reputation`` over all raters.

    Left unnormalised by default, so the result can exceed 1; with
    ``normalized=True`` it is divided by the total rater reputation.
    """
    if len(local_scores) == 0:
        raise ValueError("no local scores")
    total = math.fsum(s * r for s, r in local_scores)
    if not normalized:
        return total
    weight = math.fsum(r for _, r in local_scores)
    if weight == 0.0:
        raise ZeroDivisionError("all rater reputations are zero")
    return total / weight


def transitive_trust(x: float, y: float) -> float:
    """Trust A derives in C from A->B trust ``x`` and B->C trust ``y``."""
    for v in (x, y):
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"trust {v!r} outside [0, 1]")
    return x * y


def path_trust(edges: Sequence[float]) -> float:
    out = 1.0
    for t in edges:
        out = transitive_trust(out, t)
    return out


def best_path_trust(graph: Mapping[NodeId, Mapping[NodeId, float]], source: NodeId,
                    target: NodeId, max_hops: int = 3) -> float:
    """Largest product of edge trusts over simple paths of at most ``max_hops`` edges.

    Returns 0 when ``target`` is unreachable within the hop limit.
    """
    best = 0.0
    stack = [(source, 1.0, frozenset([source]), 0)]
    while stack:
        node, acc, seen, hops = stack.pop()
        if hops == max_hops:
            continue
        for nxt, t in graph.get(node, {}).items():
            if nxt in seen:
                continue
            val = transitive_trust(acc, t)
            if nxt == target:
                best = max(best, val)
            elif val > best:
                stack.append((nxt, val, seen | {nxt}, hops + 1))
    return best


class TrustAgent:
    """Ledger plus current trust records for the members of one VO."""

    def __init__(self, coordinator: NodeId, engine: FuzzyEngine | None = None,
                 policy: ThresholdPolicy = ThresholdPolicy(), window: int | None = None) -> None:
        self.coordinator = coordinator
        self.engine = engine or FuzzyEngine()
        self.policy = policy
        self.window = window
        self.ledger = FeedbackLedger()
        self.records: dict[NodeId, TrustRecord] = {}

    def submit(self, score: FeedbackScore) -> TrustRecord:
        """Store ``score`` and refresh the ratee's record."""
        self.ledger.submit(score)
        record = compute_trust(self.ledger, score.ratee, self.engine, self.window, score.round)
        self.records[score.ratee] = record
        return record

    def trust_of(self, node: NodeId) -> float:
        rec = self.records.get(node)
        return NEUTRAL_TRUST if rec is None else rec.crisp

    def verdict(self, node: NodeId) -> Verdict:
        return classify(self.trust_of(node), self.policy)
