"""Static Chord ring for counting reputation-query messages."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Iterable, Literal

import numpy as np

__all__ = ["RingConfig", "ChordRing", "build_ring", "lookup", "trust_query_cost", "mean_hops", "key_classes"]


def _in_open(x: int, a: int, b: int, size: int) -> bool:
    """x in the ring interval (a, b); (a, a) is the whole ring minus a."""
    return 0 < (x - a) % size < ((b - a) % size or size)


@dataclass(frozen=True)
class RingConfig:
    m: int
    node_ids: tuple[int, ...]

    def __post_init__(self) -> None:
        ids = tuple(sorted(int(i) for i in self.node_ids))
        if not ids:
            raise ValueError("ring needs at least one node")
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate node ids")
        if ids[0] < 0 or ids[-1] >= 2 ** self.m:
            raise ValueError(f"node ids must lie in [0, 2**{self.m})")
        object.__setattr__(self, "node_ids", ids)


@dataclass(frozen=True)
class ChordRing:
    config: RingConfig
    fingers: dict[int, tuple[int, ...]] = field(repr=False)

    @property
    def m(self) -> int:
        return self.config.m

    @property
    def size(self) -> int:
        return 2 ** self.config.m

    @property
    def nodes(self) -> tuple[int, ...]:
        return self.config.node_ids

    def successor(self, key: int) -> int:
        ids = self.config.node_ids
        i = bisect.bisect_left(ids, key % self.size)
        return ids[i % len(ids)]

    def successor_scan(self, key: int) -> int:
        """Linear scan for the node at the smallest clockwise distance; reference oracle."""
        k = key % self.size
        return min(self.config.node_ids, key=lambda n: (n - k) % self.size)


def build_ring(config: RingConfig | Iterable[int], m: int = 16) -> ChordRing:
    if not isinstance(config, RingConfig):
        config = RingConfig(m, tuple(config))
    size = 2 ** config.m
    ring = ChordRing(config, {})
    for n in config.node_ids:
        ring.fingers[n] = tuple(ring.successor((n + 2 ** i) % size) for i in range(config.m))
    return ring


def lookup(ring: ChordRing, start: int, key: int) -> tuple[int, int]:
    """Iterative greedy routing; returns ``(owner, hops)``.

    A hop is one message forwarding the query to another node. The
    start node answers at zero cost when it owns the key.
    """
    if not 0 <= key < ring.size:
        raise ValueError(f"key {key} outside [0, {ring.size})")
    if start not in ring.fingers:
        raise ValueError(f"{start} is not a ring member")
    size = ring.size
    node, hops = start, 0
    if ring.successor(key) == node:
        return node, 0
    for _ in range(ring.m + 1):
        succ = ring.fingers[node][0]
        if _in_open(key, node, succ, size) or key == succ:
            return succ, hops + 1
        nxt = node
        for f in reversed(ring.fingers[node]):
            if _in_open(f, node, key, size):
                nxt = f
                break
        if nxt == node:
            return succ, hops + 1
        node, hops = nxt, hops + 1
    raise RuntimeError("routing did not converge")  # pragma: no cover


def trust_query_cost(model: Literal["coordinator", "dht"], ring: ChordRing | None = None,
                     start: int | None = None, target: int | None = None) -> int:
    """Messages needed for one reputation query.

    ``coordinator``: request plus reply to the VO coordinator.
    ``dht``: Chord lookup hops to the key ``target`` plus the reply.
    """
    if model == "coordinator":
        return 2
    if model == "dht":
        if ring is None or start is None or target is None:
            raise ValueError("dht cost needs a ring, start node and target key")
        return lookup(ring, start, target)[1] + 1
    raise ValueError(f"unknown query model {model!r}")


def key_classes(ring: ChordRing) -> list[tuple[int, int]]:
    """``(representative key, multiplicity)`` for each arc (n_{i-1}, n_i].

    Routing only ever compares a key against node ids, so every key on
    one arc follows the same path. Summing over arcs weighted by their
    length is therefore identical to enumerating all 2**m keys.
    """
    ids = ring.nodes
    return [(n, (n - ids[i - 1]) % ring.size or ring.size) for i, n in enumerate(ids)]


def mean_hops(ring: ChordRing, pairs: int | None = None, seed: int = 0) -> float:
    """Average lookup hops, exhaustive over (start, key) or over ``pairs`` random samples."""
    if pairs is None:
        total = sum(w * lookup(ring, s, k)[1] for s in ring.nodes for k, w in key_classes(ring))
        return total / (len(ring.nodes) * ring.size)
    rng = np.random.default_rng(seed)
    starts = rng.choice(np.asarray(ring.nodes), size=pairs)
    keys = rng.integers(0, ring.size, size=pairs)
    return float(np.mean([lookup(ring, int(s), int(k))[1] for s, k in zip(starts, keys)]))
