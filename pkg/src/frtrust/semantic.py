"""Concept-set similarity and virtual-organization clustering."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Sequence

__all__ = [
    "UnknownConceptError",
    "Taxonomy",
    "SimilarityParams",
    "VirtualOrganization",
    "closure",
    "similarity",
    "cluster",
    "elect_coordinator",
    "load_overlay",
]

NodeId = Hashable


class UnknownConceptError(KeyError):
    pass


@dataclass(frozen=True)
class Taxonomy:
    """Concepts with an optional parent each; the parent links form a forest."""

    parent: Mapping[str, str | None]

    def __post_init__(self) -> None:
        parent = dict(self.parent)
        for child, par in parent.items():
            if par is not None and par not in parent:
                raise UnknownConceptError(f"parent {par!r} of {child!r} is not a concept")
        for start in parent:
            seen = {start}
            cur = parent[start]
            while cur is not None:
                if cur in seen:
                    raise ValueError(f"cycle through concept {cur!r}")
                seen.add(cur)
                cur = parent[cur]
        object.__setattr__(self, "parent", parent)

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str | None]]) -> "Taxonomy":
        return cls(dict(edges))

    @property
    def concepts(self) -> frozenset[str]:
        return frozenset(self.parent)

    def ancestors(self, concept: str) -> list[str]:
        if concept not in self.parent:
            raise UnknownConceptError(concept)
        out = []
        cur = self.parent[concept]
        while cur is not None:
            out.append(cur)
            cur = self.parent[cur]
        return out


def closure(concepts: Iterable[str], taxonomy: Taxonomy) -> frozenset[str]:
    """Add every ancestor of every member."""
    out: set[str] = set()
    for c in concepts:
        out.add(c)
        out.update(taxonomy.ancestors(c))
    return frozenset(out)


@dataclass(frozen=True)
class SimilarityParams:
    alpha: float = 0.5
    beta: float = 0.5

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")

    def swapped(self) -> "SimilarityParams":
        return SimilarityParams(self.beta, self.alpha)


def similarity(a: Iterable[str], b: Iterable[str], params: SimilarityParams = SimilarityParams()) -> float:
    """Ratio-model overlap |A&B| / (|A&B| + alpha|A-B| + beta|B-A|).

    Two empty sets count as identical. Pass sets through :func:`closure`
    first if the taxonomy should count.
    """
    a, b = frozenset(a), frozenset(b)
    common = len(a & b)
    # fsum is order independent, so swapping the sets and weights is exact
    denom = math.fsum((common, params.alpha * len(a - b), params.beta * len(b - a)))
    if denom == 0:
        return 1.0 if not a and not b else 0.0
    return common / denom


@dataclass
class VirtualOrganization:
    id: int
    members: list[NodeId]
    threshold: float
    coordinator: NodeId = field(init=False)

    def __post_init__(self) -> None:
        self.coordinator = elect_coordinator(self)

    @property
    def representative(self) -> NodeId:
        return self.members[0]


def elect_coordinator(vo: VirtualOrganization | Iterable[NodeId]) -> NodeId:
    """Smallest node id in the VO."""
    members = vo.members if isinstance(vo, VirtualOrganization) else list(vo)
    if not members:
        raise ValueError("cannot elect a coordinator for an empty VO")
    return min(members)


def cluster(nodes: Sequence[tuple[NodeId, Iterable[str]]], threshold: float = 0.5,
            params: SimilarityParams = SimilarityParams()) -> list[VirtualOrganization]:
    """Greedy single pass in node-id order.

    Each node joins the first VO whose representative (founding member)
    is at least ``threshold`` similar to it, or founds a new VO.
    Similarity is measured as sim(node, representative).
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    profiles = {nid: frozenset(c) for nid, c in nodes}
    if len(profiles) != len(nodes):
        raise ValueError("duplicate node ids")
    vos: list[VirtualOrganization] = []
    for nid in sorted(profiles):
        for vo in vos:
            if similarity(profiles[nid], profiles[vo.representative], params) >= threshold:
                vo.members.append(nid)
                break
        else:
            vos.append(VirtualOrganization(len(vos), [nid], threshold))
    for vo in vos:
        vo.coordinator = elect_coordinator(vo)
    return vos


def load_overlay(path: str | Path, apply_closure: bool = True) -> tuple[Taxonomy, list[tuple[NodeId, frozenset[str]]]]:
    """Read ``{"concepts": [{"id", "parent"}], "nodes": [{"id", "concepts"}]}``."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    tax = Taxonomy({c["id"]: c.get("parent") for c in doc["concepts"]})
    nodes = []
    for n in doc.get("nodes", []):
        concepts = frozenset(n["concepts"])
        unknown = concepts - tax.concepts
        if unknown:
            raise UnknownConceptError(f"node {n['id']!r} uses unknown concepts {sorted(unknown)}")
        nodes.append((n["id"], closure(concepts, tax) if apply_closure else concepts))
    return tax, nodes
