"""Mamdani inference over three feedback scores.

The pipeline is fuzzify -> fire rules (AND = min) -> clip consequents
(implication = min) -> aggregate (max) -> centroid defuzzification.
Everything here is an immutable value type, so one engine can be shared
between threads.
"""

from __future__ import annotations

import enum
import functools
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

__all__ = [
    "DomainError",
    "ConfigurationError",
    "NoRuleFiredError",
    "Label",
    "MembershipFunction",
    "FuzzyPartition",
    "FuzzyRule",
    "RuleBase",
    "BASE_RULES",
    "OutputCurve",
    "TrustValue",
    "FuzzyEngine",
    "mf_eval",
    "fuzzify",
    "fire_rules",
    "aggregate",
    "defuzzify_centroid",
    "engine_from_dict",
    "load_engine",
]


class DomainError(ValueError):
    """A crisp value lies outside the unit interval."""


class ConfigurationError(ValueError):
    """Partition or rule base is malformed."""


class NoRuleFiredError(ArithmeticError):
    """The aggregated output curve has zero area."""


class Label(enum.IntEnum):
    LOW = 0
    MEDIUM = 1
    HIGH = 2

    @property
    def code(self) -> str:
        return "LMH"[self]

    @classmethod
    def parse(cls, text: str | "Label") -> "Label":
        if isinstance(text, Label):
            return text
        key = str(text).strip().upper()
        for label in cls:
            if key in (label.code, label.name):
                return label
        raise ConfigurationError(f"unknown linguistic label {text!r}")


def _check_unit(x: float, what: str = "value") -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"{what} {x!r} outside [0, 1]")
    return x


@dataclass(frozen=True)
class MembershipFunction:
    """Trapezoid ``(a, b, c, d)`` on [0, 1]; a triangle when ``b == c``.

    A vertical edge (``a == b`` or ``c == d``) belongs to the plateau, so the
    shoulder sets ``(0, 0, 0, d)`` and ``(a, 1, 1, 1)`` reach 1 at the domain
    ends.
    """

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self) -> None:
        pts = (self.a, self.b, self.c, self.d)
        if not all(np.isfinite(pts)) or not 0.0 <= self.a <= self.b <= self.c <= self.d <= 1.0:
            raise ConfigurationError(f"breakpoints must satisfy 0 <= a <= b <= c <= d <= 1, got {pts}")

    @property
    def breakpoints(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    @property
    def peak(self) -> float:
        """Midpoint of the plateau."""
        return 0.5 * (self.b + self.c)

    def __call__(self, x: float | np.ndarray) -> float | np.ndarray:
        """Vectorised membership; no domain check (see :func:`mf_eval`)."""
        x = np.asarray(x, dtype=float)
        a, b, c, d = self.breakpoints
        out = np.zeros_like(x)
        if b > a:
            rising = (x > a) & (x < b)
            out = np.where(rising, (x - a) / (b - a), out)
        if d > c:
            falling = (x > c) & (x < d)
            out = np.where(falling, (d - x) / (d - c), out)
        out = np.where((x >= b) & (x <= c), 1.0, out)
        return float(out) if out.ndim == 0 else out

    def degree(self, x: float) -> float:
        """Scalar fast path of ``__call__``."""
        a, b, c, d = self.a, self.b, self.c, self.d
        if b <= x <= c:
            return 1.0
        if a < x < b:
            return (x - a) / (b - a)
        if c < x < d:
            return (d - x) / (d - c)
        return 0.0


def mf_eval(mf: MembershipFunction, x: float) -> float:
    """Membership degree of the crisp value ``x`` in ``mf``."""
    return float(mf(_check_unit(x)))


@dataclass(frozen=True)
class FuzzyPartition:
    low: MembershipFunction
    medium: MembershipFunction
    high: MembershipFunction

    def __post_init__(self) -> None:
        if not self.low.peak < self.medium.peak < self.high.peak:
            raise ConfigurationError("peaks must be ordered low < medium < high")
        grid = np.linspace(0.0, 1.0, 2001)
        grid = np.union1d(grid, [p for mf in self for p in mf.breakpoints])
        if np.min(self.low(grid) + self.medium(grid) + self.high(grid)) <= 0.0:
            raise ConfigurationError("partition leaves part of [0, 1] uncovered")

    def __iter__(self):
        return iter((self.low, self.medium, self.high))

    def __getitem__(self, label: Label | int) -> MembershipFunction:
        return (self.low, self.medium, self.high)[int(label)]

    @classmethod
    def default(cls) -> "FuzzyPartition":
        """Trapezoidal partition calibrated against the published FIS outputs."""
        return cls(
            MembershipFunction(0.0, 0.0, 0.35, 0.45),
            MembershipFunction(0.25, 0.35, 0.65, 0.75),
            MembershipFunction(0.55, 0.65, 1.0, 1.0),
        )

    @classmethod
    def triangular(cls) -> "FuzzyPartition":
        """Symmetric triangles with crossovers at 0.25 and 0.75."""
        return cls(
            MembershipFunction(0.0, 0.0, 0.0, 0.5),
            MembershipFunction(0.0, 0.5, 0.5, 1.0),
            MembershipFunction(0.5, 1.0, 1.0, 1.0),
        )

    def label_of(self, x: float) -> Label:
        """Argmax label at ``x``; ties go to MEDIUM, then to the lower label."""
        mu = fuzzify(self, x)
        best = max(mu)
        if mu[Label.MEDIUM] == best:
            return Label.MEDIUM
        return Label.LOW if mu[Label.LOW] == best else Label.HIGH

    def to_dict(self) -> dict:
        return {"low": list(self.low.breakpoints),
                "medium": list(self.medium.breakpoints),
                "high": list(self.high.breakpoints)}


def fuzzify(partition: FuzzyPartition, x: float) -> tuple[float, float, float]:
    """Return ``(mu_low, mu_medium, mu_high)`` for the crisp score ``x``."""
    x = _check_unit(x)
    return (partition.low.degree(x), partition.medium.degree(x), partition.high.degree(x))


class FuzzyRule(NamedTuple):
    antecedent: tuple[Label, Label, Label]
    consequent: Label

    @classmethod
    def parse(cls, row: Sequence[str]) -> "FuzzyRule":
        if len(row) != 4:
            raise ConfigurationError(f"rule needs three antecedents and one consequent, got {row!r}")
        labels = [Label.parse(t) for t in row]
        return cls(tuple(labels[:3]), labels[3])  # type: ignore[arg-type]

    def __str__(self) -> str:
        lhs = ",".join(lab.code for lab in self.antecedent)
        return f"({lhs} -> {self.consequent.code})"


BASE_RULES: tuple[FuzzyRule, ...] = tuple(
    FuzzyRule.parse(row.split())
    for row in (
        "L L L L",
        "H H H H",
        "L M M M",
        "H H M H",
        "M M M M",
        "L M H M",
        "L M L L",
        "H M H H",
        "L L H L",
        "M M H H",
    )
)

ALL_ANTECEDENTS: tuple[tuple[Label, Label, Label], ...] = tuple(itertools.product(Label, repeat=3))


def median_label(antecedent: Iterable[Label]) -> Label:
    return sorted(antecedent)[1]


@dataclass(frozen=True)
class RuleBase:
    """Complete three-input rule table, one rule per antecedent triple."""

    rules: tuple[FuzzyRule, ...]
    _lookup: Mapping[tuple[Label, Label, Label], Label] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        lookup: dict[tuple[Label, Label, Label], Label] = {}
        for rule in self.rules:
            if rule.antecedent in lookup:
                raise ConfigurationError(f"duplicate antecedent in {rule}")
            lookup[rule.antecedent] = rule.consequent
        object.__setattr__(self, "_lookup", lookup)

    @classmethod
    def complete(cls, explicit: Iterable[FuzzyRule] = BASE_RULES) -> "RuleBase":
        """Fill the unlisted antecedents with the median of their labels."""
        given: dict[tuple[Label, Label, Label], Label] = {}
        for rule in explicit:
            if given.get(rule.antecedent, rule.consequent) != rule.consequent:
                raise ConfigurationError(f"conflicting rules for {rule.antecedent}")
            given[rule.antecedent] = rule.consequent
        rules = tuple(
            FuzzyRule(ante, given.get(ante, median_label(ante))) for ante in ALL_ANTECEDENTS
        )
        return cls(rules)

    @property
    def is_complete(self) -> bool:
        return len(self._lookup) == 27

    def consequent(self, antecedent: Sequence[Label]) -> Label:
        return self._lookup[tuple(antecedent)]  # type: ignore[index]

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def __contains__(self, rule: object) -> bool:
        return isinstance(rule, FuzzyRule) and self._lookup.get(rule.antecedent) == rule.consequent


def fire_rules(rulebase: RuleBase, degrees: Sequence[Sequence[float]]) -> np.ndarray:
    """Firing strength of every rule, in ``rulebase.rules`` order.

    ``degrees`` holds one fuzzified ``(mu_L, mu_M, mu_H)`` triple per input.
    """
    if not rulebase.is_complete:
        raise ConfigurationError(f"rule base has {len(rulebase)} rules, expected 27")
    mu = np.asarray(degrees, dtype=float)
    if mu.shape != (3, 3):
        raise ConfigurationError("expected three fuzzified inputs")
    ante = np.array([r.antecedent for r in rulebase.rules], dtype=int)
    return np.min(mu[np.arange(3), ante], axis=1)


@dataclass(frozen=True)
class OutputCurve:
    """Aggregated output membership sampled at ``resolution + 1`` points of [0, 1]."""

    samples: np.ndarray

    def __post_init__(self) -> None:
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1 or s.size < 2:
            raise ConfigurationError("curve needs at least two samples")
        if s.min() < 0.0 or s.max() > 1.0:
            raise ConfigurationError("curve samples must lie in [0, 1]")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def resolution(self) -> int:
        return self.samples.size - 1

    @property
    def grid(self) -> np.ndarray:
        return _grid(self.samples.size)


@functools.lru_cache(maxsize=16)
def _grid(n: int) -> np.ndarray:
    z = np.linspace(0.0, 1.0, n)
    z.setflags(write=False)
    return z


def aggregate(
    rulebase: RuleBase,
    strengths: Sequence[float],
    partition: FuzzyPartition,
    resolution: int = 1000,
) -> OutputCurve:
    """Pointwise max of every consequent set clipped at its rule strength."""
    if resolution < 1:
        raise ConfigurationError("resolution must be positive")
    z = np.linspace(0.0, 1.0, resolution + 1)
    consequent_samples = [mf(z) for mf in partition]
    return _clip_and_merge(_strength_per_label(rulebase, strengths), consequent_samples)


def _strength_per_label(rulebase: RuleBase, strengths: Iterable[float]) -> list[float]:
    # max_r min(mu_c(r), s_r) == max_c min(mu_c, max_{r: c(r)=c} s_r)
    per_label = [0.0, 0.0, 0.0]
    for rule, s in zip(rulebase.rules, strengths):
        if s > per_label[rule.consequent]:
            per_label[rule.consequent] = float(s)
    return per_label


def _clip_and_merge(per_label: Sequence[float], consequent_samples: Sequence[np.ndarray]) -> OutputCurve:
    curve = np.zeros_like(consequent_samples[0])
    for s, samples in zip(per_label, consequent_samples):
        if s > 0.0:
            np.maximum(curve, np.minimum(samples, s), out=curve)
    return OutputCurve(curve)


def defuzzify_centroid(curve: OutputCurve) -> float:
    """Centre of area of ``curve`` by the trapezoidal rule."""
    mu = curve.samples
    z = curve.grid
    # trapezoid rule on a uniform grid; the common step cancels in the ratio
    area = mu.sum() - 0.5 * (mu[0] + mu[-1])
    if area <= 0.0:
        raise NoRuleFiredError("output curve has zero area")
    moment = np.dot(z, mu) - 0.5 * (z[0] * mu[0] + z[-1] * mu[-1])
    return float(moment / area)


@dataclass(frozen=True)
class TrustValue:
    crisp: float
    label: Label

    def __str__(self) -> str:
        return f"crisp={self.crisp:.4f} label={self.label.code}"


@dataclass(frozen=True)
class FuzzyEngine:
    partition: FuzzyPartition = field(default_factory=FuzzyPartition.default)
    rulebase: RuleBase = field(default_factory=RuleBase.complete)
    resolution: int = 1000

    def __post_init__(self) -> None:
        if not self.rulebase.is_complete:
            raise ConfigurationError("engine requires a complete rule base")
        if self.resolution < 100:
            raise ConfigurationError("resolution must be at least 100")
        z = _grid(self.resolution + 1)
        samples = tuple(mf(z) for mf in self.partition)
        object.__setattr__(self, "_samples", samples)

    def curve(self, inputs: Sequence[float]) -> OutputCurve:
        if len(inputs) != 3:
            raise ConfigurationError("the engine takes exactly three inputs")
        d1, d2, d3 = (fuzzify(self.partition, x) for x in inputs)
        # same as fire_rules, without the array round trip
        strengths = (min(d1[r.antecedent[0]], d2[r.antecedent[1]], d3[r.antecedent[2]])
                     for r in self.rulebase.rules)
        return _clip_and_merge(_strength_per_label(self.rulebase, strengths), self._samples)

    def crisp(self, inputs: Sequence[float]) -> float:
        return defuzzify_centroid(self.curve(inputs))

    def evaluate(self, inputs: Sequence[float]) -> TrustValue:
        """Run the whole pipeline on three scores in [0, 1]."""
        value = self.crisp(inputs)
        return TrustValue(value, self.partition.label_of(min(max(value, 0.0), 1.0)))

    def to_dict(self) -> dict:
        return {
            "partition": self.partition.to_dict(),
            "rules": [[lab.code for lab in r.antecedent] + [r.consequent.code] for r in self.rulebase],
            "resolution": self.resolution,
        }


def engine_from_dict(doc: Mapping) -> FuzzyEngine:
    """Build an engine from a JSON-style mapping.

    ``partition`` maps ``low``/``medium``/``high`` to four breakpoints and
    ``rules`` lists ``[P1, P2, P3, OUT]`` label strings. Missing partition
    keys fall back to the default set; missing rules are completed with
    the median label.
    """
    base = FuzzyPartition.default()
    part = doc.get("partition", doc)
    try:
        partition = FuzzyPartition(
            *(
                MembershipFunction(*map(float, part[key])) if key in part else base[i]
                for i, key in enumerate(("low", "medium", "high"))
            )
        )
    except TypeError as exc:
        raise ConfigurationError(f"bad breakpoints: {exc}") from None
    rules = [FuzzyRule.parse(row) for row in doc.get("rules", BASE_RULE_ROWS)]
    return FuzzyEngine(partition, RuleBase.complete(rules), int(doc.get("resolution", 1000)))


BASE_RULE_ROWS = [[lab.code for lab in r.antecedent] + [r.consequent.code] for r in BASE_RULES]


def load_engine(path: str | Path) -> FuzzyEngine:
    with open(path, encoding="utf-8") as fh:
        return engine_from_dict(json.load(fh))
