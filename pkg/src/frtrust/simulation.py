"""Transaction-round simulator and the evaluation experiments.

A scenario places N nodes in a semantic grid, clusters them into VOs,
and then runs rounds in which every node buys one service. The provider
is taken from the current power nodes with probability ``greedy_alpha``
and uniformly otherwise. The consumer rates the service (malicious
nodes invert their rating) and the provider's VO coordinator updates
its trust record.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .chord import build_ring, mean_hops, trust_query_cost
from .fuzzy import FuzzyEngine, engine_from_dict
from .semantic import SimilarityParams, Taxonomy, closure, cluster
from .trust import (
    FeedbackScore,
    NEUTRAL_TRUST,
    ThresholdPolicy,
    TrustAgent,
    Verdict,
    classify,
    weighted_global_reputation,
)

__all__ = [
    "BehaviorProfile",
    "ScenarioConfig",
    "MetricsReport",
    "GRID_TAXONOMY",
    "run_scenario",
    "run_replicas",
    "replica_seeds",
    "ground_truth",
    "rms_error",
    "detection_metrics",
    "exp_rms_sweep",
    "exp_detection",
    "exp_table2",
    "exp_table3",
    "exp_chord",
    "exp_surface",
    "REFERENCE_ROWS",
    "write_csv",
    "write_manifest",
]


@dataclass(frozen=True)
class BehaviorProfile:
    quality_mean: float
    quality_spread: float
    liar: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.quality_mean <= 1.0 or self.quality_spread < 0.0:
            raise ValueError("need quality_mean in [0, 1] and quality_spread >= 0")

    def draw_quality(self, rng: np.random.Generator) -> float:
        """Gaussian noise clipped symmetrically about the mean, so the mean stays exact."""
        mu = self.quality_mean
        half = min(mu, 1.0 - mu)
        noise = self.quality_spread * rng.standard_normal()
        return float(mu + min(max(noise, -half), half))

    def report(self, quality: float) -> float:
        return 1.0 - quality if self.liar else quality


HONEST = BehaviorProfile(0.85, 0.1, liar=False)
MALICIOUS = BehaviorProfile(0.15, 0.1, liar=True)


@dataclass(frozen=True)
class ScenarioConfig:
    n_nodes: int = 100
    malicious_fraction: float = 0.3
    greedy_alpha: float = 0.0
    rounds: int = 20
    power_node_count: int | None = None
    seed: int = 0
    theta: float = 0.35
    honest: BehaviorProfile = HONEST
    malicious: BehaviorProfile = MALICIOUS
    window: int | None = None
    query_model: str = "coordinator"
    chord_m: int = 16
    vo_threshold: float = 0.5
    engine: Mapping[str, Any] | None = None
    # (rater, ratee, value[, round]) rows replayed instead of random transactions
    transactions: tuple[tuple, ...] | None = None

    def __post_init__(self) -> None:
        if self.n_nodes < 2:
            raise ValueError("need at least two nodes")
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        for name in ("malicious_fraction", "greedy_alpha", "theta", "vo_threshold"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not 1 <= self.k <= self.n_nodes:
            raise ValueError("power_node_count must lie in [1, n_nodes]")
        if self.query_model not in ("coordinator", "dht"):
            raise ValueError(f"unknown query model {self.query_model!r}")
        if self.window is not None and self.window < 1:
            raise ValueError("window must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def k(self) -> int:
        if self.power_node_count is not None:
            return self.power_node_count
        return max(1, self.n_nodes // 20)

    def build_engine(self) -> FuzzyEngine:
        return engine_from_dict(self.engine) if self.engine else FuzzyEngine()

    def to_dict(self) -> dict:
        out = asdict(self)
        if self.transactions is not None:
            out["transactions"] = [list(t) for t in self.transactions]
        return out

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(doc)
        for key in ("honest", "malicious"):
            if key in kw and isinstance(kw[key], Mapping):
                kw[key] = BehaviorProfile(**kw[key])
        if kw.get("transactions") is not None:
            kw["transactions"] = tuple(tuple(t) for t in kw["transactions"])
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


GRID_TAXONOMY = Taxonomy({
    "Node": None,
    "Resource": "Node",
    "File": "Resource",
    "Image": "File",
    "Video": "File",
    "Document": "File",
    "Compute": "Resource",
    "CPU": "Compute",
    "GPU": "Compute",
    "Storage": "Resource",
    "Disk": "Storage",
    "Tape": "Storage",
})
_BRANCHES = {"File": ("Image", "Video", "Document"),
             "Compute": ("CPU", "GPU"),
             "Storage": ("Disk", "Tape")}


@dataclass
class MetricsReport:
    rms: float
    rms_excluded: int
    precision: float | None
    recall: float | None
    baseline_precision: float | None
    baseline_recall: float | None
    weighted_baseline_precision: float | None
    weighted_baseline_recall: float | None
    messages_total: int
    queries: int
    trust: np.ndarray = field(repr=False)          # rounds x N snapshots
    malicious: np.ndarray = field(repr=False)      # bool per node
    truth: np.ndarray = field(repr=False)
    providers: np.ndarray = field(repr=False)      # rounds x N chosen provider
    power_sets: list = field(repr=False)           # per round, the top-k ids
    baseline: np.ndarray = field(repr=False)
    vo_of: np.ndarray = field(repr=False)

    SUMMARY_HEADER = ("metric", "value")
    TRUST_HEADER = ("round", "node", "trust", "malicious", "vo")

    def summary(self) -> dict[str, Any]:
        return {
            "rms": self.rms,
            "rms_excluded": self.rms_excluded,
            "precision": self.precision,
            "recall": self.recall,
            "baseline_precision": self.baseline_precision,
            "baseline_recall": self.baseline_recall,
            "weighted_baseline_precision": self.weighted_baseline_precision,
            "weighted_baseline_recall": self.weighted_baseline_recall,
            "messages_total": self.messages_total,
            "queries": self.queries,
            "n_nodes": int(self.malicious.size),
            "rounds": int(self.trust.shape[0]),
        }

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.SUMMARY_HEADER)
        for k, v in self.summary().items():
            w.writerow([k, "" if v is None else repr(v)])
        return buf.getvalue()

    def trust_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.TRUST_HEADER)
        for r, row in enumerate(self.trust):
            for n, t in enumerate(row):
                w.writerow([r, n, repr(float(t)), int(self.malicious[n]), int(self.vo_of[n])])
        return buf.getvalue()


def ground_truth(config: ScenarioConfig, malicious: np.ndarray) -> np.ndarray:
    """Reference reputation per node: the mean quality of its behaviour profile."""
    return np.where(malicious, config.malicious.quality_mean, config.honest.quality_mean).astype(float)


def rms_error(v: Sequence[float], u: Sequence[float], eps: float = 1e-6) -> tuple[float, int]:
    """Root-mean-square relative deviation of computed ``v`` from reference ``u``.

    Entries with ``v < eps`` are skipped; returns ``(rms, skipped)``.
    """
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    if v.shape != u.shape:
        raise ValueError("v and u must have equal length")
    keep = v >= eps
    if not keep.any():
        raise ValueError("every entry was excluded")
    rel = (v[keep] - u[keep]) / v[keep]
    return float(math.sqrt(np.mean(rel ** 2))), int((~keep).sum())


def detection_metrics(flagged: Sequence[bool], actual: Sequence[bool]) -> tuple[float | None, float | None]:
    """Precision and recall of ``flagged`` against ``actual``; ``None`` on an empty denominator."""
    flagged = np.asarray(flagged, dtype=bool)
    actual = np.asarray(actual, dtype=bool)
    tp = int(np.sum(flagged & actual))
    fp = int(np.sum(flagged & ~actual))
    fn = int(np.sum(~flagged & actual))
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    return precision, recall


def _assign_concepts(rng: np.random.Generator, n: int) -> list[frozenset[str]]:
    branches = sorted(_BRANCHES)
    out = []
    for _ in range(n):
        branch = branches[rng.integers(len(branches))]
        leaves = _BRANCHES[branch]
        picked = {leaves[i] for i in rng.choice(len(leaves), size=rng.integers(1, len(leaves) + 1), replace=False)}
        out.append(closure(picked, GRID_TAXONOMY))
    return out


def run_scenario(config: ScenarioConfig) -> MetricsReport:
    """Simulate ``config.rounds`` rounds; deterministic for a fixed seed."""
    rng = np.random.default_rng(config.seed)
    n = config.n_nodes
    engine = config.build_engine()
    policy = ThresholdPolicy(config.theta)

    n_bad = int(round(config.malicious_fraction * n))
    malicious = np.zeros(n, dtype=bool)
    malicious[rng.choice(n, size=n_bad, replace=False)] = True
    profiles = [config.malicious if m else config.honest for m in malicious]

    vos = cluster(list(enumerate(_assign_concepts(rng, n))), config.vo_threshold, SimilarityParams())
    vo_of = np.empty(n, dtype=int)
    agents = []
    for vo in vos:
        agents.append(TrustAgent(vo.coordinator, engine, policy, config.window))
        vo_of[vo.members] = vo.id

    ring = None
    ring_id = None
    if config.query_model == "dht":
        ring_id = np.sort(rng.choice(2 ** config.chord_m, size=n, replace=False))
        ring = build_ring(ring_id.tolist(), m=config.chord_m)

    trust = np.full(n, NEUTRAL_TRUST)
    snapshots = np.empty((config.rounds, n))
    providers = np.full((config.rounds, n), -1, dtype=int)
    power_sets = []
    messages = queries = 0

    def transact(rnd: int, consumer: int, provider: int, value: float) -> None:
        nonlocal messages, queries
        queries += 1
        if ring is None:
            messages += trust_query_cost("coordinator")
        else:
            messages += trust_query_cost("dht", ring, int(ring_id[consumer]), int(ring_id[provider]))
        agent = agents[vo_of[provider]]
        trust[provider] = agent.submit(FeedbackScore(consumer, provider, value, rnd)).crisp

    script: dict[int, list] = {}
    for row in config.transactions or ():
        rater, ratee, value = int(row[0]), int(row[1]), float(row[2])
        rnd = int(row[3]) if len(row) > 3 else 0
        if not 0 <= rnd < config.rounds:
            raise ValueError(f"scripted round {rnd} outside [0, {config.rounds})")
        script.setdefault(rnd, []).append((rater, ratee, value))

    for rnd in range(config.rounds):
        power = np.argsort(-trust, kind="stable")[: config.k]
        power_sets.append(power.tolist())
        if config.transactions is not None:
            for rater, ratee, value in script.get(rnd, ()):
                providers[rnd, rater] = ratee
                transact(rnd, rater, ratee, value)
        else:
            for consumer in range(n):
                candidates = power[power != consumer]
                if rng.random() < config.greedy_alpha and candidates.size:
                    provider = int(candidates[rng.integers(candidates.size)])
                else:
                    provider = int(rng.integers(n - 1))
                    provider += provider >= consumer
                quality = profiles[provider].draw_quality(rng)
                providers[rnd, consumer] = provider
                transact(rnd, consumer, provider, profiles[consumer].report(quality))
        snapshots[rnd] = trust

    truth = ground_truth(config, malicious)
    rms, excluded = rms_error(trust, truth)
    flagged = np.array([classify(t, policy) is Verdict.MALICIOUS for t in trust])
    precision, recall = detection_metrics(flagged, malicious)

    n_flagged = int(flagged.sum())
    baseline = _baseline_scores(agents, n, None)
    b_precision, b_recall = detection_metrics(_flag_lowest(baseline, n_flagged), malicious)
    weighted = _baseline_scores(agents, n, trust)
    w_precision, w_recall = detection_metrics(_flag_lowest(weighted, n_flagged), malicious)

    return MetricsReport(rms, excluded, precision, recall, b_precision, b_recall, w_precision, w_recall,
                         messages, queries, snapshots, malicious, truth, providers, power_sets,
                         baseline, vo_of)


def _baseline_scores(agents: Sequence[TrustAgent], n: int, rater_trust: np.ndarray | None) -> np.ndarray:
    """Unnormalised weighted-sum reputation per node; NaN for nodes nobody rated.

    ``rater_trust=None`` gives every rater weight 1, i.e. the comparator
    sees only the raw scores.
    """
    out = np.full(n, np.nan)
    for agent in agents:
        for node in agent.ledger.ratees():
            pairs = [(e.value, 1.0 if rater_trust is None else rater_trust[e.rater])
                     for e in agent.ledger.scores_for(node)]
            out[node] = weighted_global_reputation(pairs)
    return out


def _flag_lowest(scores: np.ndarray, count: int) -> np.ndarray:
    # unrated nodes sort last, ties by node id
    order = np.lexsort((np.arange(scores.size), np.nan_to_num(scores, nan=np.inf)))
    flags = np.zeros(scores.size, dtype=bool)
    flags[order[:count]] = True
    return flags


def replica_seeds(seed: int, replicas: int) -> list[int]:
    """Independent 64-bit seeds derived from ``seed``; replica ``i`` always gets the same one."""
    return [int(np.random.SeedSequence([seed, i]).generate_state(1, np.uint64)[0]) for i in range(replicas)]


def run_replicas(config: ScenarioConfig, replicas: int, workers: int = 1) -> list[MetricsReport]:
    configs = [replace(config, seed=s) for s in replica_seeds(config.seed, replicas)]
    if workers > 1 and replicas > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_scenario, configs))
    return [run_scenario(c) for c in configs]


def _mean(values: Iterable[float | None]) -> float | None:
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def exp_rms_sweep(alphas: Sequence[float], malicious_fractions: Sequence[float],
                  base: ScenarioConfig = ScenarioConfig(), seeds: int = 10,
                  workers: int = 1) -> list[dict]:
    """Mean RMS error over ``seeds`` replicas for every (alpha, fraction) cell."""
    if seeds < 1:
        raise ValueError("need at least one seed")
    rows = []
    for alpha in alphas:
        for frac in malicious_fractions:
            cfg = replace(base, greedy_alpha=alpha, malicious_fraction=frac)
            reports = run_replicas(cfg, seeds, workers)
            rms = np.array([r.rms for r in reports])
            rows.append({"alpha": alpha, "malicious_fraction": frac, "rms_mean": float(rms.mean()),
                         "rms_std": float(rms.std()), "seeds": seeds})
    return rows


def exp_detection(base: ScenarioConfig = ScenarioConfig(), seeds: int = 10, workers: int = 1) -> list[dict]:
    """Per-replica precision/recall for the fuzzy classifier and the weighted-sum baseline.

    The last row (``replica == "mean"``) averages the defined values.
    """
    reports = run_replicas(base, seeds, workers)
    rows = [{"replica": i, "precision": r.precision, "recall": r.recall,
             "baseline_precision": r.baseline_precision, "baseline_recall": r.baseline_recall,
             "weighted_baseline_precision": r.weighted_baseline_precision,
             "weighted_baseline_recall": r.weighted_baseline_recall}
            for i, r in enumerate(reports)]
    keys = [k for k in rows[0] if k != "replica"]
    rows.append({"replica": "mean", **{k: _mean(row[k] for row in rows) for k in keys}})
    return rows


# (P1, P2, P3, published value, published text)
REFERENCE_ROWS: tuple[tuple[float, float, float, float, str], ...] = (
    (0.1, 0.5, 0.9, 0.5, "0.5"),
    (0.2, 0.5, 0.9, 0.544, "0.544"),
    (0.3, 0.5, 0.9, 0.613, "0.613"),
    (0.4, 0.5, 0.9, 0.705, "0.705"),
    (0.5, 0.5, 0.9, 0.8, "~0.8"),
    (0.6, 0.5, 0.9, 0.8, "~0.8"),
    (0.7, 0.5, 0.9, 0.8, "~0.8"),
    (0.8, 0.5, 0.9, 0.8, "~0.8"),
    (0.96, 0.5, 0.9, 0.8, "~0.8"),
    (1.0, 0.5, 0.9, 0.8, "~0.8"),
)


def exp_table2(rows: Sequence[tuple] = REFERENCE_ROWS, engine: FuzzyEngine | None = None) -> list[dict]:
    engine = engine or FuzzyEngine()
    out = []
    for p1, p2, p3, published, text in rows:
        value = engine.evaluate((p1, p2, p3))
        out.append({"p1": p1, "p2": p2, "p3": p3, "computed": value.crisp, "label": value.label.code,
                    "published": published, "published_text": text})
    return out


def exp_table3(y_fixed: float = 0.2, xs: Sequence[float] | None = None,
               inputs: Sequence[float] = (0.2, 0.5, 0.8), slot: int = 0,
               engine: FuzzyEngine | None = None) -> list[dict]:
    """Sweep an erroneous term ``X`` through both models.

    The weighted-sum baseline is ``X + Y``; the fuzzy model sees ``X`` in
    input ``slot`` with the remaining ``inputs`` unchanged.
    """
    engine = engine or FuzzyEngine()
    if xs is None:
        xs = [i / 10 for i in range(11)]
    out = []
    for x in xs:
        vec = list(inputs)
        vec[slot] = x
        out.append({"x": x, "fr_trust": engine.crisp(vec),
                    "baseline": weighted_global_reputation([(x, 1.0), (y_fixed, 1.0)])})
    return out


def exp_chord(ns: Sequence[int] = (16, 64, 256), m: int = 16, seed: int = 0,
              exhaustive_max: int = 64, samples: int = 100_000) -> list[dict]:
    rng = np.random.default_rng(seed)
    out = []
    for n in ns:
        ring = build_ring(rng.choice(2 ** m, size=n, replace=False).tolist(), m=m)
        exhaustive = n <= exhaustive_max
        hops = mean_hops(ring) if exhaustive else mean_hops(ring, pairs=samples, seed=seed)
        out.append({"n": n, "mean_hops": hops, "dht_messages": hops + 1,
                    "coordinator_messages": trust_query_cost("coordinator"),
                    "log2_n": math.log2(n), "exhaustive": exhaustive})
    return out


def exp_surface(fixed_index: int = 2, fixed_value: float = 0.5, step: float = 0.05,
                engine: FuzzyEngine | None = None) -> list[dict]:
    """Crisp output over a grid of two inputs with the third held fixed."""
    engine = engine or FuzzyEngine()
    steps = int(round(1.0 / step))
    if not math.isclose(steps * step, 1.0):
        raise ValueError("step must divide 1 evenly")
    grid = [i / steps for i in range(steps + 1)]
    free = [i for i in range(3) if i != fixed_index]
    out = []
    for a in grid:
        for b in grid:
            vec = [0.0, 0.0, 0.0]
            vec[fixed_index] = fixed_value
            vec[free[0]], vec[free[1]] = a, b
            out.append({"p1": vec[0], "p2": vec[1], "p3": vec[2], "crisp": engine.crisp(vec)})
    return out


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: str | Path, rows: Sequence[Mapping[str, Any]], header: Sequence[str] | None = None) -> Path:
    path = Path(path)
    header = list(header or (rows[0].keys() if rows else []))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(row.get(h)) for h in header])
    _atomic_write(path, buf.getvalue())
    return path


def write_manifest(path: str | Path, config: Mapping[str, Any], seed: int | None,
                   artifacts: Iterable[str | Path]) -> Path:
    """Write the run manifest; call after every artifact exists."""
    import datetime as _dt

    doc = {
        "config": config,
        "seed": seed,
        "code_version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "artifacts": [str(a) for a in artifacts],
    }
    path = Path(path)
    _atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def save_report(report: MetricsReport, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    paths = [out / "metrics.csv", out / "trust.csv"]
    _atomic_write(paths[0], report.summary_csv())
    _atomic_write(paths[1], report.trust_csv())
    return paths
