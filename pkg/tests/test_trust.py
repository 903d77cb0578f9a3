import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from frtrust.fuzzy import DomainError, FuzzyEngine, Label
from frtrust.trust import (
    NEUTRAL_TRUST,
    FeedbackLedger,
    FeedbackScore,
    SelfRatingError,
    ThresholdPolicy,
    TrustAgent,
    TrustRecord,
    UnknownNodeError,
    Verdict,
    best_path_trust,
    classify,
    compute_trust,
    path_trust,
    reduce_scores,
    transitive_trust,
    weighted_global_reputation,
)

ENGINE = FuzzyEngine()
unit = st.floats(0.0, 1.0, allow_nan=False)


def test_p4_scores_accepted():
    ledger = FeedbackLedger()
    for rater, value in ((1, 0.2), (2, 0.8), (3, 0.5)):
        ledger.submit(FeedbackScore(rater, 4, value))
    assert [e.value for e in ledger.scores_for(4)] == [0.2, 0.8, 0.5]


def test_feedback_validation():
    with pytest.raises(SelfRatingError):
        FeedbackScore(4, 4, 0.5)
    with pytest.raises(DomainError):
        FeedbackScore(1, 4, 1.5)
    with pytest.raises(ValueError):
        FeedbackScore(1, 4, 0.5, round=-1)


@pytest.mark.parametrize("scores, expected", [
    ([0.2, 0.8, 0.5], (0.2, 0.5, 0.8)),
    ([0.1, 0.2, 0.6, 1.0], (0.1, 0.4, 1.0)),
    ([0.7], (0.7, 0.7, 0.7)),
])
def test_reduce_scores(scores, expected):
    assert reduce_scores(scores) == pytest.approx(expected, abs=1e-15)


def test_reduce_empty():
    with pytest.raises(ValueError):
        reduce_scores([])


def test_compute_trust_p4():
    ledger = FeedbackLedger(FeedbackScore(r, 4, v) for r, v in ((1, 0.2), (2, 0.8), (3, 0.5)))
    rec = compute_trust(ledger, 4, ENGINE)
    assert rec.crisp == ENGINE.crisp((0.2, 0.5, 0.8))
    assert rec.label is Label.MEDIUM


def test_compute_trust_extremes():
    low = FeedbackLedger(FeedbackScore(r, 9, 0.0) for r in range(5))
    high = FeedbackLedger(FeedbackScore(r, 9, 1.0) for r in range(5))
    assert compute_trust(low, 9, ENGINE).crisp == ENGINE.crisp((0, 0, 0))
    assert compute_trust(high, 9, ENGINE).crisp == ENGINE.crisp((1, 1, 1))
    assert compute_trust(low, 9, ENGINE).label is Label.LOW
    assert compute_trust(high, 9, ENGINE).label is Label.HIGH


def test_compute_trust_unknown_node():
    with pytest.raises(UnknownNodeError):
        compute_trust(FeedbackLedger(), 1, ENGINE)


def test_window_restricts_to_recent_rounds():
    ledger = FeedbackLedger([FeedbackScore(1, 9, 0.0, 0), FeedbackScore(2, 9, 1.0, 5)])
    assert compute_trust(ledger, 9, ENGINE, window=2, current_round=5).crisp == ENGINE.crisp((1, 1, 1))
    assert compute_trust(ledger, 9, ENGINE).crisp == ENGINE.crisp((0, 0.5, 1))


@given(st.lists(unit, min_size=1, max_size=12), st.randoms())
def test_compute_trust_order_invariant_and_bounded(values, rnd):
    shuffled = values[:]
    rnd.shuffle(shuffled)
    a = FeedbackLedger(FeedbackScore(i + 1, 0, v) for i, v in enumerate(values))
    b = FeedbackLedger(FeedbackScore(i + 1, 0, v) for i, v in enumerate(shuffled))
    ra, rb = compute_trust(a, 0, ENGINE), compute_trust(b, 0, ENGINE)
    assert ra == rb
    assert 0.0 <= ra.crisp <= 1.0


def test_classify_boundary():
    policy = ThresholdPolicy(0.35)
    assert classify(0.34, policy) is Verdict.MALICIOUS
    assert classify(0.35, policy) is Verdict.TRUSTED
    assert classify(TrustRecord(1, 0.1, Label.LOW)) is Verdict.MALICIOUS
    with pytest.raises(DomainError):
        ThresholdPolicy(1.2)


@given(unit, unit, unit)
def test_classify_monotone(a, b, theta):
    lo, hi = sorted((a, b))
    p = ThresholdPolicy(theta)
    if classify(lo, p) is Verdict.TRUSTED:
        assert classify(hi, p) is Verdict.TRUSTED


def test_weighted_reputation_examples():
    assert weighted_global_reputation([(0.2, 1), (0.5, 1), (0.8, 1)]) == pytest.approx(1.5, abs=1e-12)
    assert weighted_global_reputation([(0.0, 1), (0.2, 1)]) == pytest.approx(0.2, abs=1e-12)
    assert weighted_global_reputation([(1.0, 1), (0.2, 1)]) == pytest.approx(1.2, abs=1e-12)
    assert weighted_global_reputation([(0.2, 1), (0.5, 1), (0.8, 1)], normalized=True) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        weighted_global_reputation([])
    with pytest.raises(ZeroDivisionError):
        weighted_global_reputation([(0.5, 0.0)], normalized=True)


@given(st.lists(unit, min_size=1, max_size=5))
def test_fuzzy_bounded_where_baseline_is_not(scores):
    baseline = weighted_global_reputation([(s, 1.0) for s in scores])
    crisp = ENGINE.crisp(reduce_scores(scores))
    assert 0.0 <= crisp <= 1.0
    assert baseline == pytest.approx(math.fsum(scores))


def test_transitive_examples():
    assert transitive_trust(1.0, 0.3) == 0.3
    assert transitive_trust(0.0, 0.9) == 0.0
    assert path_trust([0.8, 0.5]) == pytest.approx(0.4)
    with pytest.raises(DomainError):
        transitive_trust(1.2, 0.5)


@given(unit, unit, unit)
def test_transitive_associative_and_dominated(x, y, z):
    assert transitive_trust(transitive_trust(x, y), z) == pytest.approx(transitive_trust(x, transitive_trust(y, z)))
    assert transitive_trust(x, y) <= min(x, y)


@given(unit, unit, unit)
def test_transitive_monotone(x, y, y2):
    lo, hi = sorted((y, y2))
    assert transitive_trust(x, lo) <= transitive_trust(x, hi)


def _brute_best(graph, s, t, max_hops):
    nodes = [n for n in graph if n not in (s, t)]
    best = 0.0
    for k in range(max_hops):
        for mid in itertools.permutations(nodes, k):
            path = (s, *mid, t)
            try:
                edges = [graph[a][b] for a, b in zip(path, path[1:])]
            except KeyError:
                continue
            best = max(best, path_trust(edges))
    return best


@given(st.dictionaries(st.tuples(st.integers(0, 4), st.integers(0, 4)).filter(lambda e: e[0] != e[1]), unit),
       st.integers(1, 4))
def test_best_path_matches_brute_force(edges, max_hops):
    graph = {n: {} for n in range(5)}
    for (a, b), t in edges.items():
        graph[a][b] = t
    assert best_path_trust(graph, 0, 4, max_hops) == pytest.approx(_brute_best(graph, 0, 4, max_hops))


def test_best_path_picks_max_product_within_cap():
    graph = {"A": {"B": 0.9, "C": 0.5}, "B": {"D": 0.9}, "C": {"E": 1.0}, "D": {"E": 0.9}}
    assert best_path_trust(graph, "A", "E", 3) == pytest.approx(0.729)
    assert best_path_trust(graph, "A", "E", 2) == pytest.approx(0.5)
    assert best_path_trust(graph, "A", "E", 1) == 0.0


def test_ledger_csv_roundtrip(tmp_path):
    ledger = FeedbackLedger([FeedbackScore(1, 4, 0.2, 0), FeedbackScore(2, 4, 0.1 + 0.2, 3), FeedbackScore("x", "y", 1.0, 1)])
    path = tmp_path / "ledger.csv"
    ledger.to_csv(path)
    again = FeedbackLedger.from_csv(path)
    assert list(again) == list(ledger)
    assert path.read_text().splitlines()[0] == "rater,ratee,value,round"


def test_agent_tracks_records():
    agent = TrustAgent(coordinator=1)
    assert agent.trust_of(4) == NEUTRAL_TRUST
    assert agent.verdict(4) is Verdict.TRUSTED
    for r in (1, 2, 3):
        rec = agent.submit(FeedbackScore(r, 4, 0.0, round=2))
    assert rec.round == 2
    assert agent.trust_of(4) == ENGINE.crisp((0, 0, 0))
    assert agent.verdict(4) is Verdict.MALICIOUS
    assert len(agent.ledger) == 3
