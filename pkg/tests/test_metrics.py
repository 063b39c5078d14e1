import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import average_ranks, bleu_by_hand, pearson_textbook, student_t_two_tailed, williams_t_by_hand
from synthqe.core import ErrorSpan, InvalidInput, MqmRecord, Severity
from synthqe.metrics import (
    bleu,
    confusion,
    downsample_match,
    error_rate,
    f1_binary,
    ks_distance,
    match_draws,
    mcc,
    pearson,
    span_weighted_f1,
    spearman,
    t_two_tailed_p,
    williams_test,
)

S = Severity

# Values computed by the oracles in tests/oracles.py and frozen here.
SPEARMAN_TIES = 0.7378647873726218  # ranks y -> (1.5, 1.5, 4, 3); 3.5 / sqrt(5 * 4.5)
MCC_2_3_1_1 = 5 / 12  # (2*3 - 1*1) / sqrt(3 * 3 * 4 * 4)
WILLIAMS_T = 1.6163038933703058
WILLIAMS_P = 0.11765467683113118

floats = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
labels = st.lists(st.sampled_from(["OK", "BAD"]), min_size=1, max_size=40)


def test_pearson_examples():
    x = [1.0, 2.0, 3.0, 4.5]
    assert pearson(x, x) == pytest.approx(1.0)
    assert pearson(x, [-v for v in x]) == pytest.approx(-1.0)
    assert pearson([1, 2, 3], [2, 2, 4]) == pytest.approx(0.866025, abs=1e-6)
    assert pearson([1, 2, 3], [2, 2, 4]) == pytest.approx(pearson_textbook([1, 2, 3], [2, 2, 4]), abs=1e-12)


def test_pearson_degenerate():
    assert math.isnan(pearson([1, 1, 1], [1, 2, 3]))
    with pytest.raises(InvalidInput):
        pearson([1], [1])
    with pytest.raises(InvalidInput):
        pearson([1, 2], [1, 2, 3])


def test_spearman_examples():
    assert spearman([1, 2, 3, 4], [2, 5, 9, 10]) == pytest.approx(1.0)
    assert spearman([1, 2, 3, 4], [10, 9, 5, 2]) == pytest.approx(-1.0)
    assert spearman([1, 2, 3, 4], [10, 10, 30, 20]) == pytest.approx(SPEARMAN_TIES, abs=1e-6)
    oracle = pearson_textbook(average_ranks([1, 2, 3, 4]), average_ranks([10, 10, 30, 20]))
    assert oracle == pytest.approx(SPEARMAN_TIES, abs=1e-12)


ints = st.integers(-50, 50)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(ints, ints), min_size=3, max_size=30))
def test_spearman_invariant_under_monotone_maps(pairs):
    x = [a for a, _ in pairs]
    y = [b for _, b in pairs]
    base = spearman(x, y)
    mapped = spearman([3 * v + 7 for v in x], [v ** 3 for v in y])
    if math.isnan(base):
        assert math.isnan(mapped)
    else:
        assert mapped == pytest.approx(base, abs=1e-9)
        assert base == pytest.approx(pearson_textbook(average_ranks(x), average_ranks(y)), abs=1e-9)


def test_mcc_examples():
    assert mcc(["BAD", "OK", "BAD"], ["BAD", "OK", "BAD"]) == pytest.approx(1.0)
    assert mcc(["OK"] * 4, ["OK", "BAD", "OK", "BAD"]) == 0.0
    pred = ["BAD", "BAD", "OK", "OK", "OK", "BAD", "OK"]
    gold = ["BAD", "BAD", "OK", "OK", "OK", "OK", "BAD"]
    assert confusion(pred, gold) == (2, 3, 1, 1)
    assert mcc(pred, gold) == pytest.approx(MCC_2_3_1_1, abs=1e-6)


def test_f1_examples():
    assert f1_binary(["BAD", "OK"], ["BAD", "OK"], "BAD") == 1.0
    assert f1_binary(["OK", "OK"], ["BAD", "OK"], "BAD") == 0.0
    # P = 1/2, R = 1/4
    pred = ["BAD", "BAD", "OK", "OK", "OK", "OK"]
    gold = ["BAD", "OK", "BAD", "BAD", "BAD", "OK"]
    assert f1_binary(pred, gold, "BAD") == pytest.approx(1 / 3)


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_mcc_f1_permutation_invariant(data):
    gold = data.draw(labels)
    pred = data.draw(st.lists(st.sampled_from(["OK", "BAD"]), min_size=len(gold), max_size=len(gold)))
    perm = data.draw(st.permutations(range(len(gold))))
    assert mcc([pred[i] for i in perm], [gold[i] for i in perm]) == pytest.approx(mcc(pred, gold))
    assert f1_binary([pred[i] for i in perm], [gold[i] for i in perm]) == pytest.approx(f1_binary(pred, gold))
    assert -1.0 - 1e-12 <= mcc(pred, gold) <= 1.0 + 1e-12


def test_span_f1_examples():
    gold = [[ErrorSpan(0, 1, S.MAJOR)], [ErrorSpan(2, 2, S.MINOR)]]
    assert span_weighted_f1(gold, gold).f1 == 1.0
    assert span_weighted_f1([[], []], gold).f1 == 0.0
    r = span_weighted_f1([[ErrorSpan(1, 2, S.MAJOR)]], [[ErrorSpan(0, 1, S.MAJOR)]], [4])
    assert r.f1 == pytest.approx(0.5)
    assert r.precision == pytest.approx(0.5) and r.recall == pytest.approx(0.5)
    assert r.per_severity == {"MAJOR": pytest.approx((0.5, 0.5, 0.5))}
    with pytest.raises(InvalidInput):
        span_weighted_f1([[]], [[], []])


def test_span_f1_weights_severities():
    # MINOR perfect (weight 1), CRITICAL missed entirely (weight 10)
    gold = [[ErrorSpan(0, 0, S.MINOR), ErrorSpan(2, 2, S.CRITICAL)]]
    pred = [[ErrorSpan(0, 0, S.MINOR)]]
    r = span_weighted_f1(pred, gold, [3])
    assert r.f1 == pytest.approx(1 / 11)
    assert r.precision == 1.0 and r.recall == 0.5


def test_span_f1_both_empty_is_perfect():
    assert span_weighted_f1([[]], [[]], [3]).f1 == 1.0


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 12), st.data()), min_size=1, max_size=4))
def test_span_f1_is_one_iff_spans_agree(rows):
    from synthqe.core import spans_from_severities
    gold, pred, lengths, same = [], [], [], True
    sev_st = st.sampled_from(list(Severity))
    for n, data in rows:
        g = data.draw(st.lists(sev_st, min_size=n, max_size=n))
        p = data.draw(st.lists(sev_st, min_size=n, max_size=n))
        gold.append(spans_from_severities(g))
        pred.append(spans_from_severities(p))
        lengths.append(n)
        same &= spans_from_severities(p) == spans_from_severities(g)
    r = span_weighted_f1(pred, gold, lengths)
    assert 0.0 <= r.f1 <= 1.0
    assert (r.f1 == 1.0) == same


def test_bleu_examples():
    hyps = ["the cat sat on the mat".split(), "a b c d e".split()]
    assert bleu(hyps, hyps) == pytest.approx(100.0)
    assert bleu([["x", "y"]], [["a", "b"]]) == 0.0
    assert bleu(["the the cat".split()], ["the cat sat".split()]) == 0.0
    with pytest.raises(InvalidInput):
        bleu([], [])


def test_bleu_matches_hand_counts():
    hyps = ["the cat is on the mat".split(), "there is a cat on the mat".split()]
    refs = ["the cat sat on the mat".split(), "a cat is on the mat".split()]
    assert bleu(hyps, refs) == pytest.approx(bleu_by_hand(hyps, refs), abs=1e-9)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.lists(st.sampled_from("abcde"), min_size=1, max_size=8), min_size=1, max_size=6), st.data())
def test_bleu_identity_and_order_invariance(corpus, data):
    assert bleu(corpus, corpus) == pytest.approx(100.0)
    refs = data.draw(st.lists(st.lists(st.sampled_from("abcde"), min_size=1, max_size=8),
                              min_size=len(corpus), max_size=len(corpus)))
    perm = data.draw(st.permutations(range(len(corpus))))
    assert bleu([corpus[i] for i in perm], [refs[i] for i in perm]) == pytest.approx(bleu(corpus, refs))
    assert bleu(corpus, refs) == pytest.approx(bleu_by_hand(corpus, refs), abs=1e-9)


def _rec(labels):
    spans = [ErrorSpan(i, i, S.MINOR) for i, lab in enumerate(labels) if lab == "BAD"]
    return MqmRecord.from_spans(["s"], ["t"] * len(labels), spans)


def test_error_rate_examples():
    assert error_rate([_rec(["OK"] * 4)]) == 0.0
    assert error_rate([_rec(["BAD"] * 3)]) == 100.0
    assert error_rate([_rec(["BAD", "OK", "OK", "OK"]), _rec(["BAD", "BAD"] + ["OK"] * 6)]) == 25.0
    with pytest.raises(InvalidInput):
        error_rate([])


def test_williams_examples():
    t, p = williams_test(0.6, 0.6, 0.3, 20)
    assert t == 0.0 and p == pytest.approx(1.0)
    t, p = williams_test(0.7, 0.5, 0.6, 30)
    assert t == pytest.approx(WILLIAMS_T, abs=1e-2)
    assert t == pytest.approx(williams_t_by_hand(0.7, 0.5, 0.6, 30), abs=1e-12)
    assert p == pytest.approx(WILLIAMS_P, abs=1e-6)
    t4, p4 = williams_test(0.7, 0.5, 0.6, 4)
    assert math.isfinite(t4)
    assert p4 == pytest.approx(student_t_two_tailed(t4, 1), abs=1e-6)


def test_williams_errors():
    with pytest.raises(InvalidInput):
        williams_test(0.5, 0.5, 0.5, 3)
    with pytest.raises(InvalidInput):
        williams_test(1.0, 0.0, 0.0, 10)  # singular
    with pytest.raises(InvalidInput):
        williams_test(1.2, 0.0, 0.0, 10)


@settings(max_examples=40, deadline=None)
@given(st.floats(-6, 6), st.integers(1, 60))
def test_t_pvalue_matches_integration(t, df):
    assert t_two_tailed_p(t, df) == pytest.approx(student_t_two_tailed(t, df), abs=1e-6)


def test_downsample_examples():
    assert match_draws([0.0, 0.5, 1.0], [0.4, 0.4]) == [1, 0]
    rng = np.random.default_rng(0)
    pool = [0.1, 0.2, 0.3, 0.4]
    picked = downsample_match(pool, [0.2, 0.4], 2, rng)
    assert len(set(picked)) == 2
    assert sorted(pool[i] for i in picked) in ([0.2, 0.4], [0.2, 0.3], [0.3, 0.4])
    everything = downsample_match(pool, [0.25], 4, np.random.default_rng(1))
    assert sorted(everything) == [0, 1, 2, 3]
    with pytest.raises(InvalidInput):
        downsample_match(pool, [0.1], 5, rng)
    with pytest.raises(InvalidInput):
        downsample_match(pool, [], 1, rng)


def test_downsample_picks_exact_scores_when_available():
    pool = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6]
    for seed in range(5):
        picked = downsample_match(pool, [0.1, 0.5], 2, np.random.default_rng(seed))
        assert all(pool[i] in (0.1, 0.5, 0.0, 0.2, 0.4, 0.6) for i in picked)
        assert any(pool[i] in (0.1, 0.5) for i in picked)
    assert [pool[i] for i in match_draws(pool, [0.1, 0.5])] == [0.1, 0.5]


def test_downsample_ks_decreases_with_k():
    rng = np.random.default_rng(11)
    pool = rng.uniform(0, 1, size=3000)
    target = rng.beta(2, 8, size=400)
    ks = [ks_distance([pool[i] for i in downsample_match(pool, target, k, np.random.default_rng(5))], target)
          for k in (10, 50, 250)]
    assert ks[0] > ks[1] > ks[2]
    assert ks_distance(pool, target) > ks[2]
