import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_rouge_l, brute_rouge_n, brute_rouge_su
from qsumm.errors import ArgumentError
from qsumm.rouge import RewardScheme, RougeScore, lcs_length, reward, rouge_l, rouge_n, rouge_su

tokens = st.lists(st.sampled_from("abcde"), max_size=12)


def triple(score):
    return (score.precision, score.recall, score.f1)


def test_rouge_n_example():
    assert triple(rouge_n(["the", "cat", "sat"], [["the", "cat", "ate"]], 2)) == (0.5, 0.5, 0.5)


def test_rouge_n_identity_and_disjoint():
    x = list("abcab")
    for n in range(1, 6):
        assert triple(rouge_n(x, [x], n)) == (1.0, 1.0, 1.0)
    assert triple(rouge_n(["a", "b"], [["c", "d"]], 2)) == (0.0, 0.0, 0.0)


def test_rouge_n_clipping():
    # candidate repeats "a a" three times, reference has it once
    s = rouge_n(list("aaaa"), [list("aab")], 2)
    assert s.precision == pytest.approx(1 / 3)
    assert s.recall == pytest.approx(1 / 2)


def test_rouge_su_examples():
    assert triple(rouge_su(list("abc"), [list("abd")], 4)) == (0.5, 0.5, 0.5)
    assert triple(rouge_su(list("abcd"), [list("abcd")])) == (1.0, 1.0, 1.0)
    assert triple(rouge_su(["a"], [["a"]])) == (1.0, 1.0, 1.0)


def test_rouge_su_gap_semantics():
    # a and c are separated by one token: gap 1
    assert rouge_su(list("abc"), [list("ac")], 0).precision == pytest.approx(2 / 5)
    assert rouge_su(list("abc"), [list("ac")], 1).precision == pytest.approx(3 / 6)


def test_rouge_l_examples():
    assert triple(rouge_l(list("abcd"), [list("acbd")])) == (0.75, 0.75, 0.75)
    assert triple(rouge_l(list("xy"), [list("xy")])) == (1.0, 1.0, 1.0)
    assert triple(rouge_l([], [["a"]])) == (0.0, 0.0, 0.0)


def test_reward_examples():
    same = list("abcde")
    for scheme in RewardScheme:
        assert reward(same, [same], scheme) == 1.0
        assert reward(list("ab"), [list("cd")], scheme) == 0.0


def test_reward_mean_2_l_worked_value():
    # ROUGE-2 F1 = 1/2 (one of two bigrams), ROUGE-L F1 = 2/3 (LCS "a b"); the mean is 7/12
    r2 = brute_rouge_n(list("abc"), [list("abd")], 2)[2]
    rl = brute_rouge_l(list("abc"), [list("abd")])[2]
    assert (r2, rl) == (0.5, pytest.approx(2 / 3))
    assert reward(list("abc"), [list("abd")], RewardScheme.MEAN_2_L_F1) == pytest.approx(7 / 12, abs=1e-15)
    assert reward(list("abc"), [list("abd")], "su4f1") == 0.5


def test_empty_references_rejected():
    for fn in (lambda: rouge_n(["a"], [], 2), lambda: rouge_su(["a"], []), lambda: rouge_l(["a"], []),
               lambda: reward(["a"], [], RewardScheme.SU4_F1)):
        with pytest.raises(ArgumentError):
            fn()


def test_bad_parameters_rejected():
    with pytest.raises(ArgumentError):
        rouge_n(["a"], [["a"]], 0)
    with pytest.raises(ArgumentError):
        rouge_su(["a"], [["a"]], -1)


def test_multi_reference_takes_best_f1_first_on_ties():
    cand = list("ab")
    s = rouge_n(cand, [list("xy"), list("abz"), list("zab")], 2)
    assert triple(s) == triple(rouge_n(cand, [list("abz")], 2))
    # equal F1 with different P/R: first wins
    a, b = list("abc"), list("abcd")
    s1 = rouge_l(list("ab"), [a, ["a", "b", "q"]])
    assert triple(s1) == triple(rouge_l(list("ab"), [a]))
    assert rouge_l(list("ab"), [b]).f1 < s1.f1


@given(tokens, st.lists(tokens, min_size=1, max_size=3), st.integers(1, 3))
def test_rouge_n_matches_oracle(c, refs, n):
    assert triple(rouge_n(c, refs, n)) == pytest.approx(brute_rouge_n(c, refs, n), abs=1e-12)


@given(tokens, st.lists(tokens, min_size=1, max_size=3), st.integers(0, 6))
def test_rouge_su_matches_oracle(c, refs, gap):
    assert triple(rouge_su(c, refs, gap)) == pytest.approx(brute_rouge_su(c, refs, gap), abs=1e-12)


@given(tokens, st.lists(tokens, min_size=1, max_size=3))
def test_rouge_l_matches_oracle(c, refs):
    assert triple(rouge_l(c, refs)) == pytest.approx(brute_rouge_l(c, refs), abs=1e-12)


@given(tokens, tokens)
def test_scores_in_range_and_harmonic(c, r):
    for s in (rouge_n(c, [r], 2), rouge_su(c, [r]), rouge_l(c, [r])):
        for v in triple(s):
            assert 0.0 <= v <= 1.0
        if s.precision + s.recall == 0:
            assert s.f1 == 0.0
        else:
            assert s.f1 == 2 * s.precision * s.recall / (s.precision + s.recall)
        assert s.f1 <= max(s.precision, s.recall) + 1e-15


@given(tokens, st.lists(tokens, min_size=1, max_size=3), st.data())
def test_reference_duplication_is_invariant(c, refs, data):
    k = data.draw(st.integers(0, len(refs) - 1))
    dup = refs + [refs[k]]
    for fn in (lambda r: rouge_n(c, r, 2), lambda r: rouge_su(c, r), lambda r: rouge_l(c, r)):
        assert fn(dup) == fn(refs)


@given(tokens, tokens)
def test_rouge_l_symmetric(x, y):
    assert rouge_l(x, [y]).f1 == rouge_l(y, [x]).f1
    assert lcs_length(x, y) == lcs_length(y, x)


def test_su_with_wide_gap_is_all_pairs():
    rng = random.Random(5)
    for _ in range(200):
        c = [rng.choice("abc") for _ in range(rng.randint(0, 8))]
        r = [rng.choice("abc") for _ in range(rng.randint(0, 8))]
        wide = max(len(c), len(r))
        assert triple(rouge_su(c, [r], wide)) == pytest.approx(brute_rouge_su(c, [r], 100), abs=1e-12)


def test_rouge_score_from_pr():
    assert RougeScore.from_pr(0.0, 0.0).f1 == 0.0
    assert RougeScore.from_pr(0.5, 1.0).f1 == pytest.approx(2 / 3)
