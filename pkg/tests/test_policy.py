import itertools
import math

import numpy as np
import pytest

from oracles import central_diff, max_rel_error, mlp_scalar, sigmoid
from qsumm.corpus import Sample
from qsumm.errors import ArgumentError
from qsumm.features import EmbeddingTable, fit_context
from qsumm.policy import (
    EMBEDDING,
    PolicyModel,
    PolicyParams,
    PolicyState,
    RLConfig,
    feature_dim,
    init_policy,
    log_prob,
    log_prob_grads,
    policy_features,
    policy_forward,
    reinforce_train,
    rollout,
    trajectory_log_prob,
)
from qsumm.rouge import RewardScheme

TOY = Sample("p", "A c?", "summary", ("A b. B.", "C a a."), ("A b.",))


def toy_tfidf():
    return fit_context([TOY]).tfidf


def test_toy_shapes():
    assert [list(s.tokens) for s in TOY.sentences] == [["a", "b"], ["b"], ["c", "a", "a"]]
    assert feature_dim(toy_tfidf()) == 16


def dense(sv, size):
    return sv.to_dense(size)


def test_initial_and_last_states():
    tf = toy_tfidf()
    x = dense(policy_features(PolicyState(TOY, 0), tf), 16)
    assert not x[6:9].any() and x[15] == 0.0
    x = dense(policy_features(PolicyState(TOY, 2, frozenset({0})), tf), 16)
    assert not x[9:12].any()
    assert x[15] == 1.0


def test_mid_episode_state_against_oracle():
    tf = toy_tfidf()
    df = {"a": 2, "b": 2, "c": 1}
    idf = {t: math.log(3 / df[t]) for t in df}
    col = tf.vocabulary

    def block(tokens):
        out = [0.0, 0.0, 0.0]
        for t in tokens:
            out[col[t]] += idf[t]
        return out

    want = (block(["b"]) + block(["a", "b", "b", "c", "a", "a"]) + block(["a", "b"])
            + block(["c", "a", "a"]) + block(["a", "c"]) + [1.0])
    got = dense(policy_features(PolicyState(TOY, 1, frozenset({0})), tf), 16)
    assert got.tolist() == pytest.approx(want, abs=1e-12)


def test_state_validation():
    with pytest.raises(ArgumentError):
        PolicyState(TOY, 3)
    with pytest.raises(ArgumentError):
        PolicyState(TOY, 1, frozenset({1}))


def test_forward_examples():
    zero = PolicyParams(np.zeros((3, 16)), np.zeros(3), np.zeros(3), 0.0)
    x = np.arange(16, dtype=float)
    assert policy_forward(zero, x) == 0.5
    sat = PolicyParams(np.zeros((3, 16)), np.zeros(3), np.zeros(3), 20.0)
    assert policy_forward(sat, x) > 0.999999
    rng = np.random.default_rng(1)
    p = PolicyParams(rng.normal(scale=0.3, size=(4, 16)), rng.normal(size=4), rng.normal(size=4), 0.1)
    x = rng.normal(size=16)
    x[[2, 7]] = 0.0
    want = sigmoid(mlp_scalar(p.W1.tolist(), p.b1.tolist(), p.w2.tolist(), p.b2, x.tolist()))
    assert policy_forward(p, x) == pytest.approx(want, abs=1e-12)
    with pytest.raises(ArgumentError):
        policy_forward(p, np.ones(15))


def test_rollout_boundaries():
    tf = toy_tfidf()
    zero = PolicyParams(np.zeros((3, 16)), np.zeros(3), np.zeros(3), 0.0)
    sel, trace = rollout(zero, TOY, tf, "greedy")
    assert sel == [] and [a for a, _ in trace] == [False] * 3
    assert all(lp == pytest.approx(math.log(0.5)) for _, lp in trace)
    hot = PolicyParams(np.zeros((3, 16)), np.zeros(3), np.zeros(3), 40.0)
    assert rollout(hot, TOY, tf, "greedy")[0] == [0, 1, 2]
    empty = Sample("e", "Q?", "list", (), ("r",))
    assert rollout(hot, empty, tf, "greedy") == ([], [])


def test_rollout_sample_mode_deterministic():
    tf = toy_tfidf()
    p = init_policy(3, 5, seed=2, gain=1.0)
    a = rollout(p, TOY, tf, "sample", np.random.default_rng(5))
    b = rollout(p, TOY, tf, "sample", np.random.default_rng(5))
    assert a == b
    with pytest.raises(ArgumentError):
        rollout(p, TOY, tf, "sample")


def test_trajectory_additivity():
    tf = toy_tfidf()
    p = init_policy(3, 4, seed=8, gain=2.0)
    total = 0.0
    for actions in itertools.product([False, True], repeat=3):
        total += math.exp(trajectory_log_prob(p, TOY, tf, actions))
    assert total == pytest.approx(1.0, abs=1e-12)
    rng = np.random.default_rng(0)
    for _ in range(20):
        sel, trace = rollout(p, TOY, tf, "sample", rng)
        acts = [a for a, _ in trace]
        assert sel == [i for i, a in enumerate(acts) if a]
        assert sum(lp for _, lp in trace) == pytest.approx(trajectory_log_prob(p, TOY, tf, acts), abs=1e-12)


def test_log_prob_stable_in_saturation():
    assert log_prob(800.0, True) == 0.0
    assert log_prob(800.0, False) == -800.0
    assert math.isfinite(log_prob(-800.0, True))


def policy_grad_error(block, h, seed):
    rng = np.random.default_rng(seed)
    d_in = 5 * block + 1
    p = PolicyParams(rng.normal(size=(h, d_in)), rng.normal(size=h), rng.normal(size=h), float(rng.normal()))
    x = rng.normal(size=d_in) * (rng.random(d_in) < 0.6)
    worst = 0.0
    for action in (False, True):
        g = log_prob_grads(p, x, action)
        cols, blk = g["W1"]
        gW1 = np.zeros_like(p.W1)
        gW1[:, cols] = blk

        def f():
            pre = p.W1 @ x + p.b1
            return log_prob(float(np.maximum(pre, 0) @ p.w2) + p.b2, action)

        b2 = np.array([p.b2])

        def f_b2():
            p.b2 = float(b2[0])
            return f()

        worst = max(worst, max_rel_error(gW1, central_diff(f, p.W1)), max_rel_error(g["b1"], central_diff(f, p.b1)),
                    max_rel_error(g["w2"], central_diff(f, p.w2)), max_rel_error([g["b2"]], central_diff(f_b2, b2)))
    return worst


def test_policy_gradients():
    rng = np.random.default_rng(3)
    for k in range(10):
        assert policy_grad_error(int(rng.integers(1, 5)), int(rng.integers(1, 6)), k) < 1e-4


def test_zero_lr_leaves_params_unchanged():
    tf = toy_tfidf()
    init = init_policy(3, 6, seed=1)
    out = reinforce_train([TOY], tf, RLConfig(episodes=50, lr=0.0, h=6), init=init)
    assert np.array_equal(out.W1, init.W1) and np.array_equal(out.w2, init.w2) and out.b2 == init.b2


def test_zero_advantage_leaves_params_unchanged():
    # no sentence shares a word with the reference: every reward is 0
    s = Sample("z", "Q?", "list", ("Red green. Blue sky.",), ("Nothing alike.",))
    tf = fit_context([s]).tfidf
    init = init_policy(len(tf), 6, seed=1)
    out = reinforce_train([s], tf, RLConfig(episodes=40, h=6), init=init)
    assert np.array_equal(out.W1, init.W1) and np.array_equal(out.b1, init.b1)


def test_training_bit_reproducible():
    tf = toy_tfidf()
    cfg = RLConfig(episodes=60, h=8, seed=4, reward_scheme=RewardScheme.MEAN_2_L_F1)
    a = reinforce_train([TOY], tf, cfg)
    b = reinforce_train([TOY], tf, cfg)
    assert np.array_equal(a.W1, b.W1) and np.array_equal(a.w2, b.w2) and a.b2 == b.b2


def test_training_setup_errors():
    tf = toy_tfidf()
    with pytest.raises(ArgumentError):
        reinforce_train([Sample("n", "Q?", "list", ("A b.",), ())], tf, RLConfig(episodes=1))
    with pytest.raises(ArgumentError):
        RLConfig(episodes=0)
    with pytest.raises(ArgumentError):
        RLConfig(baseline_decay=1.0)


def test_embedding_feature_mode():
    table = EmbeddingTable(2, {"a": np.array([1.0, 0.0]), "b": np.array([0.0, 2.0])})
    assert feature_dim(None, EMBEDDING, table) == 11
    x = dense(policy_features(PolicyState(TOY, 1, frozenset({0})), None, EMBEDDING, table), 11)
    assert x[:2].tolist() == [0.0, 2.0]      # candidate "b"
    assert x[4:6].tolist() == [0.5, 1.0]     # summary so far "a b"
    p = reinforce_train([TOY], None, RLConfig(episodes=5, h=4, feature_mode=EMBEDDING), table)
    assert p.input_dim == 11
    model = PolicyModel(p, None, table)
    assert len(model.decision_values(TOY)) == 3


def test_policy_model_is_greedy():
    tf = toy_tfidf()
    p = init_policy(3, 5, seed=3, gain=3.0)
    m = PolicyModel(p, tf)
    vals = m.decision_values(TOY)
    assert [i for i, lab in enumerate(m.predicted_labels(vals)) if lab] == rollout(p, TOY, tf, "greedy")[0]
