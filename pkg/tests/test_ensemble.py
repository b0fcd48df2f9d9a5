import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import boosting_direct
from mlvc import tensor as T
from mlvc.ensemble import (BoostingTerminated, CascadeLayer, SampleWeights, Stacker, StackerConfig,
                           attention_stack_forward, bootstrap_sample, boosting_update, cascade_forward, clip_weights,
                           kept_examples, perr_errors, read_prediction_matrix, stack_combine, train_stacker,
                           write_prediction_matrix)
from mlvc.metrics import global_average_precision
from mlvc.models import MoE


def test_bootstrap_is_deterministic_and_covers_about_63_percent():
    assert bootstrap_sample(1, 5).tolist() == [0]
    np.testing.assert_array_equal(bootstrap_sample(50, 3), bootstrap_sample(50, 3))
    frac = np.mean([np.unique(bootstrap_sample(2000, s)).size / 2000 for s in range(100)])
    assert abs(frac - (1 - np.exp(-1))) < 0.02
    with pytest.raises(ValueError):
        bootstrap_sample(0, 0)


def test_boosting_worked_case():
    W = boosting_update(SampleWeights.initial(2), [0.2, 0.6]).W
    np.testing.assert_allclose(W, boosting_direct([1.0, 1.0], [0.2, 0.6]), atol=1e-12)
    np.testing.assert_allclose(W, [0.9191, 1.0809], atol=1e-3)


def test_boosting_identity_cases():
    W0 = SampleWeights(np.array([0.5, 1.5, 1.0, 1.0]))
    np.testing.assert_allclose(boosting_update(W0, [0.3] * 4).W, W0.W, atol=1e-12)
    np.testing.assert_allclose(boosting_update(SampleWeights.initial(2), [0.0, 1.0]).W, [1.0, 1.0], atol=1e-12)


def test_boosting_terminates_on_degenerate_error():
    with pytest.raises(BoostingTerminated):
        boosting_update(SampleWeights.initial(3), [0.0, 0.0, 0.0])
    with pytest.raises(BoostingTerminated):
        boosting_update(SampleWeights.initial(3), [1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        boosting_update(SampleWeights.initial(2), [0.5, 1.5])


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 60), st.floats(0.2, 3.0))
def test_boosting_invariants(seed, n, alpha):
    rng = np.random.default_rng(seed)
    W = SampleWeights.initial(n)
    for _ in range(5):
        err = rng.random(n) ** 3
        W = boosting_update(W, err, alpha=alpha, clip=5.0)
        assert abs(W.W.sum() - n) < 1e-9
        assert np.all(W.W > 0) and np.all(W.W <= 5.0)


def test_clip_water_filling_keeps_sum_and_order():
    w = np.array([20.0, 1.0, 1.0, 1.0, 1.0, 0.5, 0.5])
    w = w * w.size / w.sum()
    c = clip_weights(w, 2.0)
    assert c.sum() == pytest.approx(w.size) and c.max() <= 2.0
    assert np.all(np.diff(c[1:]) <= 1e-12)           # relative order preserved
    with pytest.raises(ValueError):
        clip_weights(np.array([3.0, 1.0]), 0.5)


def test_kept_examples_drop_the_ceiling():
    W = SampleWeights(np.array([5.0, 1.0, 0.5]))
    assert kept_examples(W, 5.0).tolist() == [1, 2]


def test_perr_errors_neutral_for_unlabelled_rows():
    pred = np.array([[0.9, 0.1], [0.2, 0.8], [0.5, 0.5]])
    labels = np.array([[1, 0], [1, 0], [0, 0]])
    assert perr_errors(pred, labels).tolist() == [0.0, 1.0, 0.5]


def test_cascade_with_zero_projection_equals_plain_moe():
    rng = np.random.default_rng(0)
    layer = CascadeLayer(5, 3, 2, rng, proj_dim=4)
    layer.proj.w.values[:] = 0.0
    x = rng.standard_normal((4, 5))
    donors = [rng.random((4, 3)), rng.random((4, 3))]
    plain = MoE(9, 3, 2, rng)
    plain.load_state_dict({k.removeprefix("moe."): v for k, v in layer.state_dict().items() if k.startswith("moe.")})
    x_pad = np.concatenate([x, np.zeros((4, 4))], axis=1)
    np.testing.assert_allclose(cascade_forward(x, donors, layer).values, plain(T.Tensor(x_pad)).values)


def test_cascade_identical_donors_and_errors():
    rng = np.random.default_rng(1)
    layer = CascadeLayer(5, 3, 2, rng, proj_dim=4)
    x, d = rng.standard_normal((2, 5)), rng.random((2, 3))
    np.testing.assert_array_equal(cascade_forward(x, [d, d, d], layer).values, cascade_forward(x, [d], layer).values)
    with pytest.raises(ValueError):
        cascade_forward(x, [], layer)
    with pytest.raises(T.ShapeError):
        cascade_forward(x, [rng.random((2, 4))], layer)


def test_cascade_projection_receives_gradient():
    rng = np.random.default_rng(2)
    layer = CascadeLayer(5, 3, 2, rng, proj_dim=4)
    with T.Graph() as g:
        loss = T.sum_(cascade_forward(rng.standard_normal((3, 5)), [rng.random((3, 3))], layer))
    T.backward(g, loss)
    assert np.abs(layer.proj.w.grad).sum() > 0


def _members(seed, M=3, N=20, L=5):
    return np.random.default_rng(seed).random((M, N, L))


def test_simple_average():
    P = np.stack([np.full((1, 1), 0.2), np.full((1, 1), 0.6)])
    assert stack_combine(P, Stacker("simple", 2, 1))[0, 0] == pytest.approx(0.4)
    np.testing.assert_allclose(stack_combine(_members(0), Stacker("simple", 3, 5)), _members(0).mean(0), atol=1e-15)


def test_linear_one_hot_selects_a_model():
    P = _members(1)
    st_ = Stacker("linear", 3, 5)
    st_.logits.values[:] = [-800.0, 0.0, -800.0]
    np.testing.assert_allclose(stack_combine(P, st_), P[1], atol=1e-15)


def test_identical_members_give_identical_output_in_every_mode():
    rng = np.random.default_rng(2)
    P = np.repeat(_members(2, M=1), 4, axis=0)
    feats = rng.standard_normal((20, 6))
    outs = []
    for mode in ("simple", "linear", "classwise"):
        s = Stacker(mode, 4, 5, rng)
        for p in s.parameters().values():
            p.values[...] = rng.standard_normal(p.shape)
        outs.append(stack_combine(P, s))
    att = Stacker("attention", 4, 5, rng, feature_dim=6)
    for p in att.parameters().values():
        p.values[...] = rng.standard_normal(p.shape)
    outs.append(attention_stack_forward(P, feats, att))
    for o in outs:
        assert o.tobytes() == P[0].tobytes()


def test_zero_components_reproduce_simple_average_bitwise():
    rng = np.random.default_rng(3)
    P, feats = _members(3, M=5), rng.standard_normal((20, 7))
    att = Stacker("attention", 5, 5, rng, feature_dim=7)
    att.V.values[:] = rng.standard_normal(att.V.shape)
    att.A.values[:] = rng.standard_normal(att.A.shape)
    att.a.values[:] = rng.standard_normal(att.a.shape)     # B, b, c stay zero so e == 0
    assert attention_stack_forward(P, feats, att).tobytes() == stack_combine(P, Stacker("simple", 5, 5)).tobytes()


def test_attention_weights_sum_to_one_and_outputs_stay_in_range():
    rng = np.random.default_rng(4)
    P, feats = _members(4, M=4), rng.standard_normal((20, 6))
    att = Stacker("attention", 4, 5, rng, feature_dim=6, components=3, rank=2)
    for p in att.parameters().values():
        p.values[...] = 2.0 * rng.standard_normal(p.shape)
    w = att.weights(P.transpose(1, 0, 2), feats).values
    np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-12)
    out = attention_stack_forward(P, feats, att)
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_single_component_structure():
    rng = np.random.default_rng(5)
    att = Stacker("attention", 6, 7, rng, feature_dim=2, components=1, rank=2)
    for p in att.parameters().values():
        p.values[...] = rng.standard_normal(p.shape)
    E = att.component_matrices().values[0]
    assert np.linalg.matrix_rank(E - att.c.values[0]) <= 3
    expected = att.A.values[0].T @ att.B.values[0] + np.outer(att.a.values[0], att.b.values[0]) + att.c.values[0]
    np.testing.assert_allclose(E, expected)


def test_stacking_errors():
    with pytest.raises(ValueError):
        Stacker("simple", 0, 3)
    with pytest.raises(ValueError):
        stack_combine(np.zeros((0, 2, 3)), Stacker("simple", 1, 3))
    with pytest.raises(ValueError):
        Stacker("median", 2, 3)
    att = Stacker("attention", 2, 3, feature_dim=4)
    with pytest.raises(T.ShapeError):
        attention_stack_forward(np.zeros((2, 5, 3)), np.zeros((5, 3)), att)


def test_scaled_convex_combination_has_the_same_gap():
    rng = np.random.default_rng(6)
    P = rng.random((3, 40, 6))
    labels = rng.random((40, 6)) < 0.3
    w = np.array([0.2, 0.5, 0.3])
    convex = np.tensordot(w, P, axes=1)
    assert global_average_precision(convex / 3, labels) == pytest.approx(global_average_precision(convex, labels))


def _oracle_dataset(seed, n=600, L=6):
    # model 0 tracks the labels closely, model 1 is mostly noise
    rng = np.random.default_rng(seed)
    labels = (rng.random((n, L)) < 0.3).astype(float)
    good = np.clip(0.35 * labels + 0.65 * rng.random((n, L)), 0, 1)
    bad = rng.random((n, L))
    return np.stack([good, bad]), labels


def test_linear_stacker_learns_to_trust_the_better_model():
    P, y = _oracle_dataset(0)
    Pv, yv = _oracle_dataset(1)
    st_ = train_stacker(P, y, "linear", Pv, yv, config=StackerConfig(max_steps=600, patience=60, lr=0.05))
    w = T.softmax(st_.logits, axis=0).values
    assert w[0] > 0.9


def test_single_member_stacker_is_the_identity():
    P, y = _oracle_dataset(2)
    for mode in ("simple", "linear", "classwise"):
        st_ = train_stacker(P[:1], y, mode, P[:1], y, config=StackerConfig(max_steps=30))
        np.testing.assert_array_equal(stack_combine(P[:1], st_), P[0])


def test_stacker_training_is_deterministic():
    P, y = _oracle_dataset(3)
    feats = np.random.default_rng(0).standard_normal((600, 4))
    cfg = StackerConfig(max_steps=40, eval_every=5, seed=7, components=4, rank=2)
    a = train_stacker(P, y, "attention", P, y, feats, feats, cfg)
    b = train_stacker(P, y, "attention", P, y, feats, feats, cfg)
    for k, v in a.state_dict().items():
        assert v.tobytes() == b.state_dict()[k].tobytes()


def test_prediction_matrix_round_trip(tmp_path):
    P = np.random.default_rng(0).random((7, 3))
    write_prediction_matrix(tmp_path / "p.pred", P, {"model": "moe", "part": "test"})
    got, meta = read_prediction_matrix(tmp_path / "p.pred")
    np.testing.assert_array_equal(got, P.astype(np.float32))
    assert meta == {"model": "moe", "part": "test"}
    raw = (tmp_path / "p.pred").read_bytes()
    assert raw[:4] == b"PRED" and len(raw) == 16 + 4 * 21
    (tmp_path / "bad.pred").write_bytes(raw[:-1])
    with pytest.raises(ValueError):
        read_prediction_matrix(tmp_path / "bad.pred")
