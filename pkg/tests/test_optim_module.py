import numpy as np
import pytest

from mlvc import tensor as T
from mlvc.checkpoint import CheckpointError, decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from mlvc.models import MoE, build_model
from mlvc.module import Module
from mlvc.optim import AdamState, adam_step


def test_adam_first_step_moves_by_lr_in_gradient_sign_direction():
    p = T.Tensor(np.array([1.0, -2.0, 0.5]), requires_grad=True)
    p.grad = np.array([0.3, -4.0, 0.0])
    adam_step(AdamState(lr=0.1), {"p": p})
    # bias-corrected first step is lr * g / (|g| + eps)
    np.testing.assert_allclose(p.values, [0.9, -1.9, 0.5], atol=1e-7)


def test_adam_matches_reference_recurrence():
    rng = np.random.default_rng(0)
    p = T.Tensor(rng.standard_normal(4), requires_grad=True)
    ref = p.values.copy()
    m = v = np.zeros(4)
    st = AdamState(lr=0.01)
    for t in range(1, 6):
        g = rng.standard_normal(4)
        adam_step(st, {"p": p}, {"p": g})
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        ref = ref - 0.01 * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
    np.testing.assert_allclose(p.values, ref, rtol=1e-12)


def test_adam_rejects_non_finite_gradients():
    p = T.Tensor(np.zeros(2), requires_grad=True)
    with pytest.raises(FloatingPointError, match="'w'"):
        adam_step(AdamState(), {"w": p}, {"w": np.array([0.0, np.nan])})


def test_adam_minimises_a_quadratic():
    p = T.Tensor(np.array([3.0, -2.0]), requires_grad=True)
    st = AdamState(lr=0.1)
    for _ in range(500):
        p.zero_grad()
        with T.Graph() as g:
            loss = T.sum_(p * p)
        T.backward(g, loss)
        adam_step(st, {"p": p})
    assert np.abs(p.values).max() < 1e-2


def test_parameter_names_are_dotted():
    moe = MoE(3, 2, 2, np.random.default_rng(0))
    assert list(moe.parameters()) == ["gate.w", "gate.b", "expert.w", "expert.b"]


def test_checkpoint_round_trip_is_bit_exact(tmp_path):
    model = build_model("chaining_moe", 5, 4, 2, seed=3, stages=3, proj_dim=4)
    save_checkpoint(tmp_path / "m.ckpt", model.state_dict())
    loaded = load_checkpoint(tmp_path / "m.ckpt")
    for k, v in model.state_dict().items():
        assert loaded[k].tobytes() == v.tobytes()
    other = build_model("chaining_moe", 5, 4, 2, seed=9, stages=3, proj_dim=4)
    other.load_state_dict(loaded)
    assert encode_checkpoint(other.state_dict()) == encode_checkpoint(model.state_dict())


def test_checkpoint_layout():
    blob = encode_checkpoint({"w": np.array([[1.0, 2.0]])})
    assert blob[:4] == b"CSTK"
    assert blob[4:12] == (1).to_bytes(4, "little") + (1).to_bytes(4, "little")
    assert blob[12:14] == (1).to_bytes(2, "little") and blob[14:15] == b"w"
    assert blob[15] == 2 and blob[16:24] == (1).to_bytes(4, "little") + (2).to_bytes(4, "little")
    assert np.frombuffer(blob[24:], "<f8").tolist() == [1.0, 2.0]


@pytest.mark.parametrize("cut", [0, 3, 10, 20, 30])
def test_truncated_checkpoint_is_rejected(cut):
    blob = encode_checkpoint({"w": np.ones((2, 2)), "b": np.ones(2)})
    with pytest.raises(CheckpointError, match="offset"):
        decode_checkpoint(blob[:cut] if cut else blob[:2])


def test_bad_magic_version_and_trailing_bytes():
    blob = encode_checkpoint({"w": np.ones(2)})
    with pytest.raises(CheckpointError, match="magic"):
        decode_checkpoint(b"XXXX" + blob[4:])
    with pytest.raises(CheckpointError, match="version"):
        decode_checkpoint(blob[:4] + (7).to_bytes(4, "little") + blob[8:])
    with pytest.raises(CheckpointError, match="trailing"):
        decode_checkpoint(blob + b"\0")


def test_loading_another_architecture_names_the_parameter():
    a = build_model("moe", 5, 4, 2, seed=0, mixtures=2)
    b = build_model("moe", 5, 4, 2, seed=0, mixtures=3)
    with pytest.raises(ValueError, match="shape mismatch for parameter 'head.gate.w'"):
        b.load_state_dict(a.state_dict())
    with pytest.raises(KeyError, match="missing parameter"):
        build_model("chaining_moe", 5, 4, 2, stages=2, proj_dim=3).load_state_dict(a.state_dict())


def test_failed_load_leaves_model_untouched():
    a = build_model("moe", 5, 4, 2, seed=0, mixtures=2)
    before = a.state_dict()
    state = dict(a.state_dict())
    state["head.gate.w"] = state["head.gate.w"] + 1.0
    state["head.expert.b"] = np.ones(7)
    with pytest.raises(ValueError):
        a.load_state_dict(state)
    for k, v in a.state_dict().items():
        np.testing.assert_array_equal(v, before[k])


def test_empty_module_has_no_parameters():
    assert Module().num_params() == 0
