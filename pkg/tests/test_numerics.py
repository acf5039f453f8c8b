import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from subword_lid.numerics import autograd as ag
from subword_lid.numerics import checkpoint as ckpt_io
from subword_lid.numerics.autograd import Node, NonFiniteError, Parameter
from subword_lid.numerics.gradcheck import grad_check, relative_error
from subword_lid.numerics.init import glorot, make_rng
from subword_lid.numerics.layers import BiLSTM, Linear
from subword_lid.numerics.optim import AdamConfig, SGDConfig, make_optimizer, step


def rand(rng, *shape):
    return Parameter(rng.normal(size=shape))


def scalarize(node):
    """Contract a node with fixed random weights so every output entry matters."""
    w = np.random.default_rng(node.value.size).normal(size=node.shape)
    return ag.sum(ag.mul(node, w))


OP_CASES = {
    "add_broadcast": lambda a, b, c: ag.add(a, c[0]),
    "sub": lambda a, b, c: ag.sub(a, ag.tanh(b[:3, :4])),
    "mul_broadcast": lambda a, b, c: ag.mul(a, c[1]),
    "matmul": lambda a, b, c: ag.matmul(a, b),
    "vecmat": lambda a, b, c: ag.matmul(c[0], b),
    "tanh": lambda a, b, c: ag.tanh(a),
    "sigmoid": lambda a, b, c: ag.sigmoid(a),
    "relu": lambda a, b, c: ag.relu(ag.add(a, 5.0)),
    "concat": lambda a, b, c: ag.concat([a, ag.tanh(c)], axis=0),
    "reshape": lambda a, b, c: ag.reshape(a, (4, 3)),
    "getitem_repeat": lambda a, b, c: ag.getitem(a, (np.array([0, 0, 2]), np.array([1, 1, 3]))),
    "lookup": lambda a, b, c: ag.lookup(b, np.array([[0, 3], [3, 1]])),
    "sum_axis": lambda a, b, c: ag.sum(a, axis=0),
    "logsumexp_axis": lambda a, b, c: ag.logsumexp(a, axis=1),
    "logsumexp_all": lambda a, b, c: ag.logsumexp(a),
    "log_softmax": lambda a, b, c: ag.log_softmax(a, axis=-1),
    "dropout": lambda a, b, c: ag.dropout(a, 0.5, True, make_rng(5)),
}


@pytest.mark.parametrize("name", sorted(OP_CASES))
def test_op_gradients(name):
    rng = np.random.default_rng(1)
    a, b, c = rand(rng, 3, 4), rand(rng, 4, 5), rand(rng, 2, 4)
    err = grad_check(lambda: scalarize(OP_CASES[name](a, b, c)), [a, b, c])
    assert err < 1e-6, err


def test_lstm_sequence_gradient():
    rng = np.random.default_rng(2)
    x, h0, c0 = rand(rng, 4, 2, 3), rand(rng, 2, 5), rand(rng, 2, 5)
    w_in, w_rec, bias = rand(rng, 3, 20), rand(rng, 5, 20), rand(rng, 20)
    params = [x, h0, c0, w_in, w_rec, bias]
    err = grad_check(lambda: scalarize(ag.lstm_sequence(x, h0, c0, w_in, w_rec, bias)), params)
    assert err < 1e-6, err


def test_lstm_matches_stepwise_reference():
    rng = np.random.default_rng(3)
    T, B, D, H = 5, 3, 2, 4
    x = rng.normal(size=(T, B, D))
    w_in, w_rec, bias = rng.normal(size=(D, 4 * H)), rng.normal(size=(H, 4 * H)), rng.normal(size=4 * H)
    h, c = np.zeros((B, H)), np.zeros((B, H))
    expected = []
    sig = lambda z: 1 / (1 + np.exp(-z))  # noqa: E731
    for t in range(T):
        z = x[t] @ w_in + h @ w_rec + bias
        i, f, g, o = sig(z[:, :H]), sig(z[:, H:2 * H]), np.tanh(z[:, 2 * H:3 * H]), sig(z[:, 3 * H:])
        c = f * c + i * g
        h = o * np.tanh(c)
        expected.append(h)
    out = ag.lstm_sequence(x, np.zeros((B, H)), np.zeros((B, H)), w_in, w_rec, bias)
    np.testing.assert_allclose(out.value, np.stack(expected), rtol=1e-12, atol=1e-12)


def test_bilstm_respects_lengths():
    rng = make_rng(4)
    layer = BiLSTM(rng, 3, 2, "bi")
    x = np.random.default_rng(0).normal(size=(4, 2, 3))
    hf, hb = layer(x, [4, 2])
    # the short sequence must not see its padding
    alone_f, alone_b = layer(x[:2, 1:2], [2])
    np.testing.assert_allclose(hf.value[:2, 1], alone_f.value[:, 0], atol=1e-14)
    np.testing.assert_allclose(hb.value[:2, 1], alone_b.value[:, 0], atol=1e-14)
    err = grad_check(lambda: scalarize(ag.concat(list(layer(x, [4, 2])), axis=-1)), layer.parameters())
    assert err < 1e-6


class TestForwardValues:
    def test_logsumexp_of_two_ones(self):
        assert ag.logsumexp(np.log([1.0, 1.0])).value == pytest.approx(math.log(2), abs=1e-15)

    def test_logsumexp_handles_minus_inf(self):
        assert ag.logsumexp(np.array([-np.inf, 0.0])).value == 0.0
        assert ag.logsumexp(np.array([-np.inf, -np.inf])).value == -np.inf

    @given(hnp.arrays(np.float64, st.integers(1, 8), elements=st.floats(-50, 50)),
           st.floats(-1e4, 1e4))
    def test_logsumexp_shift_invariance(self, x, c):
        shifted = ag.logsumexp(x + c).value
        assert abs(shifted - (ag.logsumexp(x).value + c)) <= 1e-12 * max(1.0, abs(c))

    def test_logsumexp_does_not_overflow(self):
        assert ag.logsumexp(np.array([1000.0, 1000.0])).value == pytest.approx(1000 + math.log(2))

    def test_dropout_is_identity_at_eval(self):
        a = Node(np.arange(6.0))
        assert ag.dropout(a, 0.5, False, None) is a

    def test_dropout_scales_kept_units(self):
        out = ag.dropout(np.ones(10000), 0.25, True, make_rng(0)).value
        assert set(np.unique(out)) <= {0.0, 1 / 0.75}
        assert abs((out == 0).mean() - 0.25) < 0.02

    @pytest.mark.parametrize("rate", [-0.1, 1.0])
    def test_dropout_rate_range(self, rate):
        with pytest.raises(ValueError):
            ag.dropout(np.ones(3), rate, True, make_rng(0))

    def test_tanh_derivative_at_zero(self):
        p = Parameter(np.zeros(1))
        ag.sum(ag.tanh(p)).backward()
        assert p.grad[0] == 1.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            ag.matmul(np.ones((2, 3)), np.ones((2, 3)))

    def test_non_finite_input(self):
        with pytest.raises(NonFiniteError):
            ag.tanh(np.array([np.nan]))


class TestBackward:
    def test_sum_gives_ones(self):
        p = Parameter(np.ones((2, 3)))
        ag.sum(p).backward()
        np.testing.assert_array_equal(p.grad, np.ones((2, 3)))

    def test_reused_node_accumulates(self):
        p = Parameter(np.array([3.0]))
        ag.sum(ag.mul(p, p)).backward()
        assert p.grad[0] == 6.0

    def test_unused_parameter_has_no_gradient(self):
        p, q = Parameter(np.ones(2)), Parameter(np.ones(2))
        ag.sum(p).backward()
        assert q.grad is None

    def test_non_scalar_loss(self):
        with pytest.raises(ValueError):
            Parameter(np.ones(2)).backward()


class TestGradCheck:
    def test_quadratic_is_exact(self):
        p = Parameter(np.array([0.3, -1.2, 2.0]))
        assert grad_check(lambda: ag.sum(ag.mul(p, p)), [p]) < 1e-8

    def test_constant(self):
        p = Parameter(np.ones(3))
        assert grad_check(lambda: ag.sum(Node(np.ones(2))), [p]) == 0.0

    def test_detects_wrong_gradient(self):
        p = Parameter(np.array([0.5]))

        def broken():
            out = ag.tanh(p)
            out._backward = lambda g: p.accumulate(2 * g)
            return ag.sum(out)
        assert grad_check(broken, [p]) > 0.1

    def test_relative_error_floor(self):
        assert relative_error(np.zeros(2), np.zeros(2)) == 0.0

    def test_bad_step(self):
        with pytest.raises(ValueError):
            grad_check(lambda: ag.sum(Parameter(np.ones(1))), [], h=0.0)


class TestOptimizers:
    def test_sgd_step(self):
        p = Parameter(np.array([1.0]))
        step(make_optimizer("sgd", [p], SGDConfig(lr=0.1, clip_norm=None)), [p], [np.array([1.0])])
        assert p.value[0] == pytest.approx(0.9, abs=1e-15)

    def test_sgd_clips_global_norm(self):
        p = Parameter(np.zeros(2))
        step(make_optimizer("sgd", [p], SGDConfig(lr=1.0, clip_norm=1.0)), [p], [np.array([3.0, 4.0])])
        np.testing.assert_allclose(p.value, [-0.6, -0.8])

    def test_adam_zero_gradient(self):
        p = Parameter(np.array([1.0, -2.0]))
        state = make_optimizer("adam", [p])
        step(state, [p], [np.zeros(2)])
        np.testing.assert_array_equal(p.value, [1.0, -2.0])
        assert state.timestep == 1

    def test_adam_first_step_moves_by_lr(self):
        p = Parameter(np.array([1.0]))
        step(make_optimizer("adam", [p], AdamConfig(lr=0.01)), [p], [np.array([0.3])])
        assert p.value[0] == pytest.approx(0.99, abs=1e-7)

    def test_adam_bowl(self):
        p = Parameter(np.array([1.0]))
        state = make_optimizer("adam", [p], AdamConfig(lr=0.01))
        for n in range(500):
            step(state, [p], [2 * p.value])
            if abs(p.value[0]) < 0.1:
                break
        assert abs(p.value[0]) < 0.1, (n, p.value)

    def test_shape_mismatch(self):
        p = Parameter(np.ones(2))
        with pytest.raises(ValueError):
            step(make_optimizer("adam", [p]), [p], [np.ones(3)])

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            make_optimizer("lion", [])


class TestInit:
    def test_glorot_bounds_and_determinism(self):
        w = glorot(make_rng(0), (30, 20), "w")
        assert np.abs(w.value).max() <= math.sqrt(6 / 50)
        np.testing.assert_array_equal(w.value, glorot(make_rng(0), (30, 20), "w").value)

    def test_linear_bias_starts_at_zero(self):
        assert not Linear(make_rng(0), 3, 2, "l").bias.value.any()


class TestCheckpoint:
    @given(st.dictionaries(st.from_regex(r"[a-z][a-z0-9_.]{0,8}", fullmatch=True),
                           hnp.arrays(np.float64, hnp.array_shapes(min_dims=0, max_dims=3, max_side=3),
                                      elements=st.floats(allow_nan=False, allow_infinity=False)),
                           max_size=4))
    def test_bitwise_round_trip(self, params):
        ckpt = ckpt_io.Checkpoint("toy", {"a": 1, "b": [0.1, "x"]}, {"chars": ["a", "ɨ", " ", "|"]}, params)
        back = ckpt_io.loads(ckpt_io.dumps(ckpt))
        assert back.kind == "toy" and back.hyper == ckpt.hyper and back.vocabs == ckpt.vocabs
        assert back.params.keys() == params.keys()
        for k, v in params.items():
            assert back.params[k].shape == v.shape
            assert back.params[k].tobytes() == v.tobytes()

    def test_rejects_other_versions(self):
        text = ckpt_io.dumps(ckpt_io.Checkpoint("toy")).replace("format=1", "format=2")
        with pytest.raises(ckpt_io.CheckpointError):
            ckpt_io.loads(text)

    def test_rejects_value_count_mismatch(self):
        with pytest.raises(ckpt_io.CheckpointError):
            ckpt_io.loads("#checkpoint format=1 kind=toy\n#hyper {}\nparam w 2x2 1 2 3\n")
