"""
Unit tests for the tensor engine: forward ops, backward and dropout
"""

import numpy as np
import pytest
from utils.gradcheck import grad_check, sample_coordinates
from utils.tensor import (
    NonFiniteError,
    NotScalarLossError,
    Parameter,
    ShapeMismatchError,
    Tape,
    Tensor,
    add,
    backward,
    concat,
    corrupted_backward,
    dropout,
    dropout_rng,
    embedding_lookup,
    gelu,
    layer_norm,
    matmul,
    mse_loss,
    mul,
    relu,
    reshape,
    select,
    softmax,
    transpose,
)

pytestmark = pytest.mark.unit

TOLERANCE = 1e-4
COORDINATES = 120


def params(**arrays) -> dict[str, Parameter]:
    return {name: Parameter(name, data) for name, data in arrays.items()}


def away_from_zero(rng: np.random.Generator, shape) -> np.ndarray:
    """Values with |x| >= 0.1 so relu kinks stay outside the probe step"""
    magnitude = 0.1 + np.abs(rng.normal(size=shape))
    return np.where(rng.random(shape) < 0.5, -magnitude, magnitude)


def check_op(build, parameters, seed: int = 0) -> float:
    """Max relative error of an op wrapped in an mse loss"""
    shape = build().shape
    target = np.random.default_rng(seed + 100).normal(size=shape)

    def loss_fn():
        return mse_loss(build(), target)

    coordinates = sample_coordinates(parameters, COORDINATES, seed)
    result = grad_check(loss_fn, parameters, coordinates)
    assert len(result.checks) >= 100
    return result.max_relative_error


class TestForwardOps:
    """Test cases for forward op values"""

    def test_matmul_identity(self):
        """Test I @ A = A"""
        a = Tensor([[1.5, -2.0], [0.25, 4.0]])
        assert np.array_equal(matmul(Tensor(np.eye(2)), a).data, a.data)

    def test_matmul_shape_mismatch(self):
        """Test inner dimensions must agree"""
        with pytest.raises(ShapeMismatchError):
            matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))

    def test_add_broadcasts_leading_dims(self):
        """Test a bias row broadcasts over a batch"""
        out = add(Tensor(np.zeros((3, 2))), Tensor([1.0, 2.0]))
        assert out.data.tolist() == [[1.0, 2.0]] * 3

    def test_add_shape_mismatch(self):
        """Test incompatible operands"""
        with pytest.raises(ShapeMismatchError):
            add(Tensor(np.ones((2, 3))), Tensor(np.ones(2)))

    def test_softmax_uniform(self):
        """Test softmax of equal logits"""
        out = softmax(Tensor([0.0, 0.0, 0.0]))
        assert np.allclose(out.data, [1 / 3, 1 / 3, 1 / 3])

    def test_softmax_rows_sum_to_one(self):
        """Test every row sums to 1 even for large logits"""
        rng = np.random.default_rng(1)
        out = softmax(Tensor(rng.normal(scale=30.0, size=(5, 7))))
        assert np.all(np.abs(out.data.sum(axis=-1) - 1.0) <= 1e-12)

    def test_softmax_mask(self):
        """Test masked entries get exactly zero probability"""
        out = softmax(Tensor([1.0, 2.0, 3.0]), mask=np.array([1, 1, 0]))
        assert out.data[2] == 0.0
        assert out.data.sum() == pytest.approx(1.0)

    def test_softmax_fully_masked_row(self):
        """Test a row with nothing kept"""
        with pytest.raises(ShapeMismatchError):
            softmax(Tensor([1.0, 2.0]), mask=np.array([0, 0]))

    def test_layer_norm_mean_zero(self):
        """Test per-row mean is zero with unit gain"""
        rng = np.random.default_rng(2)
        width = 6
        out = layer_norm(
            Tensor(rng.normal(loc=4.0, size=(4, width))),
            Tensor(np.ones(width)),
            Tensor(np.zeros(width)),
        )
        assert np.all(np.abs(out.data.mean(axis=-1)) <= 1e-9)

    def test_layer_norm_gain_shape(self):
        """Test gain and bias must match the last dim"""
        with pytest.raises(ShapeMismatchError):
            layer_norm(
                Tensor(np.ones((2, 3))), Tensor(np.ones(2)), Tensor(np.ones(3))
            )

    def test_relu_and_gelu_values(self):
        """Test relu clamps and gelu(0) = 0"""
        assert relu(Tensor([-1.0, 2.0])).data.tolist() == [0.0, 2.0]
        assert gelu(Tensor([0.0])).data.tolist() == [0.0]
        assert gelu(Tensor([10.0])).data[0] == pytest.approx(10.0)

    def test_embedding_lookup(self):
        """Test rows gathered by id"""
        table = Tensor(np.arange(6.0).reshape(3, 2))
        out = embedding_lookup(table, np.array([[2, 0]]))
        assert out.data.tolist() == [[[4.0, 5.0], [0.0, 1.0]]]

    def test_embedding_id_out_of_range(self):
        """Test ids beyond the table"""
        with pytest.raises(ShapeMismatchError):
            embedding_lookup(Tensor(np.ones((3, 2))), np.array([3]))

    def test_mse_examples(self):
        """Test mse of identical and hand-computed inputs"""
        x = Tensor([1.0, 2.0])
        assert mse_loss(x, x).item() == 0.0
        assert mse_loss(x, np.zeros(2)).item() == 2.5

    def test_non_finite(self):
        """Test infinite results are rejected"""
        with pytest.raises(NonFiniteError) as exc_info:
            add(Tensor([np.inf]), Tensor([1.0]))
        assert exc_info.value.op == "add"


class TestDropout:
    """Test cases for dropout"""

    def test_identity_when_not_training(self):
        """Test eval mode returns the input"""
        x = Tensor(np.ones((3, 4)))
        assert dropout(x, 0.5, train=False) is x

    def test_scales_kept_values(self):
        """Test kept activations are scaled by 1/(1-rate)"""
        x = Tensor(np.ones((50, 50)))
        out = dropout(x, 0.5, train=True, rng=dropout_rng(1, 0, 0))
        assert set(np.unique(out.data)) <= {0.0, 2.0}
        assert 0.4 < (out.data > 0).mean() < 0.6

    def test_reproducible_rng(self):
        """Test the same (seed, step, layer) gives the same mask"""
        x = Tensor(np.ones(100))
        first = dropout(x, 0.3, True, dropout_rng(5, 2, 1))
        second = dropout(x, 0.3, True, dropout_rng(5, 2, 1))
        other = dropout(x, 0.3, True, dropout_rng(5, 3, 1))
        assert np.array_equal(first.data, second.data)
        assert not np.array_equal(first.data, other.data)

    def test_invalid_rate(self):
        """Test rate outside [0, 1)"""
        with pytest.raises(ValueError):
            dropout(Tensor([1.0]), 1.0, train=True, rng=dropout_rng(0, 0, 0))


class TestBackward:
    """Test cases for backward"""

    def test_hand_chain_rule(self):
        """Test mse(w*x, y) with w=1, x=2, y=4 gives dloss/dw = -8"""
        w = Parameter("w", [1.0])
        with Tape().recording():
            loss = mse_loss(mul(w, Tensor([2.0])), np.array([4.0]))
        gradients = backward(loss, [w])
        assert gradients["w"].tolist() == [-8.0]

    def test_unused_parameter_has_zero_gradient(self):
        """Test parameters not reached by the loss"""
        w = Parameter("w", [1.0])
        unused = Parameter("unused", np.ones((2, 2)))
        with Tape().recording():
            loss = mse_loss(w, np.array([0.0]))
        gradients = backward(loss, [w, unused])
        assert gradients["unused"].shape == (2, 2)
        assert not gradients["unused"].any()

    def test_add_distributes(self):
        """Test both operands of add receive the upstream gradient"""
        a = Parameter("a", np.full(3, 2.0))
        b = Parameter("b", np.zeros(3))
        with Tape().recording():
            total = add(a, b)
            loss = mse_loss(total, np.full(3, 1.5))
        gradients = backward(loss, [a, b])
        assert np.allclose(gradients["a"], gradients["b"])
        assert np.allclose(gradients["a"], 2.0 * 0.5 / 3)

    def test_shapes_match_parameters(self):
        """Test gradient shapes equal parameter shapes"""
        w = Parameter("w", np.ones((3, 2)))
        bias = Parameter("bias", np.zeros(2))
        with Tape().recording():
            out = add(matmul(Tensor(np.ones((4, 3))), w), bias)
            loss = mse_loss(out, np.zeros((4, 2)))
        gradients = backward(loss, [w, bias])
        assert gradients["w"].shape == (3, 2)
        assert gradients["bias"].shape == (2,)

    def test_not_scalar(self):
        """Test backward needs a scalar loss"""
        w = Parameter("w", np.ones(2))
        with Tape().recording():
            out = mul(w, 2.0)
        with pytest.raises(NotScalarLossError):
            backward(out, [w])

    def test_tape_is_reset(self):
        """Test the tape is consumed by backward"""
        w = Parameter("w", [1.0])
        tape = Tape()
        with tape.recording():
            loss = mse_loss(w, np.array([0.0]))
        assert len(tape) > 0
        backward(loss, [w])
        assert len(tape) == 0

    def test_no_tape_outside_recording(self):
        """Test ops outside a recording block are plain forward passes"""
        w = Parameter("w", [1.0])
        loss = mse_loss(w, np.array([0.0]))
        assert not backward(loss, [w])["w"].any()


class TestOpGradients:
    """Finite-difference agreement for every differentiable op"""

    def test_matmul(self):
        """Test matmul gradients for both operands"""
        rng = np.random.default_rng(10)
        p = params(a=rng.normal(size=(4, 6)), b=rng.normal(size=(6, 5)))
        error = check_op(lambda: matmul(p["a"], p["b"]), p)
        assert error < TOLERANCE

    def test_batched_matmul(self):
        """Test broadcasting matmul over a batch"""
        rng = np.random.default_rng(11)
        p = params(a=rng.normal(size=(3, 4, 5)), b=rng.normal(size=(5, 2)))
        error = check_op(lambda: matmul(p["a"], p["b"]), p, seed=1)
        assert error < TOLERANCE

    def test_add_and_mul(self):
        """Test broadcasting add and mul"""
        rng = np.random.default_rng(12)
        p = params(
            x=rng.normal(size=(6, 8)),
            bias=rng.normal(size=8),
            scale=rng.normal(size=8),
        )
        error = check_op(
            lambda: mul(add(p["x"], p["bias"]), p["scale"]), p, seed=2
        )
        assert error < TOLERANCE

    def test_relu(self):
        """Test relu away from its kink"""
        rng = np.random.default_rng(13)
        p = params(x=away_from_zero(rng, (10, 12)))
        assert check_op(lambda: relu(p["x"]), p, seed=3) < TOLERANCE

    def test_gelu(self):
        """Test tanh-form gelu"""
        rng = np.random.default_rng(14)
        p = params(x=rng.normal(scale=2.0, size=(10, 12)))
        assert check_op(lambda: gelu(p["x"]), p, seed=4) < TOLERANCE

    def test_softmax(self):
        """Test softmax with and without a mask"""
        rng = np.random.default_rng(15)
        p = params(x=rng.normal(size=(3, 5, 8)))
        mask = np.ones((3, 1, 8))
        mask[:, :, 6:] = 0
        assert check_op(lambda: softmax(p["x"]), p, seed=5) < TOLERANCE
        assert (
            check_op(lambda: softmax(p["x"], mask), p, seed=6) < TOLERANCE
        )

    def test_layer_norm(self):
        """Test layer_norm with respect to input, gain and bias"""
        rng = np.random.default_rng(16)
        p = params(
            x=rng.normal(size=(5, 9)),
            gain=1.0 + 0.1 * rng.normal(size=9),
            bias=0.1 * rng.normal(size=9),
        )
        error = check_op(
            lambda: layer_norm(p["x"], p["gain"], p["bias"]), p, seed=7
        )
        assert error < TOLERANCE

    def test_embedding_lookup(self):
        """Test repeated ids accumulate gradient"""
        rng = np.random.default_rng(17)
        p = params(table=rng.normal(size=(10, 12)))
        ids = rng.integers(0, 10, size=(4, 7))
        error = check_op(lambda: embedding_lookup(p["table"], ids), p, seed=8)
        assert error < TOLERANCE

    def test_dropout(self):
        """Test dropout with a fixed mask"""
        rng = np.random.default_rng(18)
        p = params(x=rng.normal(size=(10, 12)))

        def build():
            return dropout(p["x"], 0.25, True, dropout_rng(3, 0, 0))

        assert check_op(build, p, seed=9) < TOLERANCE

    def test_mse_loss(self):
        """Test mse with respect to the prediction"""
        rng = np.random.default_rng(19)
        p = params(pred=rng.normal(size=(12, 10)))
        target = rng.normal(size=(12, 10))
        coordinates = sample_coordinates(p, COORDINATES, 10)
        result = grad_check(
            lambda: mse_loss(p["pred"], target), p, coordinates
        )
        assert result.max_relative_error < TOLERANCE

    def test_shape_ops(self):
        """Test reshape, transpose, concat and select"""
        rng = np.random.default_rng(20)
        p = params(a=rng.normal(size=(4, 6)), b=rng.normal(size=(4, 3, 2)))

        def build():
            joined = concat([reshape(p["a"], (4, 3, 2)), p["b"]], axis=1)
            return select(transpose(joined, (0, 2, 1)), 1, axis=1)

        assert check_op(build, p, seed=11) < TOLERANCE

    def test_corrupted_backward_is_detected(self):
        """Test halving one op's backward breaks the check"""
        rng = np.random.default_rng(21)
        p = params(x=rng.normal(size=(10, 12)))
        with corrupted_backward("gelu"):
            error = check_op(lambda: gelu(p["x"]), p, seed=12)
        assert error > 0.1
