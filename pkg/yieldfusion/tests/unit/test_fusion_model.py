"""
Unit tests for the fusion model
"""

import numpy as np
import pytest
from models.config import ModelConfig
from services.fusion_model import (
    clamp_yield,
    encode_sequence,
    forward,
    init_model,
    mlp_forward,
    parameter_shapes,
    predict,
    predict_batch,
)
from services.model_exceptions import (
    ChannelLengthMismatchError,
    InvalidConfigError,
)
from services.smiles_service import CLS_ID, PAD_ID, EncodedSequence

pytestmark = pytest.mark.unit

MAX_LEN = 12
DESCRIPTOR_DIM = 6


def tiny_config(**overrides) -> ModelConfig:
    values = {
        "d_model": 8,
        "n_heads": 2,
        "n_layers": 2,
        "ff_dim": 16,
        "max_len": MAX_LEN,
        "vocab_size": 10,
        "mlp_hidden": [8, 4],
        "descriptor_dim": DESCRIPTOR_DIM,
        "dropout_rate": 0.2,
        **overrides,
    }
    return ModelConfig(**values)


def encoded(tokens: list[int], pad_id: int = PAD_ID) -> EncodedSequence:
    length = len(tokens) + 1
    ids = np.full(MAX_LEN, pad_id, dtype=np.int64)
    ids[0] = CLS_ID
    ids[1:length] = tokens
    mask = np.zeros(MAX_LEN, dtype=np.int64)
    mask[:length] = 1
    return EncodedSequence(ids=ids, attention_mask=mask)


@pytest.fixture
def model():
    return init_model(tiny_config(), seed=11)


@pytest.fixture
def descriptors():
    return np.random.default_rng(4).normal(size=DESCRIPTOR_DIM)


class TestInitModel:
    """Test cases for init_model"""

    def test_deterministic(self):
        """Test same config and seed give identical parameters"""
        first = init_model(tiny_config(), seed=5).state()
        second = init_model(tiny_config(), seed=5).state()
        assert first.keys() == second.keys()
        for name in first:
            assert np.array_equal(first[name], second[name])

    def test_seed_changes_weights(self):
        """Test different seeds give different weights"""
        first = init_model(tiny_config(), seed=5)
        second = init_model(tiny_config(), seed=6)
        assert not np.array_equal(
            first["embed.token"].data, second["embed.token"].data
        )

    def test_init_ranges(self, model):
        """Test truncation, zero biases and unit gains"""
        for name, parameter in model.parameters.items():
            if name.endswith(".gain"):
                assert np.all(parameter.data == 1.0)
            elif parameter.data.ndim == 1:
                assert not parameter.data.any()
            else:
                assert np.all(np.abs(parameter.data) <= 0.04)

    def test_heads_must_divide_width(self):
        """Test d_model not divisible by n_heads"""
        with pytest.raises(InvalidConfigError):
            init_model(tiny_config(d_model=6, n_heads=4), seed=0)

    def test_shapes_per_modality(self):
        """Test each modality only creates its own channel"""
        smiles_only = parameter_shapes(tiny_config(modality="smiles"))
        descriptors_only = parameter_shapes(
            tiny_config(modality="descriptors")
        )
        fused = parameter_shapes(tiny_config())

        assert not any(name.startswith("mlp.") for name in smiles_only)
        assert not any(name.startswith("embed.") for name in descriptors_only)
        assert smiles_only["head.weight"] == (8, 1)
        assert descriptors_only["head.weight"] == (4, 1)
        assert fused["head.weight"] == (12, 1)
        assert fused["mlp.0.weight"] == (DESCRIPTOR_DIM, 8)
        assert fused["encoder.1.ff.w1"] == (8, 16)


class TestEncodeSequence:
    """Test cases for the SMILES encoder"""

    def test_output_shape(self, model):
        """Test the pooled CLS vector has d_model entries"""
        assert encode_sequence(model, encoded([3, 4, 5])).shape == (8,)

    def test_masked_positions_are_inert(self, model):
        """Test ids at padded positions never reach the CLS output"""
        base = encode_sequence(model, encoded([3, 4, 5]))
        noisy = encode_sequence(model, encoded([3, 4, 5], pad_id=7))
        assert np.allclose(base, noisy, rtol=0.0, atol=1e-12)

    def test_cls_only(self, model):
        """Test a CLS-only input ignores every other position"""
        base = encode_sequence(model, encoded([]))
        noisy = encode_sequence(model, encoded([], pad_id=9))
        assert np.allclose(base, noisy, rtol=0.0, atol=1e-12)

    def test_tokens_change_output(self, model):
        """Test unmasked tokens do reach the CLS output"""
        first = encode_sequence(model, encoded([3, 4, 5]))
        second = encode_sequence(model, encoded([3, 4, 6]))
        assert not np.allclose(first, second)

    def test_length_mismatch(self, model):
        """Test encoded length must equal max_len"""
        short = EncodedSequence(
            ids=np.array([CLS_ID, 3]), attention_mask=np.array([1, 1])
        )
        with pytest.raises(ChannelLengthMismatchError):
            encode_sequence(model, short)

    def test_descriptor_only_model(self):
        """Test a model without a SMILES channel"""
        model = init_model(tiny_config(modality="descriptors"), seed=0)
        with pytest.raises(InvalidConfigError):
            encode_sequence(model, encoded([3]))


class TestMlpForward:
    """Test cases for the descriptor MLP"""

    def test_output_shape(self, model, descriptors):
        """Test the hidden vector has mlp_hidden[-1] entries"""
        assert mlp_forward(model, descriptors).shape == (4,)

    def test_zero_weights(self, model, descriptors):
        """Test zero weights and biases give a zero output"""
        for name, parameter in model.parameters.items():
            if name.startswith("mlp."):
                parameter.data[...] = 0.0
        assert not mlp_forward(model, descriptors).any()

    def test_identity_layer(self):
        """Test an identity weight passes positive inputs through"""
        model = init_model(
            tiny_config(mlp_hidden=[4], descriptor_dim=4), seed=0
        )
        model["mlp.0.weight"].data[...] = np.eye(4)
        values = np.array([0.5, 1.0, 2.0, 3.5])
        assert np.array_equal(mlp_forward(model, values), values)

    def test_width_mismatch(self, model):
        """Test descriptor width must equal descriptor_dim"""
        with pytest.raises(ChannelLengthMismatchError):
            mlp_forward(model, np.ones(DESCRIPTOR_DIM + 1))


class TestPredict:
    """Test cases for predict and the clamped view"""

    def test_zero_head(self, model, descriptors):
        """Test zero head weight returns the head bias"""
        model["head.weight"].data[...] = 0.0
        model["head.bias"].data[...] = 0.37
        assert predict(model, encoded([3, 4]), descriptors) == 0.37
        assert predict(model, encoded([5]), -descriptors) == 0.37

    def test_deterministic(self, model, descriptors):
        """Test inference is repeatable"""
        enc = encoded([3, 4, 5])
        assert predict(model, enc, descriptors) == predict(
            model, enc, descriptors
        )

    def test_batch_matches_single(self, model, descriptors):
        """Test chunked batch prediction agrees with single predictions"""
        encs = [encoded([3]), encoded([4, 5]), encoded([6, 7, 8])]
        matrix = np.stack([descriptors, descriptors * 2, -descriptors])
        batch = predict_batch(
            model,
            np.stack([e.ids for e in encs]),
            np.stack([e.attention_mask for e in encs]),
            matrix,
            batch_size=2,
        )
        singles = [
            predict(model, enc, row)
            for enc, row in zip(encs, matrix, strict=True)
        ]
        assert np.allclose(batch, singles, rtol=0.0, atol=1e-12)

    def test_descriptor_width_checked(self, model):
        """Test a wrong descriptor width"""
        with pytest.raises(ChannelLengthMismatchError):
            predict(model, encoded([3]), np.ones(3))

    @pytest.mark.parametrize(
        "raw,clamped", [(-0.07, 0.0), (0.42, 0.42), (1.3, 1.0)]
    )
    def test_clamp(self, raw, clamped):
        """Test the reporting view clips to [0, 1]"""
        assert clamp_yield(raw) == clamped


class TestDropout:
    """Test cases for training-mode forward passes"""

    def test_dropout_keyed_by_step(self, model, descriptors):
        """Test dropout masks repeat per (seed, step) and differ by step"""
        enc = encoded([3, 4, 5, 6])
        args = (
            model,
            enc.ids[None, :],
            enc.attention_mask[None, :],
            descriptors[None, :],
        )
        first = forward(*args, train=True, seed=1, step=0).data
        again = forward(*args, train=True, seed=1, step=0).data
        other = forward(*args, train=True, seed=1, step=1).data
        assert np.array_equal(first, again)
        assert not np.array_equal(first, other)

    def test_zero_rate_matches_inference(self, model, descriptors):
        """Test train mode with rate 0 equals eval mode"""
        enc = encoded([3, 4])
        args = (
            model,
            enc.ids[None, :],
            enc.attention_mask[None, :],
            descriptors[None, :],
        )
        trained = forward(*args, train=True, dropout_rate=0.0).data
        assert np.array_equal(trained, forward(*args).data)


class TestModelState:
    """Test cases for state copies"""

    def test_copy_is_independent(self, model):
        """Test editing a copy leaves the original alone"""
        clone = model.copy()
        clone["head.bias"].data[...] = 5.0
        assert model["head.bias"].data[0] == 0.0

    def test_load_state(self, model):
        """Test state snapshots restore parameters"""
        snapshot = model.state()
        model["head.bias"].data[...] = 2.0
        model.load_state(snapshot)
        assert model["head.bias"].data[0] == 0.0
        assert model.n_parameters == sum(v.size for v in snapshot.values())
