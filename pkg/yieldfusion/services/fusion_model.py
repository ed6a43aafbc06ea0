"""
Fusion Model
Transformer encoder over the reaction SMILES channel, MLP over the
descriptor channel, concatenation and a linear regression head.
"""

from dataclasses import dataclass

import numpy as np
from models.config import ModelConfig
from utils.tensor import (
    Parameter,
    Tensor,
    add,
    concat,
    dropout,
    dropout_rng,
    embedding_lookup,
    gelu,
    layer_norm,
    matmul,
    mul,
    relu,
    reshape,
    select,
    softmax,
    transpose,
)

from .model_exceptions import ChannelLengthMismatchError, InvalidConfigError
from .smiles_service import EncodedSequence

INIT_STD = 0.02
INIT_TRUNCATION = 2.0


@dataclass
class FusionModel:
    """Model configuration plus named parameters in creation order"""

    config: ModelConfig
    parameters: dict[str, Parameter]

    def __getitem__(self, name: str) -> Parameter:
        return self.parameters[name]

    def state(self) -> dict[str, np.ndarray]:
        """Copy of every parameter array"""
        return {name: p.data.copy() for name, p in self.parameters.items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for name, parameter in self.parameters.items():
            parameter.data[...] = state[name]

    def copy(self) -> "FusionModel":
        return FusionModel(
            config=self.config,
            parameters={
                name: Parameter(name, p.data)
                for name, p in self.parameters.items()
            },
        )

    @property
    def n_parameters(self) -> int:
        return sum(p.data.size for p in self.parameters.values())


def parameter_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Names and shapes of every parameter, in creation order"""
    shapes: dict[str, tuple[int, ...]] = {}
    d = config.d_model

    if config.uses_smiles:
        shapes["embed.token"] = (config.vocab_size, d)
        shapes["embed.position"] = (config.max_len, d)
        for i in range(config.n_layers):
            prefix = f"encoder.{i}"
            for name in ("q", "k", "v", "o"):
                shapes[f"{prefix}.attn.w{name}"] = (d, d)
                shapes[f"{prefix}.attn.b{name}"] = (d,)
            shapes[f"{prefix}.ln1.gain"] = (d,)
            shapes[f"{prefix}.ln1.bias"] = (d,)
            shapes[f"{prefix}.ff.w1"] = (d, config.ff_dim)
            shapes[f"{prefix}.ff.b1"] = (config.ff_dim,)
            shapes[f"{prefix}.ff.w2"] = (config.ff_dim, d)
            shapes[f"{prefix}.ff.b2"] = (d,)
            shapes[f"{prefix}.ln2.gain"] = (d,)
            shapes[f"{prefix}.ln2.bias"] = (d,)

    if config.uses_descriptors:
        width = config.descriptor_dim
        for j, hidden in enumerate(config.mlp_hidden):
            shapes[f"mlp.{j}.weight"] = (width, hidden)
            shapes[f"mlp.{j}.bias"] = (hidden,)
            width = hidden

    shapes["head.weight"] = (config.fusion_dim, 1)
    shapes["head.bias"] = (1,)
    return shapes


def _truncated_normal(
    rng: np.random.Generator, shape: tuple[int, ...]
) -> np.ndarray:
    values = rng.standard_normal(shape)
    outside = np.abs(values) > INIT_TRUNCATION
    while outside.any():
        values[outside] = rng.standard_normal(int(outside.sum()))
        outside = np.abs(values) > INIT_TRUNCATION
    return values * INIT_STD


def init_model(config: ModelConfig, seed: int) -> FusionModel:
    """
    Fresh model: weights N(0, 0.02) truncated at 2 sigma, biases 0,
    layer-norm gains 1. Deterministic per (config, seed).

    Raises:
        InvalidConfigError: d_model not divisible by n_heads
    """
    if config.d_model % config.n_heads != 0:
        raise InvalidConfigError(
            f"d_model {config.d_model} is not divisible by "
            f"n_heads {config.n_heads}"
        )

    rng = np.random.default_rng(seed)
    parameters: dict[str, Parameter] = {}
    for name, shape in parameter_shapes(config).items():
        if name.endswith(".gain"):
            data = np.ones(shape)
        elif len(shape) == 1:
            data = np.zeros(shape)
        else:
            data = _truncated_normal(rng, shape)
        parameters[name] = Parameter(name, data)
    return FusionModel(config=config, parameters=parameters)


class _DropoutSites:
    """Hands out one counter-based generator per dropout call site"""

    def __init__(self, train: bool, rate: float, seed: int, step: int):
        self.train = train and rate > 0.0
        self.rate = rate
        self.seed = seed
        self.step = step
        self.layer = 0

    def apply(self, x: Tensor) -> Tensor:
        if not self.train:
            return x
        rng = dropout_rng(self.seed, self.step, self.layer)
        self.layer += 1
        return dropout(x, self.rate, True, rng)


def _affine(x: Tensor, weight: Parameter, bias: Parameter) -> Tensor:
    return add(matmul(x, weight), bias)


def _attention(
    model: FusionModel,
    prefix: str,
    x: Tensor,
    key_mask: np.ndarray,
    sites: _DropoutSites,
) -> Tensor:
    batch, length, d = x.shape
    heads = model.config.n_heads
    head_dim = d // heads

    def split_heads(t: Tensor) -> Tensor:
        split = reshape(t, (batch, length, heads, head_dim))
        return transpose(split, (0, 2, 1, 3))

    q = split_heads(_affine(x, model[f"{prefix}.wq"], model[f"{prefix}.bq"]))
    k = split_heads(_affine(x, model[f"{prefix}.wk"], model[f"{prefix}.bk"]))
    v = split_heads(_affine(x, model[f"{prefix}.wv"], model[f"{prefix}.bv"]))

    scores = mul(
        matmul(q, transpose(k, (0, 1, 3, 2))), 1.0 / np.sqrt(head_dim)
    )
    weights = sites.apply(softmax(scores, key_mask[:, None, None, :]))
    context = transpose(matmul(weights, v), (0, 2, 1, 3))
    merged = reshape(context, (batch, length, d))
    return _affine(merged, model[f"{prefix}.wo"], model[f"{prefix}.bo"])


def encode_batch(
    model: FusionModel,
    ids: np.ndarray,
    attention_mask: np.ndarray,
    sites: _DropoutSites | None = None,
) -> Tensor:
    """(batch, max_len) token ids -> (batch, d_model) CLS outputs"""
    config = model.config
    if ids.ndim != 2 or ids.shape[1] != config.max_len:
        raise ChannelLengthMismatchError(
            f"Encoded length {ids.shape[-1]} != max_len {config.max_len}"
        )
    if ids.shape != attention_mask.shape:
        raise ChannelLengthMismatchError("ids and attention mask differ")
    sites = sites or _DropoutSites(False, 0.0, 0, 0)
    key_mask = attention_mask.astype(bool)

    positions = embedding_lookup(
        model["embed.position"], np.arange(config.max_len)
    )
    x = add(embedding_lookup(model["embed.token"], ids), positions)
    x = sites.apply(x)

    for i in range(config.n_layers):
        prefix = f"encoder.{i}"
        attended = sites.apply(
            _attention(model, f"{prefix}.attn", x, key_mask, sites)
        )
        x = layer_norm(
            add(x, attended),
            model[f"{prefix}.ln1.gain"],
            model[f"{prefix}.ln1.bias"],
        )
        hidden = gelu(
            _affine(x, model[f"{prefix}.ff.w1"], model[f"{prefix}.ff.b1"])
        )
        projected = sites.apply(
            _affine(hidden, model[f"{prefix}.ff.w2"], model[f"{prefix}.ff.b2"])
        )
        x = layer_norm(
            add(x, projected),
            model[f"{prefix}.ln2.gain"],
            model[f"{prefix}.ln2.bias"],
        )

    return select(x, 0, axis=1)


def mlp_batch(
    model: FusionModel,
    descriptors: np.ndarray,
    sites: _DropoutSites | None = None,
) -> Tensor:
    """(batch, descriptor_dim) -> (batch, mlp_hidden[-1])"""
    config = model.config
    if descriptors.ndim != 2 or descriptors.shape[1] != config.descriptor_dim:
        raise ChannelLengthMismatchError(
            f"Descriptor width {descriptors.shape[-1]} != "
            f"descriptor_dim {config.descriptor_dim}"
        )
    sites = sites or _DropoutSites(False, 0.0, 0, 0)
    h = Tensor(descriptors)
    for j in range(len(config.mlp_hidden)):
        h = relu(_affine(h, model[f"mlp.{j}.weight"], model[f"mlp.{j}.bias"]))
        h = sites.apply(h)
    return h


def forward(
    model: FusionModel,
    ids: np.ndarray,
    attention_mask: np.ndarray,
    descriptors: np.ndarray,
    *,
    train: bool = False,
    seed: int = 0,
    step: int = 0,
    dropout_rate: float | None = None,
) -> Tensor:
    """
    Raw (unclamped) yield predictions for a batch, shape (batch,)

    Dropout is active only when ``train`` is set; its masks are keyed by
    (seed, step, call site). ``dropout_rate`` overrides the configured rate.
    """
    config = model.config
    rate = config.dropout_rate if dropout_rate is None else dropout_rate
    sites = _DropoutSites(train, rate, seed, step)
    channels = []
    if config.uses_smiles:
        channels.append(encode_batch(model, ids, attention_mask, sites))
    if config.uses_descriptors:
        channels.append(mlp_batch(model, descriptors, sites))
    if len(channels) > 1 and channels[0].shape[0] != channels[1].shape[0]:
        raise ChannelLengthMismatchError("Channel batch sizes differ")

    fused = concat(channels, axis=-1) if len(channels) > 1 else channels[0]
    out = _affine(fused, model["head.weight"], model["head.bias"])
    return reshape(out, (out.shape[0],))


def encode_sequence(model: FusionModel, enc: EncodedSequence) -> np.ndarray:
    """Pooled CLS vector (d_model) for one encoded reaction"""
    if not model.config.uses_smiles:
        raise InvalidConfigError("Model has no SMILES channel")
    if len(enc.ids) != model.config.max_len:
        raise ChannelLengthMismatchError(
            f"Encoded length {len(enc.ids)} != max_len {model.config.max_len}"
        )
    pooled = encode_batch(model, enc.ids[None, :], enc.attention_mask[None, :])
    return pooled.data[0]


def mlp_forward(model: FusionModel, descriptors: np.ndarray) -> np.ndarray:
    """Hidden vector (mlp_hidden[-1]) for one normalized descriptor vector"""
    if not model.config.uses_descriptors:
        raise InvalidConfigError("Model has no descriptor channel")
    descriptors = np.asarray(descriptors, dtype=np.float64)
    if descriptors.shape != (model.config.descriptor_dim,):
        raise ChannelLengthMismatchError(
            f"Descriptor length {descriptors.shape} != "
            f"({model.config.descriptor_dim},)"
        )
    return mlp_batch(model, descriptors[None, :]).data[0]


def predict(
    model: FusionModel, enc: EncodedSequence, descriptors: np.ndarray
) -> float:
    """Raw yield fraction for one reaction (dropout off)"""
    if len(enc.ids) != model.config.max_len:
        raise ChannelLengthMismatchError(
            f"Encoded length {len(enc.ids)} != max_len {model.config.max_len}"
        )
    descriptors = np.asarray(descriptors, dtype=np.float64)
    if descriptors.shape != (model.config.descriptor_dim,):
        raise ChannelLengthMismatchError(
            f"Descriptor length {descriptors.shape} != "
            f"({model.config.descriptor_dim},)"
        )
    out = forward(
        model,
        enc.ids[None, :],
        enc.attention_mask[None, :],
        descriptors[None, :],
    )
    return float(out.data[0])


def predict_batch(
    model: FusionModel,
    ids: np.ndarray,
    attention_mask: np.ndarray,
    descriptors: np.ndarray,
    batch_size: int = 256,
) -> np.ndarray:
    """Raw predictions for many reactions, evaluated in chunks"""
    outputs = [
        forward(
            model,
            ids[start : start + batch_size],
            attention_mask[start : start + batch_size],
            descriptors[start : start + batch_size],
        ).data
        for start in range(0, len(ids), batch_size)
    ]
    return np.concatenate(outputs) if outputs else np.zeros(0)


def clamp_yield(value):
    """Reporting view of raw predictions: clipped to [0, 1]"""
    return np.clip(value, 0.0, 1.0)
