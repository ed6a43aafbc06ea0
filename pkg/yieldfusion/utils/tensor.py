"""
Dense float64 tensors with define-by-run reverse-mode differentiation

Operations record a TapeNode on the active Tape (see ``Tape.recording``)
when at least one input is a Parameter or a tensor recorded on that tape.
Outside a recording block the same functions run as plain numpy forward
passes, which is what inference uses.
"""

import contextvars
from collections.abc import Callable, Iterable, Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any

import numpy as np

GELU_C = float(np.sqrt(2.0 / np.pi))
GELU_A = 0.044715
LAYER_NORM_EPS = 1e-5

Gradients = dict[str, np.ndarray]

_ACTIVE_TAPE: contextvars.ContextVar["Tape | None"] = contextvars.ContextVar(
    "active_tape", default=None
)
_CORRUPTED_OPS: set[str] = set()


class TensorError(Exception):
    """Base exception for tensor operations"""

    pass


class ShapeMismatchError(TensorError):
    """Operand shapes incompatible with the operation"""

    pass


class NonFiniteError(TensorError):
    """Operation produced NaN or infinity"""

    def __init__(self, op: str):
        self.op = op
        super().__init__(f"Non-finite values produced by '{op}'")


class NotScalarLossError(TensorError):
    """backward() called on a non-scalar tensor"""

    pass


class NondeterministicFunctionError(TensorError):
    """Two identical evaluations of a checked function differ"""

    pass


class Tensor:
    """Row-major float64 array, optionally recorded on a tape"""

    __slots__ = ("data", "_tape", "_node_id")

    def __init__(self, data: Any):
        self.data = np.asarray(data, dtype=np.float64)
        self._tape: Tape | None = None
        self._node_id: int | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape})"


class Parameter(Tensor):
    """Named leaf tensor whose gradient backward() reports"""

    __slots__ = ("name",)

    def __init__(self, name: str, data: Any):
        super().__init__(np.array(data, dtype=np.float64))
        self.name = name

    def __repr__(self) -> str:
        return f"Parameter({self.name}, shape={self.shape})"


@dataclass
class TapeNode:
    op: str
    inputs: tuple[int | None, ...]
    saved: dict[str, Any] = field(default_factory=dict)
    backward: Callable[[np.ndarray], tuple[np.ndarray | None, ...]] | None = (
        None
    )
    parameter: Parameter | None = None


class Tape:
    """Ordered record of the operations of one forward pass"""

    def __init__(self):
        self.nodes: list[TapeNode] = []
        self._leaf_ids: dict[int, int] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    @contextmanager
    def recording(self) -> Iterator["Tape"]:
        token = _ACTIVE_TAPE.set(self)
        try:
            yield self
        finally:
            _ACTIVE_TAPE.reset(token)

    def node_id(self, tensor: Tensor) -> int | None:
        if isinstance(tensor, Parameter):
            key = id(tensor)
            if key not in self._leaf_ids:
                self.nodes.append(
                    TapeNode(op="parameter", inputs=(), parameter=tensor)
                )
                self._leaf_ids[key] = len(self.nodes) - 1
            return self._leaf_ids[key]
        if tensor._tape is self:
            return tensor._node_id
        return None

    def append(self, node: TapeNode) -> int:
        self.nodes.append(node)
        return len(self.nodes) - 1

    def reset(self) -> None:
        self.nodes.clear()
        self._leaf_ids.clear()


@contextmanager
def corrupted_backward(op: str) -> Iterator[None]:
    """Halve the backward pass of one op (negative control for grad checks)"""
    _CORRUPTED_OPS.add(op)
    try:
        yield
    finally:
        _CORRUPTED_OPS.discard(op)


def _record(
    op: str,
    inputs: Sequence[Tensor],
    out: np.ndarray,
    backward: Callable[[np.ndarray], tuple[np.ndarray | None, ...]],
    **saved: Any,
) -> Tensor:
    if not np.all(np.isfinite(out)):
        raise NonFiniteError(op)
    result = Tensor(out)
    tape = _ACTIVE_TAPE.get()
    if tape is None:
        return result
    ids = tuple(tape.node_id(tensor) for tensor in inputs)
    if all(node_id is None for node_id in ids):
        return result
    result._tape = tape
    result._node_id = tape.append(
        TapeNode(op=op, inputs=ids, saved=saved, backward=backward)
    )
    return result


def _as_tensor(value: Tensor | np.ndarray | float) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back to the operand's shape"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError as e:
        raise ShapeMismatchError(f"{op}: {a.shape} vs {b.shape}") from e


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Batched matrix product over the last two dims"""
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeMismatchError(f"matmul: {a.shape} @ {b.shape}")
    try:
        out = np.matmul(a.data, b.data)
    except ValueError as e:
        raise ShapeMismatchError(f"matmul: {a.shape} @ {b.shape}") from e
    a_data, b_data = a.data, b.data

    def backward(grad):
        grad_a = np.matmul(grad, np.swapaxes(b_data, -1, -2))
        grad_b = np.matmul(np.swapaxes(a_data, -1, -2), grad)
        return (
            _unbroadcast(grad_a, a_data.shape),
            _unbroadcast(grad_b, b_data.shape),
        )

    return _record("matmul", (a, b), out, backward)


def add(a: Tensor, b: Tensor | np.ndarray | float) -> Tensor:
    """Elementwise sum, broadcasting over leading dims"""
    b = _as_tensor(b)
    _broadcast_shape("add", a, b)
    a_shape, b_shape = a.shape, b.shape

    def backward(grad):
        return _unbroadcast(grad, a_shape), _unbroadcast(grad, b_shape)

    return _record("add", (a, b), a.data + b.data, backward)


def mul(a: Tensor, b: Tensor | np.ndarray | float) -> Tensor:
    """Elementwise product, broadcasting over leading dims"""
    b = _as_tensor(b)
    _broadcast_shape("mul", a, b)
    a_data, b_data = a.data, b.data

    def backward(grad):
        return (
            _unbroadcast(grad * b_data, a_data.shape),
            _unbroadcast(grad * a_data, b_data.shape),
        )

    return _record("mul", (a, b), a_data * b_data, backward)


def relu(x: Tensor) -> Tensor:
    active = x.data > 0

    def backward(grad):
        return (grad * active,)

    return _record("relu", (x,), np.where(active, x.data, 0.0), backward)


def gelu(x: Tensor) -> Tensor:
    """GELU, tanh form"""
    data = x.data
    inner = GELU_C * (data + GELU_A * data**3)
    t = np.tanh(inner)
    out = 0.5 * data * (1.0 + t)

    def backward(grad):
        d_inner = GELU_C * (1.0 + 3.0 * GELU_A * data**2)
        local = 0.5 * (1.0 + t) + 0.5 * data * (1.0 - t**2) * d_inner
        return (grad * local,)

    return _record("gelu", (x,), out, backward)


def softmax(x: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """
    Softmax over the last dim

    ``mask`` (broadcastable to x, truthy = keep) gives masked entries an
    implicit -inf logit: they receive exactly zero probability and zero
    gradient. Every row must keep at least one entry.
    """
    data = x.data
    if mask is not None:
        keep = np.broadcast_to(np.asarray(mask, dtype=bool), data.shape)
        if not np.all(keep.any(axis=-1)):
            raise ShapeMismatchError("softmax: a row is fully masked")
        logits = np.where(keep, data, -np.inf)
    else:
        logits = data
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    out = exp / exp.sum(axis=-1, keepdims=True)

    def backward(grad):
        inner = (grad * out).sum(axis=-1, keepdims=True)
        return (out * (grad - inner),)

    return _record("softmax", (x,), out, backward)


def layer_norm(
    x: Tensor, gain: Tensor, bias: Tensor, eps: float = LAYER_NORM_EPS
) -> Tensor:
    """Normalize the last dim to zero mean / unit variance, then affine"""
    width = x.shape[-1]
    if gain.shape != (width,) or bias.shape != (width,):
        raise ShapeMismatchError(
            f"layer_norm: x {x.shape}, gain {gain.shape}, bias {bias.shape}"
        )
    mean = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mean
    inv_std = 1.0 / np.sqrt((centered**2).mean(axis=-1, keepdims=True) + eps)
    normalized = centered * inv_std
    gain_data = gain.data
    out = normalized * gain_data + bias.data

    def backward(grad):
        grad_gain = (grad * normalized).reshape(-1, width).sum(axis=0)
        grad_bias = grad.reshape(-1, width).sum(axis=0)
        grad_norm = grad * gain_data
        grad_x = inv_std * (
            grad_norm
            - grad_norm.mean(axis=-1, keepdims=True)
            - normalized
            * (grad_norm * normalized).mean(axis=-1, keepdims=True)
        )
        return grad_x, grad_gain, grad_bias

    return _record("layer_norm", (x, gain, bias), out, backward)


def embedding_lookup(table: Tensor, ids: np.ndarray) -> Tensor:
    """Rows of ``table`` gathered by integer ``ids`` (any shape)"""
    ids = np.asarray(ids)
    if table.ndim != 2:
        raise ShapeMismatchError(f"embedding table must be 2-D: {table.shape}")
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ShapeMismatchError(
            f"embedding ids outside [0, {table.shape[0]})"
        )
    rows = table.shape

    def backward(grad):
        grad_table = np.zeros(rows)
        np.add.at(grad_table, ids, grad)
        return (grad_table,)

    return _record("embedding", (table,), table.data[ids], backward)


def dropout(
    x: Tensor,
    rate: float,
    train: bool,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Inverted dropout; identity when not training or rate is 0"""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1): {rate}")
    if not train or rate == 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs an rng")
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)

    def backward(grad):
        return (grad * keep,)

    return _record("dropout", (x,), x.data * keep, backward)


def mse_loss(pred: Tensor, target: Tensor | np.ndarray) -> Tensor:
    """Mean squared error as a 0-d tensor"""
    target = _as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeMismatchError(f"mse_loss: {pred.shape} vs {target.shape}")
    diff = pred.data - target.data
    count = max(diff.size, 1)

    def backward(grad):
        local = grad * 2.0 * diff / count
        return local, -local

    return _record("mse_loss", (pred, target), np.mean(diff**2), backward)


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    original = x.shape
    try:
        out = x.data.reshape(shape)
    except ValueError as e:
        raise ShapeMismatchError(f"reshape: {original} -> {shape}") from e

    def backward(grad):
        return (grad.reshape(original),)

    return _record("reshape", (x,), out, backward)


def transpose(x: Tensor, axes: tuple[int, ...]) -> Tensor:
    inverse = tuple(np.argsort(axes))

    def backward(grad):
        return (np.transpose(grad, inverse),)

    return _record("transpose", (x,), np.transpose(x.data, axes), backward)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    try:
        out = np.concatenate([tensor.data for tensor in tensors], axis=axis)
    except ValueError as e:
        shapes = [tensor.shape for tensor in tensors]
        raise ShapeMismatchError(f"concat: {shapes}") from e
    bounds = np.cumsum([tensor.shape[axis] for tensor in tensors])[:-1]

    def backward(grad):
        return tuple(np.split(grad, bounds, axis=axis))

    return _record("concat", tuple(tensors), out, backward)


def select(x: Tensor, index: int, axis: int) -> Tensor:
    """Slice one position along ``axis`` (dropping that axis)"""
    shape = x.shape

    def backward(grad):
        full = np.zeros(shape)
        slicer = [slice(None)] * len(shape)
        slicer[axis] = index
        full[tuple(slicer)] = grad
        return (full,)

    return _record("select", (x,), np.take(x.data, index, axis=axis), backward)


def backward(
    loss: Tensor, parameters: Iterable[Parameter] | None = None
) -> Gradients:
    """
    Gradients of a scalar loss w.r.t. every parameter used to compute it

    Parameters passed explicitly but not reached by the loss get zero
    gradients. The tape is reset afterwards.
    """
    if loss.data.size != 1:
        raise NotScalarLossError(f"loss must be scalar, got {loss.shape}")

    gradients: Gradients = {}
    tape = loss._tape
    if tape is not None and loss._node_id is not None:
        node_grads: list[np.ndarray | None] = [None] * len(tape.nodes)
        node_grads[loss._node_id] = np.ones_like(loss.data)

        for node_id in range(loss._node_id, -1, -1):
            grad = node_grads[node_id]
            if grad is None:
                continue
            node = tape.nodes[node_id]
            if node.parameter is not None:
                gradients[node.parameter.name] = grad
                continue
            input_grads = node.backward(grad)
            if node.op in _CORRUPTED_OPS:
                input_grads = tuple(
                    None if g is None else 0.5 * g for g in input_grads
                )
            for input_id, input_grad in zip(
                node.inputs, input_grads, strict=True
            ):
                if input_id is None or input_grad is None:
                    continue
                if node_grads[input_id] is None:
                    node_grads[input_id] = input_grad
                else:
                    node_grads[input_id] = node_grads[input_id] + input_grad
        tape.reset()

    for parameter in parameters or ():
        if parameter.name not in gradients:
            gradients[parameter.name] = np.zeros_like(parameter.data)
    return gradients


def dropout_rng(seed: int, step: int, layer: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, step, layer)"""
    sequence = np.random.SeedSequence([seed, step, layer])
    return np.random.Generator(np.random.Philox(sequence))
