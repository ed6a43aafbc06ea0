"""
Checkpoint Service
Binary model checkpoints: 8-byte little-endian header length, UTF-8 JSON
header, then little-endian float64 tensor data in manifest order.
"""

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from models.config import ModelConfig
from pydantic import ValidationError
from utils.log_context import get_run_logger
from utils.tensor import Parameter

from .fusion_model import FusionModel, parameter_shapes
from .model_exceptions import (
    BadMagicError,
    CheckpointIoError,
    CheckpointShapeMismatchError,
    VersionMismatchError,
)

logger = get_run_logger(__name__)

CHECKPOINT_FORMAT = "YLDM"
CHECKPOINT_VERSION = 1
_LENGTH = struct.Struct("<Q")
_DTYPE = np.dtype("<f8")


@dataclass
class LoadedCheckpoint:
    model: FusionModel
    metadata: dict[str, Any] = field(default_factory=dict)


def _header(model: FusionModel, metadata: dict[str, Any]) -> dict[str, Any]:
    tensors = []
    offset = 0
    for name, parameter in model.parameters.items():
        tensors.append(
            {"name": name, "shape": list(parameter.shape), "offset": offset}
        )
        offset += parameter.data.size * _DTYPE.itemsize
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": model.config.model_dump(mode="json"),
        "tensors": tensors,
        "metadata": metadata,
    }


def save_checkpoint(
    model: FusionModel,
    path: str | Path,
    metadata: dict[str, Any] | None = None,
) -> Path:
    """
    Write ``model`` (and JSON-serializable ``metadata``) atomically

    Raises:
        CheckpointIoError: target not writable
    """
    path = Path(path)
    header = json.dumps(
        _header(model, metadata or {}), sort_keys=True, separators=(",", ":")
    ).encode("utf-8")

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(
            dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"
        )
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(_LENGTH.pack(len(header)))
                handle.write(header)
                for parameter in model.parameters.values():
                    handle.write(parameter.data.astype(_DTYPE).tobytes())
            os.replace(tmp_name, path)
        except BaseException:
            Path(tmp_name).unlink(missing_ok=True)
            raise
    except OSError as e:
        raise CheckpointIoError(f"Cannot write checkpoint {path}: {e}") from e

    logger.info(f"Checkpoint written: {path} ({model.n_parameters} values)")
    return path


def _read_header(raw: bytes, path: Path) -> tuple[dict[str, Any], int]:
    if len(raw) < _LENGTH.size:
        raise BadMagicError(f"{path}: file too short for a checkpoint")
    (length,) = _LENGTH.unpack_from(raw)
    end = _LENGTH.size + length
    if end > len(raw):
        raise BadMagicError(f"{path}: header length exceeds file size")
    try:
        header = json.loads(raw[_LENGTH.size : end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise BadMagicError(f"{path}: header is not UTF-8 JSON") from e
    if (
        not isinstance(header, dict)
        or header.get("format") != CHECKPOINT_FORMAT
    ):
        raise BadMagicError(f"{path}: not a {CHECKPOINT_FORMAT} checkpoint")
    if header.get("version") != CHECKPOINT_VERSION:
        raise VersionMismatchError(
            f"{path}: version {header.get('version')} "
            f"(supported: {CHECKPOINT_VERSION})"
        )
    return header, end


def read_checkpoint(
    path: str | Path, expected_config: ModelConfig | None = None
) -> LoadedCheckpoint:
    """
    Load model and metadata; never returns a partially filled model

    Raises:
        CheckpointIoError: unreadable or truncated payload
        BadMagicError: not a checkpoint
        VersionMismatchError: unsupported format version
        CheckpointShapeMismatchError: tensors disagree with the stored or
            expected configuration
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise CheckpointIoError(f"Cannot read checkpoint {path}: {e}") from e

    header, payload_start = _read_header(raw, path)
    try:
        config = ModelConfig.model_validate(header["config"])
    except (KeyError, ValidationError) as e:
        raise BadMagicError(f"{path}: invalid model config in header") from e

    if expected_config is not None and expected_config != config:
        raise CheckpointShapeMismatchError(
            f"{path}: checkpoint config differs from the expected model"
        )

    expected_shapes = parameter_shapes(config)
    manifest = header.get("tensors", [])
    stored = {entry["name"]: entry for entry in manifest}
    if set(stored) != set(expected_shapes):
        raise CheckpointShapeMismatchError(
            f"{path}: tensor names do not match the model configuration"
        )

    payload = memoryview(raw)[payload_start:]
    parameters: dict[str, Parameter] = {}
    for name, shape in expected_shapes.items():
        entry = stored[name]
        if tuple(entry["shape"]) != shape:
            raise CheckpointShapeMismatchError(
                f"{path}: tensor '{name}' has shape {entry['shape']}, "
                f"expected {list(shape)}"
            )
        count = int(np.prod(shape))
        start = int(entry["offset"])
        stop = start + count * _DTYPE.itemsize
        if start < 0 or stop > len(payload):
            raise CheckpointIoError(f"{path}: truncated at tensor '{name}'")
        data = np.frombuffer(payload[start:stop], dtype=_DTYPE)
        parameters[name] = Parameter(name, data.reshape(shape))

    model = FusionModel(config=config, parameters=parameters)
    logger.info(f"Checkpoint loaded: {path}")
    return LoadedCheckpoint(model=model, metadata=header.get("metadata", {}))


def load_checkpoint(
    path: str | Path, expected_config: ModelConfig | None = None
) -> FusionModel:
    return read_checkpoint(path, expected_config).model
