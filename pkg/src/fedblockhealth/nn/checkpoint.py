"""Binary model checkpoints.

Layout::

    b"FBH1"
    u32 little-endian   length of the layer-spec table
    UTF-8 JSON          {"input_shape": [...], "layers": [spec, ...]}
    float64 LE payload  trainable parameters then buffers, flatten order
"""
from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from ..errors import FormatError
from .layers import layer_from_spec
from .model import Model

MAGIC = b"FBH1"


def dumps_checkpoint(model: Model) -> bytes:
    table = json.dumps({"input_shape": list(model.input_shape), "layers": model.specs()},
                       sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = model.get_state().astype("<f8").tobytes()
    return MAGIC + struct.pack("<I", len(table)) + table + payload


def loads_checkpoint(data: bytes) -> Model:
    if data[:4] != MAGIC:
        raise FormatError("field 'magic': not an FBH1 checkpoint")
    if len(data) < 8:
        raise FormatError("field 'table_length': truncated header")
    (n,) = struct.unpack("<I", data[4:8])
    try:
        table = json.loads(data[8:8 + n].decode("utf-8"))
        model = Model([layer_from_spec(s) for s in table["layers"]], table["input_shape"])
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"field 'layers': {exc}") from None
    payload = data[8 + n:]
    expected = model.get_state().size * 8
    if len(payload) != expected:
        raise FormatError(f"field 'payload': {len(payload)} bytes, expected {expected}")
    model.set_state(np.frombuffer(payload, dtype="<f8").astype(np.float64))
    return model


def save_checkpoint(path, model: Model) -> str:
    """Write a checkpoint and return its SHA-256 hex digest."""
    data = dumps_checkpoint(model)
    with open(path, "wb") as fh:
        fh.write(data)
    return hashlib.sha256(data).hexdigest()


def load_checkpoint(path) -> Model:
    with open(path, "rb") as fh:
        return loads_checkpoint(fh.read())
