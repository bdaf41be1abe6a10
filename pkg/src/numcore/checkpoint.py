"""Versioned binary checkpoints.

Layout::

    b"TVDM"                      magic
    u32 little-endian            format version
    u32 little-endian            header length in bytes
    header                       UTF-8 JSON (CheckpointHeader)
    payload                      little-endian float32 tensors, back to back

The header is written with sorted keys and no timestamps, so identical
training runs produce byte-identical files.
"""

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import CheckpointFormatError
from .schemas import CheckpointHeader, CheckpointMetadata, TensorIndexEntry

MAGIC = b"TVDM"
FORMAT_VERSION = 1
_PAYLOAD_DTYPE = np.dtype("<f4")


@dataclass
class Checkpoint:
    """Named tensors plus training metadata."""

    metadata: CheckpointMetadata
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def subset(self, prefix: str) -> dict[str, np.ndarray]:
        """Tensors under ``prefix`` with the prefix stripped."""
        return {
            name[len(prefix):]: arr for name, arr in self.tensors.items() if name.startswith(prefix)
        }


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    entries: list[TensorIndexEntry] = []
    chunks: list[bytes] = []
    offset = 0
    for name in sorted(ckpt.tensors):
        arr = np.ascontiguousarray(ckpt.tensors[name], dtype=_PAYLOAD_DTYPE)
        raw = arr.tobytes()
        entries.append(
            TensorIndexEntry(name=name, shape=list(arr.shape), offset=offset, nbytes=len(raw))
        )
        chunks.append(raw)
        offset += len(raw)

    header = CheckpointHeader(tensors=entries, metadata=ckpt.metadata)
    header_bytes = json.dumps(
        header.model_dump(mode="json"), sort_keys=True, separators=(",", ":")
    ).encode("utf-8")
    prefix = MAGIC + struct.pack("<II", FORMAT_VERSION, len(header_bytes))
    return prefix + header_bytes + b"".join(chunks)


def decode_checkpoint(raw: bytes, source: str = "<bytes>") -> Checkpoint:
    """
    Parse checkpoint bytes.

    Raises:
        CheckpointFormatError: Bad magic, unknown version, or truncated payload
    """
    if len(raw) < 12 or raw[:4] != MAGIC:
        raise CheckpointFormatError(source, "missing TVDM magic")
    version, header_len = struct.unpack("<II", raw[4:12])
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(source, f"unsupported format version {version}")
    header_end = 12 + header_len
    try:
        header = CheckpointHeader.model_validate_json(raw[12:header_end])
    except ValueError as exc:
        raise CheckpointFormatError(source, f"unreadable header: {exc}") from exc

    payload = memoryview(raw)[header_end:]
    tensors: dict[str, np.ndarray] = {}
    for entry in header.tensors:
        end = entry.offset + entry.nbytes
        if end > len(payload):
            raise CheckpointFormatError(source, f"payload truncated at '{entry.name}'")
        arr = np.frombuffer(payload[entry.offset:end], dtype=_PAYLOAD_DTYPE)
        tensors[entry.name] = arr.reshape(entry.shape).astype(np.float32)
    return Checkpoint(metadata=header.metadata, tensors=tensors)


def save_checkpoint(path: Path, ckpt: Checkpoint) -> str:
    """
    Write a checkpoint atomically (temp file + rename).

    Returns:
        SHA-256 hex digest of the written bytes
    """
    raw = encode_checkpoint(ckpt)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(raw)
    tmp.replace(path)
    return hashlib.sha256(raw).hexdigest()


def load_checkpoint(path: Path) -> Checkpoint:
    if not path.exists():
        raise CheckpointFormatError(str(path), "file not found")
    return decode_checkpoint(path.read_bytes(), source=str(path))


def checkpoint_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()
