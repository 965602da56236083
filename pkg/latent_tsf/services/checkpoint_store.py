#!/usr/bin/env python3
"""
Checkpoint Store - versioned binary container for AutoEncoder and backbone parameters

Layout (all integers little-endian):
    8 bytes   magic b"LTSFCKPT"
    uint32    format version (1)
    uint32    header length in bytes
    header    UTF-8 JSON: kind, sections -> ordered parameter specs
              {name, shape, offset, count}, metadata, payload_sha256, payload_count
    payload   float64 '<f8' blocks in header order, offsets in elements
"""

import hashlib
import json
import logging
import os
import struct
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from latent_tsf.services.layers import TensorF
from latent_tsf.utils.errors import CheckpointError

logger = logging.getLogger(__name__)

MAGIC = b"LTSFCKPT"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sII")
MAX_BACKUPS = 5


def _backup_existing(path: Path) -> Path:
    """Rename path to <path>.backup.<YYYYmmddTHHMMSSffffff>[-NNN] and prune to the newest MAX_BACKUPS."""
    stamp = datetime.now().strftime("%Y%m%dT%H%M%S%f")
    base = f"{path.name}.backup.{stamp}"
    same_stamp = sorted(p.name for p in path.parent.glob(f"{base}*"))
    if not same_stamp:
        backup = path.with_name(base)
    else:
        # suffixes only grow, so a pruned name is never reused
        last_suffix = same_stamp[-1][len(base) + 1:]
        backup = path.with_name(f"{base}-{int(last_suffix or 0) + 1:03d}")
    os.rename(path, backup)
    logger.info(f"📄 Created backup: {backup}")

    backups = sorted(path.parent.glob(f"{path.name}.backup.*"))
    for stale in backups[:-MAX_BACKUPS]:
        stale.unlink()
        logger.debug(f"🧹 Removed old backup: {stale}")
    return backup


@dataclass
class Checkpoint:
    """Named parameter sections plus free-form JSON metadata."""

    kind: str
    sections: Dict[str, Dict[str, TensorF]] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def section(self, name: str) -> Dict[str, TensorF]:
        if name not in self.sections:
            raise CheckpointError(
                f"Checkpoint of kind '{self.kind}' has no section '{name}' (sections: {sorted(self.sections)})"
            )
        return self.sections[name]


def save_checkpoint(path: Path, checkpoint: Checkpoint) -> Path:
    """
    Write a checkpoint; an existing file is kept as <path>.backup.<timestamp>
    and only the newest MAX_BACKUPS backups survive.

    Returns:
        The written path
    """
    path = Path(path)
    specs: Dict[str, list] = {}
    blocks = []
    offset = 0
    for section_name, params in checkpoint.sections.items():
        specs[section_name] = []
        for name, value in params.items():
            block = np.ascontiguousarray(value, dtype="<f8")
            specs[section_name].append({
                "name": name,
                "shape": list(block.shape),
                "offset": offset,
                "count": int(block.size),
            })
            blocks.append(block.ravel())
            offset += block.size

    payload = np.concatenate(blocks).tobytes() if blocks else b""
    header = {
        "kind": checkpoint.kind,
        "sections": specs,
        "metadata": checkpoint.metadata,
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
        "payload_count": offset,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if path.exists():
            _backup_existing(path)
        with open(path, "wb") as f:
            f.write(_PREFIX.pack(MAGIC, FORMAT_VERSION, len(header_bytes)))
            f.write(header_bytes)
            f.write(payload)
    except OSError as e:
        raise CheckpointError(f"Could not write checkpoint {path}: {e}") from e

    logger.info(f"💾 Saved {checkpoint.kind} checkpoint to {path} ({offset} parameters)")
    return path


def read_header(path: Path) -> Dict[str, Any]:
    """Parse and return the JSON header without reading parameters."""
    header, _ = _read(Path(path), with_payload=False)
    return header


def load_checkpoint(path: Path, expected_kind: Optional[str] = None) -> Checkpoint:
    """
    Read and verify a checkpoint.

    Raises:
        CheckpointError on missing file, bad magic, unsupported version,
        malformed header, truncated payload, checksum mismatch or wrong kind
    """
    path = Path(path)
    header, payload = _read(path, with_payload=True)
    diagnostics = f"version={FORMAT_VERSION}, kind={header.get('kind')}, payload_count={header.get('payload_count')}"

    expected_count = int(header.get("payload_count", -1))
    if len(payload) != expected_count * 8:
        raise CheckpointError(
            f"Truncated checkpoint {path}: payload has {len(payload)} bytes, "
            f"header expects {expected_count * 8} ({diagnostics})"
        )
    digest = hashlib.sha256(payload).hexdigest()
    if digest != header.get("payload_sha256"):
        raise CheckpointError(
            f"Checksum mismatch in {path}: header sha256={header.get('payload_sha256')}, "
            f"computed {digest} ({diagnostics})"
        )
    if expected_kind is not None and header.get("kind") != expected_kind:
        raise CheckpointError(f"{path} is a '{header.get('kind')}' checkpoint, expected '{expected_kind}'")

    values = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    sections: Dict[str, Dict[str, TensorF]] = {}
    try:
        for section_name, specs in header["sections"].items():
            params = {}
            for spec in specs:
                start = int(spec["offset"])
                block = values[start:start + int(spec["count"])]
                params[spec["name"]] = block.reshape(spec["shape"]).copy()
            sections[section_name] = params
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"Malformed parameter spec in {path}: {e} ({diagnostics})") from e

    logger.info(f"📂 Loaded {header['kind']} checkpoint from {path} ({expected_count} parameters)")
    return Checkpoint(kind=header["kind"], sections=sections, metadata=header.get("metadata", {}))


def _read(path: Path, with_payload: bool):
    if not path.is_file():
        raise CheckpointError(f"Checkpoint not found: {path}")
    try:
        with open(path, "rb") as f:
            prefix = f.read(_PREFIX.size)
            if len(prefix) < _PREFIX.size:
                raise CheckpointError(f"Checkpoint {path} is too short ({len(prefix)} bytes) to hold a header")
            magic, version, header_len = _PREFIX.unpack(prefix)
            if magic != MAGIC:
                raise CheckpointError(f"Not a Latent TSF checkpoint: {path} (magic={magic!r}, expected {MAGIC!r})")
            if version != FORMAT_VERSION:
                raise CheckpointError(
                    f"Unsupported checkpoint version {version} in {path} (supported: {FORMAT_VERSION})"
                )
            header_bytes = f.read(header_len)
            if len(header_bytes) != header_len:
                raise CheckpointError(
                    f"Truncated checkpoint header in {path}: {len(header_bytes)} of {header_len} bytes"
                )
            payload = f.read() if with_payload else b""
    except OSError as e:
        raise CheckpointError(f"Could not read checkpoint {path}: {e}") from e

    try:
        header = json.loads(header_bytes.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"Malformed checkpoint header in {path}: {e}") from e
    if not isinstance(header, dict) or "sections" not in header:
        raise CheckpointError(f"Malformed checkpoint header in {path}: missing 'sections'")
    return header, payload
