"""Wire format.

Every frame is a 10-byte header followed by the payload::

    magic "PADS" | version u8 | kind u8 | length u32 | payload

Multi-byte integers are big-endian. Interaction batches are a u32 count
followed by that many interactions, each laid out as
``src u64, dst u64, send_step u64, seq u32, payload_len u32, payload``.
"""

from __future__ import annotations

import base64
import enum
import json
import struct
from typing import Iterable

from pads.errors import ProtocolError
from pads.kernel.types import Interaction

MAGIC = b"PADS"
VERSION = 1
HEADER = struct.Struct(">4sBBI")
HEADER_SIZE = HEADER.size  # 10
MAX_PAYLOAD = (1 << 32) - 1

_COUNT = struct.Struct(">I")
_INTERACTION = struct.Struct(">QQQII")
_MIGRATION_HEAD = struct.Struct(">QdQQIII")


class FrameKind(enum.IntEnum):
    INTERACTION_BATCH = 1
    MIGRATION_PAYLOAD = 2
    BARRIER_VOTE = 3
    BARRIER_RELEASE = 4


def encode_frame(kind: FrameKind | int, payload: bytes = b"") -> bytes:
    kind = FrameKind(kind)
    if len(payload) > MAX_PAYLOAD:
        raise ProtocolError(f"payload of {len(payload)} bytes exceeds frame limit", HEADER_SIZE)
    return HEADER.pack(MAGIC, VERSION, kind, len(payload)) + payload


def parse_header(header: bytes) -> tuple[FrameKind, int]:
    if len(header) < HEADER_SIZE:
        raise ProtocolError(f"truncated header: {len(header)} of {HEADER_SIZE} bytes", len(header))
    magic, version, kind, length = HEADER.unpack_from(header)
    if magic != MAGIC:
        raise ProtocolError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise ProtocolError(f"unsupported version {version}", 4)
    try:
        kind = FrameKind(kind)
    except ValueError:
        raise ProtocolError(f"unknown frame kind {kind}", 5) from None
    return kind, length


def decode_frame(data: bytes) -> tuple[FrameKind, bytes]:
    kind, length = parse_header(data)
    end = HEADER_SIZE + length
    if len(data) < end:
        raise ProtocolError(f"truncated payload: have {len(data) - HEADER_SIZE} of {length} bytes", len(data))
    if len(data) > end:
        raise ProtocolError(f"{len(data) - end} trailing bytes after frame", end)
    return kind, bytes(data[HEADER_SIZE:end])


def encode_batch(interactions: Iterable[Interaction]) -> bytes:
    parts = [b""]
    pack = _INTERACTION.pack
    count = 0
    for src, dst, send_step, seq, payload in interactions:
        parts.append(pack(src, dst, send_step, seq, len(payload)))
        parts.append(payload)
        count += 1
    parts[0] = _COUNT.pack(count)
    return b"".join(parts)


def batch_size(interactions: Iterable[Interaction]) -> int:
    return _COUNT.size + sum(_INTERACTION.size + len(i.payload) for i in interactions)


def decode_batch(data: bytes, offset: int = 0) -> tuple[list[Interaction], int]:
    """Decode a batch starting at ``offset``; returns the interactions and the end offset."""
    if len(data) - offset < _COUNT.size:
        raise ProtocolError("truncated batch count", offset)
    (count,) = _COUNT.unpack_from(data, offset)
    pos = offset + _COUNT.size
    out = []
    unpack = _INTERACTION.unpack_from
    size = _INTERACTION.size
    for _ in range(count):
        if len(data) - pos < size:
            raise ProtocolError("truncated interaction header", pos)
        src, dst, send_step, seq, plen = unpack(data, pos)
        pos += size
        if len(data) - pos < plen:
            raise ProtocolError("truncated interaction payload", pos)
        out.append(Interaction(src, dst, send_step, seq, bytes(data[pos : pos + plen])))
        pos += plen
    return out, pos


def encode_migration(
    entity: int,
    kind: str,
    weight: float,
    rng_seed: int,
    state: bytes,
    pending: list[Interaction],
    send_us: int = 0,
) -> bytes:
    kind_raw = kind.encode("utf-8")
    head = _MIGRATION_HEAD.pack(entity, weight, rng_seed, send_us, len(kind_raw), len(state), 0)
    return head + kind_raw + state + encode_batch(pending)


def decode_migration(data: bytes) -> dict:
    if len(data) < _MIGRATION_HEAD.size:
        raise ProtocolError("truncated migration header", len(data))
    entity, weight, rng_seed, send_us, klen, slen, _ = _MIGRATION_HEAD.unpack_from(data)
    pos = _MIGRATION_HEAD.size
    if len(data) < pos + klen + slen:
        raise ProtocolError("truncated migration body", len(data))
    kind = data[pos : pos + klen].decode("utf-8")
    pos += klen
    state = bytes(data[pos : pos + slen])
    pos += slen
    pending, end = decode_batch(data, pos)
    if end != len(data):
        raise ProtocolError("trailing bytes after migration payload", end)
    return {
        "entity": entity,
        "kind": kind,
        "weight": weight,
        "rng_seed": rng_seed,
        "state": state,
        "pending": pending,
        "send_us": send_us,
    }


def _default(obj):
    if isinstance(obj, (bytes, bytearray)):
        return {"__b64__": base64.b64encode(obj).decode("ascii")}
    if hasattr(obj, "_asdict"):
        return obj._asdict()
    raise TypeError(f"cannot encode {type(obj).__name__}")


def _hook(obj):
    if "__b64__" in obj and len(obj) == 1:
        return base64.b64decode(obj["__b64__"])
    return obj


def encode_control(message: dict) -> bytes:
    """Barrier vote/release bodies are JSON documents."""
    return json.dumps(message, default=_default, separators=(",", ":")).encode("utf-8")


def decode_control(data: bytes) -> dict:
    try:
        return json.loads(data.decode("utf-8"), object_hook=_hook)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"malformed control payload: {exc}", 0) from exc
