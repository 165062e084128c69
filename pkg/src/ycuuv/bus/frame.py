"""Binary wire format for the inter-module bus.

One frame per datagram, all multi-byte integers big-endian:

    bytes 0-1   magic 0x59 0x43
    byte  2     version (0x01)
    byte  3     kind: 0=DATA 1=BEACON 2=HEARTBEAT 3=SUB 4=UNSUB
    byte  4     flags: bit0 = timestamp field present
    bytes 5-8   seq u32, per (publisher, topic) for DATA
    byte  9     name_len, then publisher name bytes, then uid u64
    [stamp f64  only when flags bit0 is set]
    DATA        topic_len u8 + topic, schema_id u16, payload_len u16 + payload
    SUB/UNSUB   topic_len u8 + topic
    BEACON      topic_count u8, repeated (topic_len u8 + topic)
    trailer     crc u32 over every preceding byte (CRC-32, IEEE reflected,
                init 0xFFFFFFFF, final XOR — i.e. zlib.crc32)

Decoding is strict: a buffer is accepted only if magic, CRC, version and
structure all validate and the structure consumes the buffer exactly, so
``encode(decode(b)) == b`` for every accepted ``b``. The CRC is checked
before the version and structure so that any single corrupted bit outside
the magic bytes surfaces as ``BadCrc``.
"""

from __future__ import annotations

import re
import struct
import zlib
from dataclasses import dataclass, field

MAGIC = b"\x59\x43"
VERSION = 1

KIND_DATA = 0
KIND_BEACON = 1
KIND_HEARTBEAT = 2
KIND_SUB = 3
KIND_UNSUB = 4
_KINDS = (KIND_DATA, KIND_BEACON, KIND_HEARTBEAT, KIND_SUB, KIND_UNSUB)

FLAG_STAMP = 0x01

MAX_NAME = 63
MAX_TOPIC = 255
MAX_PAYLOAD = 0xFFFF  # u16 length field ceiling

# header (9) + name_len (1) + shortest name (1) + uid (8) + crc (4)
MIN_FRAME = 23

_TOPIC_RE = re.compile(r"(/[A-Za-z0-9_]+)+")


class FrameError(Exception):
    """Base class for wire-format violations."""


class BadMagic(FrameError):
    pass


class BadVersion(FrameError):
    pass


class Truncated(FrameError):
    pass


class BadCrc(FrameError):
    pass


class Malformed(FrameError):
    """CRC-valid buffer whose structure is still inconsistent."""


class InvalidName(ValueError):
    pass


class InvalidTopic(ValueError):
    pass


class PayloadTooLarge(ValueError):
    pass


class NotAdvertised(RuntimeError):
    pass


def valid_name(name: str) -> bool:
    try:
        raw = name.encode("utf-8")
    except UnicodeEncodeError:
        return False
    return 1 <= len(raw) <= MAX_NAME and b"\x00" not in raw


def valid_topic(topic: str) -> bool:
    return (
        isinstance(topic, str)
        and len(topic.encode("utf-8")) <= MAX_TOPIC
        and _TOPIC_RE.fullmatch(topic) is not None
    )


def check_topic(topic: str) -> str:
    if not valid_topic(topic):
        raise InvalidTopic(f"bad topic {topic!r}")
    return topic


@dataclass(frozen=True, order=True)
class NodeId:
    """Bus identity: human-readable name plus a random uid tiebreaker."""

    name: str
    uid: int

    def __post_init__(self) -> None:
        if not valid_name(self.name):
            raise InvalidName(f"bad node name {self.name!r}")
        if not 0 <= self.uid <= 0xFFFFFFFFFFFFFFFF:
            raise InvalidName("uid out of u64 range")

    def __str__(self) -> str:
        return f"{self.name}#{self.uid:016x}"


@dataclass(frozen=True)
class Frame:
    """Decoded wire unit. ``topics`` is used by BEACON, ``topic`` by the rest."""

    kind: int
    seq: int
    publisher: NodeId
    topic: str | None = None
    schema_id: int = 0
    payload: bytes = b""
    topics: tuple[str, ...] = field(default=())
    stamp: float | None = None
    flags: int = 0  # raw flags byte; bit0 must mirror stamp presence


def _check_encodable(frame: Frame) -> None:
    if frame.kind not in _KINDS:
        raise ValueError(f"unknown frame kind {frame.kind}")
    if not 0 <= frame.seq <= 0xFFFFFFFF:
        raise ValueError("seq out of u32 range")
    if (frame.stamp is not None) != bool(frame.flags & FLAG_STAMP):
        raise ValueError("stamp/flags bit0 mismatch")
    if frame.kind in (KIND_DATA, KIND_SUB, KIND_UNSUB):
        if frame.topic is None:
            raise InvalidTopic("frame kind requires a topic")
        check_topic(frame.topic)
    if frame.kind == KIND_DATA:
        if len(frame.payload) > MAX_PAYLOAD:
            raise PayloadTooLarge(f"payload {len(frame.payload)} > {MAX_PAYLOAD}")
        if not 0 <= frame.schema_id <= 0xFFFF:
            raise ValueError("schema_id out of u16 range")
    if frame.kind == KIND_BEACON:
        if len(frame.topics) > 0xFF:
            raise ValueError("too many advertised topics for one beacon")
        for t in frame.topics:
            check_topic(t)


def encode_frame(frame: Frame) -> bytes:
    """Serialize a frame; raises on any invariant violation."""
    _check_encodable(frame)
    name = frame.publisher.name.encode("utf-8")
    parts = [
        MAGIC,
        struct.pack(">BBBI", VERSION, frame.kind, frame.flags, frame.seq),
        struct.pack(">B", len(name)),
        name,
        struct.pack(">Q", frame.publisher.uid),
    ]
    if frame.flags & FLAG_STAMP:
        parts.append(struct.pack(">d", frame.stamp))
    if frame.kind in (KIND_DATA, KIND_SUB, KIND_UNSUB):
        topic = frame.topic.encode("utf-8")  # type: ignore[union-attr]
        parts.append(struct.pack(">B", len(topic)))
        parts.append(topic)
    if frame.kind == KIND_DATA:
        parts.append(struct.pack(">HH", frame.schema_id, len(frame.payload)))
        parts.append(frame.payload)
    elif frame.kind == KIND_BEACON:
        parts.append(struct.pack(">B", len(frame.topics)))
        for t in frame.topics:
            raw = t.encode("utf-8")
            parts.append(struct.pack(">B", len(raw)))
            parts.append(raw)
    body = b"".join(parts)
    return body + struct.pack(">I", zlib.crc32(body))


class _Cursor:
    __slots__ = ("buf", "pos", "end")

    def __init__(self, buf: bytes, end: int):
        self.buf = buf
        self.pos = 0
        self.end = end  # structure must stop exactly here (start of crc)

    def take(self, n: int) -> bytes:
        if self.pos + n > self.end:
            raise Truncated(f"need {n} bytes at offset {self.pos}")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack(">H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.take(8))[0]

    def f64(self) -> float:
        return struct.unpack(">d", self.take(8))[0]


def decode_frame(buf: bytes) -> Frame:
    """Parse one frame from ``buf``; the buffer must hold exactly one frame.

    Raises BadMagic, Truncated, BadCrc, BadVersion or Malformed — in that
    check order.
    """
    if len(buf) < 2:
        raise Truncated("shorter than the magic prefix")
    if buf[:2] != MAGIC:
        raise BadMagic("frame does not start with magic bytes")
    if len(buf) < MIN_FRAME:
        raise Truncated(f"frame shorter than minimum ({len(buf)} < {MIN_FRAME})")
    body, crc_bytes = buf[:-4], buf[-4:]
    if zlib.crc32(body) != struct.unpack(">I", crc_bytes)[0]:
        raise BadCrc("checksum mismatch")
    if buf[2] != VERSION:
        raise BadVersion(f"unsupported version {buf[2]}")

    cur = _Cursor(buf, len(buf) - 4)
    cur.pos = 3  # magic + version already checked
    kind = cur.u8()
    flags = cur.u8()
    seq = cur.u32()
    name_len = cur.u8()
    name_raw = cur.take(name_len)
    try:
        name = name_raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise Malformed("publisher name is not UTF-8") from exc
    uid = cur.u64()
    try:
        publisher = NodeId(name, uid)
    except InvalidName as exc:
        raise Malformed(str(exc)) from exc

    stamp = cur.f64() if flags & FLAG_STAMP else None

    topic: str | None = None
    schema_id = 0
    payload = b""
    topics: tuple[str, ...] = ()
    if kind in (KIND_DATA, KIND_SUB, KIND_UNSUB):
        topic = _read_topic(cur)
    if kind == KIND_DATA:
        schema_id = cur.u16()
        payload = bytes(cur.take(cur.u16()))
    elif kind == KIND_BEACON:
        topics = tuple(_read_topic(cur) for _ in range(cur.u8()))
    elif kind not in (KIND_SUB, KIND_UNSUB, KIND_HEARTBEAT):
        raise Malformed(f"unknown frame kind {kind}")

    if cur.pos != cur.end:
        raise Malformed(f"{cur.end - cur.pos} trailing bytes before crc")
    return Frame(
        kind=kind,
        seq=seq,
        publisher=publisher,
        topic=topic,
        schema_id=schema_id,
        payload=payload,
        topics=topics,
        stamp=stamp,
        flags=flags,
    )


def _read_topic(cur: _Cursor) -> str:
    raw = cur.take(cur.u8())
    try:
        topic = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise Malformed("topic is not UTF-8") from exc
    if not valid_topic(topic):
        raise Malformed(f"invalid topic {topic!r}")
    return topic
