"""Peer-to-peer topic bus: wire format, node runtime, transports."""

from ycuuv.bus.frame import (
    Frame,
    NodeId,
    FrameError,
    BadMagic,
    BadVersion,
    Truncated,
    BadCrc,
    Malformed,
    InvalidName,
    InvalidTopic,
    PayloadTooLarge,
    NotAdvertised,
    encode_frame,
    decode_frame,
    valid_topic,
    valid_name,
    KIND_DATA,
    KIND_BEACON,
    KIND_HEARTBEAT,
    KIND_SUB,
    KIND_UNSUB,
    MAX_PAYLOAD,
)
from ycuuv.bus.node import BusConfig, BusNode, PeerInfo, PeerState

__all__ = [
    "Frame",
    "NodeId",
    "FrameError",
    "BadMagic",
    "BadVersion",
    "Truncated",
    "BadCrc",
    "Malformed",
    "InvalidName",
    "InvalidTopic",
    "PayloadTooLarge",
    "NotAdvertised",
    "encode_frame",
    "decode_frame",
    "valid_topic",
    "valid_name",
    "KIND_DATA",
    "KIND_BEACON",
    "KIND_HEARTBEAT",
    "KIND_SUB",
    "KIND_UNSUB",
    "MAX_PAYLOAD",
    "BusConfig",
    "BusNode",
    "PeerInfo",
    "PeerState",
]
