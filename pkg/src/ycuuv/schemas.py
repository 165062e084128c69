"""Topic registry: payload layouts for every bus topic.

Floats are IEEE-754 binary32 little-endian; the PWM state rides as u16
big-endian pulse widths. ``decode_payload`` yields a flat field->number
dict, which is what the telemetry log and the gateway both emit.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Callable

TOPIC_CMDS = "/thruster_cmds"
TOPIC_PWM = "/pwm_state"
TOPIC_ATTITUDE = "/imu/attitude"
TOPIC_DEPTH = "/depth"
TOPIC_ALTITUDE = "/altitude"
TOPIC_DVL = "/dvl"
TOPIC_USBL = "/usbl_fix"
TOPIC_POSE = "/pose"
TOPIC_PAYLOAD_STATUS = "/payload/status"


@dataclass(frozen=True)
class TopicSchema:
    schema_id: int
    fields: tuple[str, ...]
    pack: Callable[..., bytes]
    unpack: Callable[[bytes], tuple]


def _struct_schema(schema_id: int, fmt: str, fields: tuple[str, ...]) -> TopicSchema:
    packer = struct.Struct(fmt)
    return TopicSchema(
        schema_id=schema_id,
        fields=fields,
        pack=lambda *values: packer.pack(*values),
        unpack=lambda raw: packer.unpack(raw),
    )


TOPICS: dict[str, TopicSchema] = {
    TOPIC_CMDS: _struct_schema(1, "<3f", ("surge", "heave", "yaw")),
    TOPIC_PWM: _struct_schema(2, ">4H", ("pwm1", "pwm2", "pwm3", "pwm4")),
    TOPIC_ATTITUDE: _struct_schema(3, "<4f", ("qw", "qx", "qy", "qz")),
    TOPIC_DEPTH: _struct_schema(4, "<f", ("depth_m",)),
    TOPIC_ALTITUDE: _struct_schema(5, "<f", ("altitude_m",)),
    TOPIC_DVL: _struct_schema(6, "<3fB", ("vx", "vy", "vz", "valid")),
    TOPIC_USBL: _struct_schema(
        7,
        "<7f",
        (
            "range",
            "azimuth",
            "elevation",
            "beacon_n",
            "beacon_e",
            "beacon_d",
            "beacon_heading",
        ),
    ),
    TOPIC_POSE: _struct_schema(8, "<7f", ("n", "e", "d", "qw", "qx", "qy", "qz")),
    TOPIC_PAYLOAD_STATUS: _struct_schema(100, ">I", ("count",)),
}


def schema_id(topic: str) -> int:
    return TOPICS[topic].schema_id


def encode_payload(topic: str, *values) -> bytes:
    return TOPICS[topic].pack(*values)


def decode_payload(topic: str, raw: bytes) -> dict[str, float]:
    schema = TOPICS.get(topic)
    if schema is None:
        return {"bytes": float(len(raw))}
    values = schema.unpack(raw)
    return dict(zip(schema.fields, (float(v) for v in values)))


def finite_or_none(value: float) -> float | None:
    return value if math.isfinite(value) else None
