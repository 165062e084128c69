"""Shared CLI plumbing: bus endpoint parsing and lifetime handling."""

from __future__ import annotations

import argparse
import logging
import time

from ycuuv.bus.node import BusConfig
from ycuuv.bus.transport import UdpTransport
from ycuuv.eventloop import RealTimeLoop


def add_bus_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--bus",
        default="udp",
        help="bus endpoint: udp, udp:PORT, or udp:HOST:PORT (default: udp, "
        "port from YC_DISCOVERY_PORT or 18850)",
    )


def open_bus(endpoint: str, bus_config: BusConfig | None = None):
    """Parse a --bus endpoint and return (loop, transport)."""
    cfg = bus_config or BusConfig.from_env()
    parts = endpoint.split(":")
    if parts[0] != "udp":
        raise ValueError(f"unsupported bus endpoint {endpoint!r}")
    host = "0.0.0.0"
    port = cfg.discovery_port
    if len(parts) == 2:
        port = int(parts[1])
    elif len(parts) == 3:
        host, port = parts[1], int(parts[2])
    elif len(parts) > 3:
        raise ValueError(f"unparseable bus endpoint {endpoint!r}")
    loop = RealTimeLoop()
    transport = UdpTransport(loop, discovery_port=port, bind_host=host)
    return loop, transport


def run_forever(loop) -> int:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s: %(message)s")
    try:
        while True:
            time.sleep(1.0)
    except KeyboardInterrupt:
        return 0
    finally:
        loop.stop()
