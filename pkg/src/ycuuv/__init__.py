"""Decentralized modular UUV runtime.

A peer-to-peer pub/sub bus, the vehicle's core modules (control, sensing,
navigation) as independent bus nodes, a deterministic vehicle/network
simulator, and operator tooling for teleoperation.
"""

__version__ = "0.1.0"
