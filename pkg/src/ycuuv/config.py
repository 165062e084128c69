"""Flat key=value config files used by the module CLIs.

Lines are ``key = value``; '#' starts a comment; vector values are
comma-separated numbers.
"""

from __future__ import annotations

from pathlib import Path


def read_kv(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def get_float(kv: dict[str, str], key: str, default: float) -> float:
    return float(kv[key]) if key in kv else default


def get_floats(kv: dict[str, str], key: str) -> list[float]:
    return [float(x) for x in kv[key].replace(",", " ").split()]
