"""Flat dotted-key configuration files and their canonical serialization.

Format: one `section.key = value` assignment per line, `#` comments,
values parsed as int, float, bool, or comma-separated lists thereof.
A run's configuration is embedded verbatim in its outputs together with a
sha256 of the canonical text, so identical configurations are recognizable
byte-for-byte.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field


def _parse_scalar(tok: str):
    t = tok.strip()
    low = t.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        return t


def parse_value(raw: str):
    raw = raw.strip()
    if "," in raw:
        return [_parse_scalar(t) for t in raw.split(",") if t.strip() != ""]
    return _parse_scalar(raw)


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return ",".join(format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class ExperimentConfig:
    """Dotted-key experiment settings with deterministic round-tripping."""

    values: dict = field(default_factory=dict)

    @classmethod
    def parse(cls, text: str) -> "ExperimentConfig":
        vals = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ValueError(f"line {lineno}: expected 'key = value'")
            key, raw = stripped.split("=", 1)
            vals[key.strip()] = parse_value(raw)
        return cls(vals)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.parse(fh.read())

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def require(self, key: str):
        if key not in self.values:
            raise KeyError(f"missing config key {key!r}")
        return self.values[key]

    def section(self, prefix: str) -> dict:
        pre = prefix.rstrip(".") + "."
        return {k[len(pre):]: v for k, v in self.values.items()
                if k.startswith(pre)}

    def updated(self, **kv) -> "ExperimentConfig":
        out = dict(self.values)
        out.update(kv)
        return ExperimentConfig(out)

    def canonical(self) -> str:
        lines = [f"{k} = {format_value(self.values[k])}"
                 for k in sorted(self.values)]
        return "\n".join(lines) + "\n"

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def int_list(self, key: str) -> list:
        v = self.require(key)
        return [int(x) for x in (v if isinstance(v, list) else [v])]

    def matrix(self, key: str, n: int):
        """Row-major integer list to an n x n matrix."""
        import numpy as np
        flat = self.int_list(key)
        if len(flat) != n * n:
            raise ValueError(f"{key}: expected {n * n} entries, got {len(flat)}")
        return np.array(flat).reshape(n, n)
