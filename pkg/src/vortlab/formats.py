"""On-disk formats: run configs, CLM2 snapshots, time-series CSV, JSON reports.

Config files are flat ``key = value`` lines with dotted keys
(``model.name``, ``domain.a``, ``sim.dt0``). ``#`` starts a comment.
Values are parsed as bool (true/false), int, float, or left as strings.

CLM2 snapshot layout (all little-endian)::

    b"CLM2"                 magic
    u32 version             currently 1
    u32 dim                 spatial dimensions
    u32 n[dim]              nodes per axis
    u32 ncomp               field components
    u32 domain tag          0 rectangle, 1 ellipse, 2 periodic
    u32 nparams, f64[nparams]
                            rectangle: none; ellipse: a, b, c, origin, spacing;
                            periodic: length
    f64 time
    u8 has_mask, then u8[prod(n)] mask if set (row-major)
    f64[ncomp * prod(n)]    values, component-major then row-major
"""
from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"CLM2"
VERSION = 1
DOMAIN_TAGS = {"rectangle": 0, "ellipse": 1, "periodic": 2}
TAG_NAMES = {v: k for k, v in DOMAIN_TAGS.items()}


class ConfigError(ValueError):
    pass


class SnapshotError(ValueError):
    pass


# ------------------------------------------------------------------ config


def parse_value(text: str):
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            pass
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    return text


def parse_config(text: str, source: str = "<config>") -> dict:
    """Parse the flat dotted key-value format; errors carry line numbers."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or any(not part.replace("_", "").isalnum() for part in key.split(".")):
            raise ConfigError(f"{source}:{lineno}: invalid key {key!r}")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = parse_value(value)
    return out


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    return parse_config(text, str(path))


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(cfg: dict) -> str:
    return "".join(f"{k} = {_format_value(cfg[k])}\n" for k in sorted(cfg))


# --------------------------------------------------------------- snapshots


@dataclass
class Snapshot:
    values: np.ndarray  # (ncomp, *n)
    domain: str
    params: tuple
    time: float = 0.0
    mask: np.ndarray | None = None

    @property
    def field(self) -> np.ndarray:
        """Values without the component axis for scalar fields."""
        return self.values[0] if self.values.shape[0] == 1 else self.values


def write_snapshot(path, values, domain: str, params=(), time: float = 0.0, mask=None, components: int | None = None):
    """Write a field; ``components`` marks a leading component axis (default: scalar)."""
    values = np.asarray(values, dtype="<f8")
    if components is None:
        values = values[None]
    elif values.shape[0] != components:
        raise SnapshotError(f"expected {components} components, got shape {values.shape}")
    ncomp, shape = values.shape[0], values.shape[1:]
    if domain not in DOMAIN_TAGS:
        raise SnapshotError(f"unknown domain tag {domain!r}")
    parts = [
        MAGIC,
        struct.pack("<II", VERSION, len(shape)),
        struct.pack(f"<{len(shape)}I", *shape),
        struct.pack("<II", ncomp, DOMAIN_TAGS[domain]),
        struct.pack("<I", len(params)),
        struct.pack(f"<{len(params)}d", *params),
        struct.pack("<d", time),
    ]
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != shape:
            raise SnapshotError(f"mask shape {mask.shape} does not match field {shape}")
        parts += [b"\x01", mask.astype(np.uint8).tobytes(order="C")]
    else:
        parts.append(b"\x00")
    parts.append(np.ascontiguousarray(values).tobytes(order="C"))
    Path(path).write_bytes(b"".join(parts))


def read_snapshot(path) -> Snapshot:
    path = Path(path)
    try:
        buf = path.read_bytes()
    except FileNotFoundError:
        raise SnapshotError(f"snapshot file not found: {path}") from None
    if buf[:4] != MAGIC:
        raise SnapshotError(f"{path}: not a CLM2 snapshot")
    pos = 4

    def take(fmt):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(buf):
            raise SnapshotError(f"{path}: truncated snapshot")
        vals = struct.unpack_from(fmt, buf, pos)
        pos += size
        return vals

    version, dim = take("<II")
    if version != VERSION:
        raise SnapshotError(f"{path}: unsupported snapshot version {version}")
    shape = take(f"<{dim}I")
    ncomp, tag = take("<II")
    (nparams,) = take("<I")
    params = take(f"<{nparams}d")
    (time,) = take("<d")
    (has_mask,) = take("<B")
    size = math.prod(shape)
    mask = None
    if has_mask:
        mask = np.frombuffer(buf, dtype=np.uint8, count=size, offset=pos).astype(bool).reshape(shape)
        pos += size
    if pos + 8 * ncomp * size != len(buf):
        raise SnapshotError(f"{path}: payload size does not match header")
    values = np.frombuffer(buf, dtype="<f8", count=ncomp * size, offset=pos).reshape((ncomp, *shape)).copy()
    return Snapshot(values, TAG_NAMES.get(tag, "unknown"), params, time, mask)


# ------------------------------------------------------------ tabular data


def write_timeseries_csv(path, series) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "sup_norm", "l2_norm", "mean"])
        for row in zip(series.t, series.sup_norm, series.l2_norm, series.mean):
            writer.writerow([repr(float(v)) for v in row])


def read_timeseries_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in ("t", "sup_norm", "l2_norm", "mean")}


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(path, data: dict) -> None:
    # NaN is written as null so the file stays strict JSON
    clean = {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in data.items()}
    Path(path).write_text(json.dumps(clean, indent=2, default=_json_default, sort_keys=True) + "\n")
