"""Binary and JSON containers for cyclic signals, spectra and adelic signals."""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"MALB"
VERSION = 1
HEADER = struct.Struct("<4sHHQQQQ")

KIND_SIGNAL = 1
KIND_SPECTRUM = 2
KIND_ADELIC = 3

_KIND_NAMES = {KIND_SIGNAL: "signal", KIND_SPECTRUM: "spectrum", KIND_ADELIC: "adelic"}
_KIND_CODES = {v: k for k, v in _KIND_NAMES.items()}


def _shape(kind: int, L: int, Q: int, d: int, hdim: int) -> tuple[int, ...]:
    if kind == KIND_ADELIC:
        return (L,) * d + (Q,) * d + (hdim,)
    return (L,) * d + (hdim,)


def pack(kind: str, values: np.ndarray, L: int, d: int, Q: int = 0) -> bytes:
    code = _KIND_CODES[kind]
    hdim = values.shape[-1]
    expected = _shape(code, L, Q, d, hdim)
    if values.shape != expected:
        raise ValueError(f"values have shape {values.shape}, header implies {expected}")
    head = HEADER.pack(MAGIC, VERSION, code, L, Q, d, hdim)
    return head + np.ascontiguousarray(values, dtype="<c16").tobytes()


def unpack(blob: bytes) -> dict:
    if len(blob) < HEADER.size:
        raise ValueError("truncated container header")
    magic, version, code, L, Q, d, hdim = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise ValueError("bad magic")
    if version != VERSION:
        raise ValueError(f"unsupported container version {version}")
    if code not in _KIND_NAMES:
        raise ValueError(f"unknown container kind {code}")
    shape = _shape(code, L, Q, d, hdim)
    payload = np.frombuffer(blob, dtype="<c16", offset=HEADER.size)
    if payload.size != int(np.prod(shape)):
        raise ValueError("payload size does not match header")
    return {"kind": _KIND_NAMES[code], "L": L, "Q": Q, "d": d, "hdim": hdim,
            "values": payload.reshape(shape).astype(complex)}


def write(path, kind: str, values: np.ndarray, L: int, d: int, Q: int = 0) -> None:
    Path(path).write_bytes(pack(kind, values, L, d, Q))


def read(path) -> dict:
    return unpack(Path(path).read_bytes())


def to_json(kind: str, values: np.ndarray, L: int, d: int, Q: int = 0) -> str:
    flat = np.asarray(values, dtype=complex).ravel()
    return json.dumps({
        "kind": kind, "L": L, "Q": Q, "d": d, "hdim": int(values.shape[-1]),
        "values": [[float(z.real), float(z.imag)] for z in flat],
    })


def from_json(text: str) -> dict:
    data = json.loads(text)
    code = _KIND_CODES[data["kind"]]
    shape = _shape(code, data["L"], data.get("Q", 0), data["d"], data["hdim"])
    vals = np.array([complex(re, im) for re, im in data["values"]])
    if vals.size != int(np.prod(shape)):
        raise ValueError("value count does not match the declared shape")
    data["values"] = vals.reshape(shape)
    return data


def load_any(path) -> dict:
    raw = Path(path).read_bytes()
    if raw[:4] == MAGIC:
        return unpack(raw)
    return from_json(raw.decode())
