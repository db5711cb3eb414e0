"""Versioned binary container for trained models.

Layout: 8-byte magic, u32 version, u64 header length, JSON header (kind,
metadata, array index), raw array bytes (C order, little-endian), and a
trailing SHA-256 digest over everything before it. Round-trips are
bit-exact; the digest is verified on load.
"""

import hashlib
import json
import struct

import numpy as np

_MAGIC = b"BSELCTR\x01"
_VERSION = 1

_DTYPES = {"<f8": np.dtype("<f8"), "<i8": np.dtype("<i8"), "<c16": np.dtype("<c16")}


class ContainerError(ValueError):
    """Raised for malformed, truncated, or corrupted container files."""


def save_container(path, kind: str, arrays: dict[str, np.ndarray],
                   meta: dict | None = None) -> None:
    index = []
    blobs = []
    offset = 0
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        if arr.dtype == np.float64:
            code = "<f8"
        elif arr.dtype == np.int64:
            code = "<i8"
        elif arr.dtype == np.complex128:
            code = "<c16"
        else:
            raise ContainerError(f"unsupported array dtype {arr.dtype} for {name!r}")
        blob = arr.astype(_DTYPES[code]).tobytes()
        index.append({"name": name, "dtype": code, "shape": list(arr.shape),
                      "offset": offset, "nbytes": len(blob)})
        blobs.append(blob)
        offset += len(blob)
    header = json.dumps(
        {"kind": kind, "meta": meta or {}, "arrays": index},
        sort_keys=True, separators=(",", ":"),
    ).encode("utf-8")

    payload = _MAGIC + struct.pack("<IQ", _VERSION, len(header)) + header + b"".join(blobs)
    digest = hashlib.sha256(payload).digest()
    with open(path, "wb") as fh:
        fh.write(payload)
        fh.write(digest)


def load_container(path) -> tuple[str, dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(_MAGIC) + 12 + 32 or raw[: len(_MAGIC)] != _MAGIC:
        raise ContainerError(f"{path} is not a beamsel container")
    payload, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(payload).digest() != digest:
        raise ContainerError(f"{path} failed its checksum; file is corrupted")
    version, header_len = struct.unpack_from("<IQ", payload, len(_MAGIC))
    if version != _VERSION:
        raise ContainerError(f"unsupported container version {version}")
    start = len(_MAGIC) + 12
    header = json.loads(payload[start:start + header_len].decode("utf-8"))
    body = payload[start + header_len:]
    arrays = {}
    for entry in header["arrays"]:
        blob = body[entry["offset"]:entry["offset"] + entry["nbytes"]]
        arr = np.frombuffer(blob, dtype=_DTYPES[entry["dtype"]])
        arrays[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return header["kind"], arrays, header["meta"]
