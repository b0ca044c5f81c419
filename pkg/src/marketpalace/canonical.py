"""Canonical byte-stable JSON encoding.

Every signed or hashed structure in the system (certified keys, listings,
tombstones, envelopes, attribute disclosures, wire payloads) is serialized
with this encoding so signatures and digests are reproducible across
processes and languages: UTF-8 JSON, lexicographically sorted keys, no
insignificant whitespace, integers in decimal, byte fields base64-encoded
by the caller before they reach the encoder.
"""

from __future__ import annotations

import base64
import json
from typing import Any


def canonical_json(obj: Any) -> bytes:
    """Encode ``obj`` as canonical JSON bytes.

    Floats are rejected: canonical material must be byte-stable and floats
    have no canonical decimal form.
    """
    _reject_floats(obj)
    return json.dumps(
        obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def _reject_floats(obj: Any) -> None:
    if isinstance(obj, float):
        raise ValueError("floats are not allowed in canonical encodings")
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return
    if isinstance(obj, (list, tuple)):
        for item in obj:
            _reject_floats(item)
        return
    if isinstance(obj, dict):
        for key, value in obj.items():
            if not isinstance(key, str):
                raise ValueError("canonical object keys must be strings")
            _reject_floats(value)
        return
    raise ValueError(f"type {type(obj).__name__} is not canonically encodable")


def b64encode(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def b64decode(text: str) -> bytes:
    if not isinstance(text, str):
        raise ValueError("expected base64 string")
    try:
        return base64.b64decode(text.encode("ascii"), validate=True)
    except Exception as exc:
        raise ValueError(f"invalid base64: {exc}") from None
