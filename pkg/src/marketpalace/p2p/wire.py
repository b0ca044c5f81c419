"""Length-prefixed wire framing.

frame = len(u32 big-endian: payload length including the type byte)
     || type(u8) || canonical JSON payload (UTF-8).

The length prefix is validated against a 16 MiB cap before any body
bytes are read, so an adversarial peer cannot make a node buffer
arbitrary amounts.
"""

from __future__ import annotations

import enum
import json
import socket
import struct
from dataclasses import dataclass, field
from typing import Any

from marketpalace.canonical import canonical_json

MAX_FRAME_BYTES = 16 * 1024 * 1024

_HEADER = struct.Struct(">I")


class FrameError(Exception):
    """Base for framing failures."""


class IncompleteFrame(FrameError):
    """Buffer or stream ended before the declared frame length."""


class ConnectionClosed(FrameError):
    """Peer closed the stream cleanly between frames."""


class FrameTooLarge(FrameError):
    """Declared length exceeds the 16 MiB cap."""


class MalformedFrame(FrameError):
    """Unknown type byte or undecodable payload."""


class MessageType(enum.IntEnum):
    HELLO = 1
    HELLO_ACK = 2
    PUSH = 3
    PUSH_ACK = 4
    ENVELOPE = 5
    PEERS_REQUEST = 6
    PEERS_RESPONSE = 7


@dataclass(frozen=True)
class WireMessage:
    type: MessageType
    payload: dict[str, Any] = field(default_factory=dict)


def frame_encode(msg: WireMessage) -> bytes:
    body = canonical_json(msg.payload)
    length = 1 + len(body)
    if length > MAX_FRAME_BYTES:
        raise FrameTooLarge(f"frame of {length} bytes exceeds {MAX_FRAME_BYTES}")
    return _HEADER.pack(length) + bytes([int(msg.type)]) + body


def frame_decode(buf: bytes) -> tuple[WireMessage, int]:
    """Decode one frame from the head of ``buf``.

    Returns (message, bytes consumed). Raises IncompleteFrame if more
    bytes are needed, FrameTooLarge before reading an oversize body,
    MalformedFrame for unknown types or bad JSON.
    """
    if len(buf) < _HEADER.size:
        raise IncompleteFrame("need 4 header bytes")
    (length,) = _HEADER.unpack_from(buf)
    if length > MAX_FRAME_BYTES:
        raise FrameTooLarge(f"declared {length} bytes exceeds {MAX_FRAME_BYTES}")
    if length < 1:
        raise MalformedFrame("frame must contain a type byte")
    end = _HEADER.size + length
    if len(buf) < end:
        raise IncompleteFrame(f"need {end - len(buf)} more bytes")
    try:
        mtype = MessageType(buf[_HEADER.size])
    except ValueError:
        raise MalformedFrame(f"unknown message type {buf[_HEADER.size]}") from None
    body = buf[_HEADER.size + 1 : end]
    try:
        payload = json.loads(body.decode("utf-8"))
    except Exception as exc:
        raise MalformedFrame(f"undecodable payload: {exc}") from None
    if not isinstance(payload, dict):
        raise MalformedFrame("payload must be a JSON object")
    return WireMessage(mtype, payload), end


def send_message(sock: socket.socket, msg: WireMessage) -> None:
    sock.sendall(frame_encode(msg))


def recv_message(sock: socket.socket) -> WireMessage:
    """Read exactly one frame from a socket.

    Raises ConnectionClosed on clean EOF between frames, IncompleteFrame
    on EOF mid-frame, ConnectionError/timeout per socket semantics, and
    the decode errors above.
    """
    first = sock.recv(1)
    if not first:
        raise ConnectionClosed("peer closed the connection")
    header = first + _recv_exactly(sock, _HEADER.size - 1)
    (length,) = _HEADER.unpack(header)
    if length > MAX_FRAME_BYTES:
        raise FrameTooLarge(f"declared {length} bytes exceeds {MAX_FRAME_BYTES}")
    if length < 1:
        raise MalformedFrame("frame must contain a type byte")
    body = _recv_exactly(sock, length)
    msg, _ = frame_decode(header + body)
    return msg


def _recv_exactly(sock: socket.socket, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            raise IncompleteFrame("connection closed mid-frame")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)
