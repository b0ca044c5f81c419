"""Bid and chat payloads carried inside envelopes.

Bids and chats are direct messages between two parties, never gossiped;
these codecs define the canonical bytes that travel as envelope
plaintext. Parsing is strict: unknown fields are rejected.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from typing import Any

from marketpalace.canonical import canonical_json
from marketpalace.errors import EncodingError, ParameterError

MAX_CHAT_CHARS = 4096

_CURRENCY = re.compile(r"^[A-Z]{3}$")
_HEX64 = re.compile(r"^[0-9a-f]{64}$")

_BID_FIELDS = {"kind", "content_id", "amount", "currency", "bidder_fingerprint", "created_at"}
_CHAT_FIELDS = {"kind", "channel_id", "body", "sent_at"}


@dataclass(frozen=True)
class Bid:
    content_id: str
    amount: int
    currency: str
    bidder_fingerprint: str
    created_at: int

    def __post_init__(self):
        if not (isinstance(self.content_id, str) and _HEX64.match(self.content_id)):
            raise ParameterError("content_id must be 64 lowercase hex characters")
        if (
            not isinstance(self.amount, int)
            or isinstance(self.amount, bool)
            or self.amount < 0
        ):
            raise ParameterError("amount must be a non-negative integer")
        if not (isinstance(self.currency, str) and _CURRENCY.match(self.currency)):
            raise ParameterError("currency must be a 3-letter ISO-4217 code")
        if not (
            isinstance(self.bidder_fingerprint, str)
            and _HEX64.match(self.bidder_fingerprint)
        ):
            raise ParameterError("bidder_fingerprint must be 64 lowercase hex chars")


@dataclass(frozen=True)
class ChatMessage:
    channel_id: str
    body: str
    sent_at: int

    def __post_init__(self):
        if not (isinstance(self.channel_id, str) and _HEX64.match(self.channel_id)):
            raise ParameterError("channel_id must be 64 lowercase hex characters")
        if not isinstance(self.body, str) or not (0 < len(self.body) <= MAX_CHAT_CHARS):
            raise ParameterError(f"body must be 1..{MAX_CHAT_CHARS} characters")


def chat_channel_id(fp_a: str, fp_b: str, content_id: str) -> str:
    """SHA-256 over the sorted participant fingerprints and the listing id.

    Symmetric in the two participants: digest input is the concatenation
    of the raw 32-byte fingerprints in ascending byte order, followed by
    the raw 32-byte content id.
    """
    for fp in (fp_a, fp_b, content_id):
        if not (isinstance(fp, str) and _HEX64.match(fp)):
            raise ParameterError("fingerprints and content_id must be 64 hex chars")
    if fp_a == fp_b:
        raise ParameterError("chat participants must differ")
    lo, hi = sorted((bytes.fromhex(fp_a), bytes.fromhex(fp_b)))
    return hashlib.sha256(lo + hi + bytes.fromhex(content_id)).hexdigest()


def make_bid_payload(bid: Bid) -> bytes:
    return canonical_json(
        {
            "kind": "bid",
            "content_id": bid.content_id,
            "amount": bid.amount,
            "currency": bid.currency,
            "bidder_fingerprint": bid.bidder_fingerprint,
            "created_at": bid.created_at,
        }
    )


def parse_bid_payload(payload: bytes) -> Bid:
    data = _parse_object(payload, expected_kind="bid", allowed=_BID_FIELDS)
    try:
        return Bid(
            content_id=data["content_id"],
            amount=data["amount"],
            currency=data["currency"],
            bidder_fingerprint=data["bidder_fingerprint"],
            created_at=int(data["created_at"]),
        )
    except KeyError as exc:
        raise EncodingError(f"bid payload missing field {exc}") from None
    except ParameterError as exc:
        raise EncodingError(str(exc)) from None
    except (TypeError, ValueError) as exc:
        raise EncodingError(str(exc)) from None


def make_chat_payload(msg: ChatMessage) -> bytes:
    return canonical_json(
        {
            "kind": "chat",
            "channel_id": msg.channel_id,
            "body": msg.body,
            "sent_at": msg.sent_at,
        }
    )


def parse_chat_payload(payload: bytes) -> ChatMessage:
    data = _parse_object(payload, expected_kind="chat", allowed=_CHAT_FIELDS)
    try:
        return ChatMessage(
            channel_id=data["channel_id"],
            body=data["body"],
            sent_at=int(data["sent_at"]),
        )
    except KeyError as exc:
        raise EncodingError(f"chat payload missing field {exc}") from None
    except ParameterError as exc:
        raise EncodingError(str(exc)) from None
    except (TypeError, ValueError) as exc:
        raise EncodingError(str(exc)) from None


def payload_kind(payload: bytes) -> str:
    """Peek at the kind tag without full validation."""
    try:
        data = json.loads(payload.decode("utf-8"))
    except Exception as exc:
        raise EncodingError(f"undecodable payload: {exc}") from None
    if not isinstance(data, dict) or not isinstance(data.get("kind"), str):
        raise EncodingError("payload has no kind tag")
    return data["kind"]


def _parse_object(payload: bytes, expected_kind: str, allowed: set[str]) -> dict[str, Any]:
    try:
        data = json.loads(payload.decode("utf-8"))
    except Exception as exc:
        raise EncodingError(f"undecodable payload: {exc}") from None
    if not isinstance(data, dict):
        raise EncodingError("payload must be a JSON object")
    if data.get("kind") != expected_kind:
        raise EncodingError(f"expected kind {expected_kind!r}")
    unknown = set(data) - allowed
    if unknown:
        raise EncodingError(f"unknown payload fields: {sorted(unknown)}")
    return data
