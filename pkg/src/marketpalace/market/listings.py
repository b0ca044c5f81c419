"""Content-addressed signed listings and their removal tombstones.

A listing's content id is the SHA-256 of its canonical JSON encoding, so
any field mutation changes the id. The owner signs the content id (hash
first, then sign) and ships their certified key with the listing; a
receiver can check, in order: the owner's certification, the fingerprint
binding, the signature against a recomputed content id, and expiry.
"""

from __future__ import annotations

import enum
import hashlib
import re
import secrets
import time
from dataclasses import dataclass
from typing import Any, Callable, Mapping

from cryptography.hazmat.primitives.asymmetric import rsa

from marketpalace.canonical import b64decode, b64encode, canonical_json
from marketpalace.crypto import keys
from marketpalace.crypto.certify import CertifiedKey, verify_certification
from marketpalace.errors import EncodingError, ParameterError

MAX_TITLE_CHARS = 140
MAX_DESCRIPTION_CHARS = 4096
DEFAULT_TTL_S = 7 * 24 * 3600

_CURRENCY = re.compile(r"^[A-Z]{3}$")
_HEX64 = re.compile(r"^[0-9a-f]{64}$")

Clock = Callable[[], float]


class ListingStatus(enum.Enum):
    VALID = "valid"
    BAD_CERT = "bad-cert"
    BAD_SIGNATURE = "bad-signature"
    FINGERPRINT_MISMATCH = "fingerprint-mismatch"
    EXPIRED = "expired"


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ParameterError(message)


@dataclass(frozen=True)
class Listing:
    title: str
    description: str
    price_amount: int
    currency: str
    owner_fingerprint: str
    created_at: int
    expires_at: int
    nonce: int

    def __post_init__(self):
        _require(
            isinstance(self.title, str) and 0 < len(self.title) <= MAX_TITLE_CHARS,
            f"title must be 1..{MAX_TITLE_CHARS} characters",
        )
        _require(
            isinstance(self.description, str)
            and len(self.description) <= MAX_DESCRIPTION_CHARS,
            f"description must be at most {MAX_DESCRIPTION_CHARS} characters",
        )
        _require(
            isinstance(self.price_amount, int)
            and not isinstance(self.price_amount, bool)
            and self.price_amount >= 0,
            "price_amount must be a non-negative integer of minor units",
        )
        _require(
            isinstance(self.currency, str) and bool(_CURRENCY.match(self.currency)),
            "currency must be a 3-letter ISO-4217 code",
        )
        _require(
            isinstance(self.owner_fingerprint, str)
            and bool(_HEX64.match(self.owner_fingerprint)),
            "owner_fingerprint must be 64 lowercase hex characters",
        )
        _require(self.expires_at > self.created_at, "expires_at must be after created_at")
        _require(
            isinstance(self.nonce, int) and 0 <= self.nonce < 2**64,
            "nonce must fit in 64 bits",
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "title": self.title,
            "description": self.description,
            "price_amount": self.price_amount,
            "currency": self.currency,
            "owner_fingerprint": self.owner_fingerprint,
            "created_at": self.created_at,
            "expires_at": self.expires_at,
            "nonce": self.nonce,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Listing":
        if not isinstance(data, Mapping):
            raise EncodingError("listing must be an object")
        try:
            return cls(
                title=data["title"],
                description=data["description"],
                price_amount=data["price_amount"],
                currency=data["currency"],
                owner_fingerprint=data["owner_fingerprint"],
                created_at=int(data["created_at"]),
                expires_at=int(data["expires_at"]),
                nonce=int(data["nonce"]),
            )
        except KeyError as exc:
            raise EncodingError(f"listing missing field {exc}") from None
        except ParameterError:
            raise
        except (TypeError, ValueError) as exc:
            raise EncodingError(str(exc)) from None


def content_id_of(listing: Listing) -> str:
    return hashlib.sha256(canonical_json(listing.to_dict())).hexdigest()


@dataclass(frozen=True)
class SignedListing:
    listing: Listing
    content_id: str
    owner_cert: CertifiedKey
    signature: bytes

    def to_dict(self) -> dict[str, Any]:
        return {
            "listing": self.listing.to_dict(),
            "content_id": self.content_id,
            "owner_cert": self.owner_cert.to_dict(),
            "signature": b64encode(self.signature),
        }

    def canonical_bytes(self) -> bytes:
        return canonical_json(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SignedListing":
        if not isinstance(data, Mapping):
            raise EncodingError("signed listing must be an object")
        try:
            content_id = data["content_id"]
            if not isinstance(content_id, str) or not _HEX64.match(content_id):
                raise EncodingError("content_id must be 64 lowercase hex chars")
            return cls(
                listing=Listing.from_dict(data["listing"]),
                content_id=content_id,
                owner_cert=CertifiedKey.from_dict(data["owner_cert"]),
                signature=b64decode(data["signature"]),
            )
        except KeyError as exc:
            raise EncodingError(f"signed listing missing field {exc}") from None
        except ValueError as exc:
            raise EncodingError(str(exc)) from None


@dataclass(frozen=True)
class Tombstone:
    content_id: str
    removed_at: int
    signature: bytes

    def signed_material(self) -> bytes:
        return canonical_json(
            {"content_id": self.content_id, "removed_at": self.removed_at}
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "content_id": self.content_id,
            "removed_at": self.removed_at,
            "signature": b64encode(self.signature),
        }

    def canonical_bytes(self) -> bytes:
        return canonical_json(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Tombstone":
        if not isinstance(data, Mapping):
            raise EncodingError("tombstone must be an object")
        try:
            content_id = data["content_id"]
            if not isinstance(content_id, str) or not _HEX64.match(content_id):
                raise EncodingError("content_id must be 64 lowercase hex chars")
            return cls(
                content_id=content_id,
                removed_at=int(data["removed_at"]),
                signature=b64decode(data["signature"]),
            )
        except KeyError as exc:
            raise EncodingError(f"tombstone missing field {exc}") from None
        except (TypeError, ValueError) as exc:
            raise EncodingError(str(exc)) from None


def create_signed_listing(
    owner_keys: keys.KeyPair,
    owner_cert: CertifiedKey,
    title: str,
    description: str,
    price_amount: int,
    currency: str,
    ttl_s: int = DEFAULT_TTL_S,
    clock: Clock = time.time,
) -> SignedListing:
    _require(
        keys.public_key_bytes(owner_keys.public_key)
        == keys.public_key_bytes(owner_cert.public_key),
        "certificate does not match the signing key",
    )
    _require(ttl_s > 0, "ttl_s must be positive")
    now = int(clock())
    listing = Listing(
        title=title,
        description=description,
        price_amount=price_amount,
        currency=currency,
        owner_fingerprint=owner_cert.fingerprint,
        created_at=now,
        expires_at=now + int(ttl_s),
        nonce=secrets.randbits(64),
    )
    content_id = content_id_of(listing)
    signature = keys.sign_detached(
        owner_keys.private_key, content_id.encode("ascii")
    )
    return SignedListing(
        listing=listing,
        content_id=content_id,
        owner_cert=owner_cert,
        signature=signature,
    )


def verify_signed_listing(
    server_public_key: rsa.RSAPublicKey,
    sl: SignedListing,
    clock: Clock = time.time,
) -> ListingStatus:
    """Check order: certification, fingerprint binding, signature, expiry."""
    if not verify_certification(server_public_key, sl.owner_cert):
        return ListingStatus.BAD_CERT
    if sl.owner_cert.fingerprint != sl.listing.owner_fingerprint:
        return ListingStatus.FINGERPRINT_MISMATCH
    if content_id_of(sl.listing) != sl.content_id:
        return ListingStatus.BAD_SIGNATURE
    if not keys.verify_detached(
        sl.owner_cert.public_key, sl.content_id.encode("ascii"), sl.signature
    ):
        return ListingStatus.BAD_SIGNATURE
    if sl.listing.expires_at <= clock():
        return ListingStatus.EXPIRED
    return ListingStatus.VALID


def make_tombstone(
    owner_keys: keys.KeyPair, content_id: str, clock: Clock = time.time
) -> Tombstone:
    unsigned = Tombstone(content_id=content_id, removed_at=int(clock()), signature=b"")
    signature = keys.sign_detached(owner_keys.private_key, unsigned.signed_material())
    return Tombstone(
        content_id=content_id, removed_at=unsigned.removed_at, signature=signature
    )


def verify_tombstone(owner_cert: CertifiedKey, tomb: Tombstone) -> bool:
    return keys.verify_detached(
        owner_cert.public_key, tomb.signed_material(), tomb.signature
    )
