"""Door-server certification of user public keys.

A CertifiedKey is the admission ticket to the market: the user's public
key plus the door server's detached signature over its canonical bytes.
Every node holds the door server's public key and checks certifications
before trusting any peer, listing owner, or envelope sender.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Any, Mapping

from cryptography.hazmat.primitives.asymmetric import rsa

from marketpalace.canonical import b64decode, b64encode, canonical_json
from marketpalace.crypto import keys
from marketpalace.errors import EncodingError


@dataclass(frozen=True)
class CertifiedKey:
    public_key: rsa.RSAPublicKey
    certification: bytes

    def to_dict(self) -> dict[str, str]:
        return {
            "public_key": b64encode(keys.public_key_bytes(self.public_key)),
            "certification": b64encode(self.certification),
        }

    def canonical_bytes(self) -> bytes:
        return canonical_json(self.to_dict())

    @property
    def fingerprint(self) -> str:
        return keys.fingerprint(self.public_key)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CertifiedKey":
        if not isinstance(data, Mapping):
            raise EncodingError("certified key must be an object")
        try:
            pk = keys.public_key_from_bytes(b64decode(data["public_key"]))
            cert = b64decode(data["certification"])
        except KeyError as exc:
            raise EncodingError(f"certified key missing field {exc}") from None
        except ValueError as exc:
            raise EncodingError(str(exc)) from None
        return cls(public_key=pk, certification=cert)


def certify_key(
    server_private_key: rsa.RSAPrivateKey, user_public_key: rsa.RSAPublicKey
) -> CertifiedKey:
    """Sign the canonical bytes of ``user_public_key`` with the server key."""
    der = keys.public_key_bytes(user_public_key)
    signature = keys.sign_detached(server_private_key, der)
    return CertifiedKey(public_key=user_public_key, certification=signature)


def verify_certification(
    server_public_key: rsa.RSAPublicKey, cert: CertifiedKey
) -> bool:
    """True iff the certification is the server's signature over the key."""
    try:
        der = keys.public_key_bytes(cert.public_key)
    except Exception:
        return False
    return keys.verify_detached(server_public_key, der, cert.certification)


def bundle_dict(cert: CertifiedKey, created_at: int | None = None) -> dict:
    """Key bundle file content: {public_key, certification, created_at}."""
    data: dict = cert.to_dict()
    data["created_at"] = int(time.time()) if created_at is None else int(created_at)
    return data


def bundle_from_dict(data: Mapping[str, Any]) -> CertifiedKey:
    return CertifiedKey.from_dict(data)
