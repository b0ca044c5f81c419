"""Issuer-verified attribute disclosures.

The identity platform is abstracted behind a trusted-issuer interface:
an issuer signs (attribute_name, attribute_value, issuer_id) assertions,
and the door server verifies them against a configured set of issuer
public keys. AttributeIssuer doubles as the mock issuer used in tests
and development fixtures.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

from cryptography.hazmat.primitives.asymmetric import rsa

from marketpalace.canonical import b64decode, b64encode, canonical_json
from marketpalace.crypto import keys
from marketpalace.errors import EncodingError


@dataclass(frozen=True)
class AttributeDisclosure:
    attribute_name: str
    attribute_value: str
    issuer_id: str
    issuer_signature: bytes

    def signed_material(self) -> bytes:
        return canonical_json(
            {
                "attribute_name": self.attribute_name,
                "attribute_value": self.attribute_value,
                "issuer_id": self.issuer_id,
            }
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "attribute_name": self.attribute_name,
            "attribute_value": self.attribute_value,
            "issuer_id": self.issuer_id,
            "issuer_signature": b64encode(self.issuer_signature),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AttributeDisclosure":
        if not isinstance(data, Mapping):
            raise EncodingError("disclosure must be an object")
        try:
            name = data["attribute_name"]
            value = data["attribute_value"]
            issuer = data["issuer_id"]
            sig = b64decode(data["issuer_signature"])
        except KeyError as exc:
            raise EncodingError(f"disclosure missing field {exc}") from None
        except ValueError as exc:
            raise EncodingError(str(exc)) from None
        if not all(isinstance(x, str) for x in (name, value, issuer)):
            raise EncodingError("disclosure fields must be strings")
        return cls(name, value, issuer, sig)


class AttributeIssuer:
    """A trusted issuer that signs attribute assertions (mock wallet side)."""

    def __init__(self, issuer_id: str, private_key: rsa.RSAPrivateKey):
        self.issuer_id = issuer_id
        self._private_key = private_key
        self.public_key = private_key.public_key()

    def issue(self, attribute_name: str, attribute_value: str) -> AttributeDisclosure:
        unsigned = AttributeDisclosure(
            attribute_name=attribute_name,
            attribute_value=attribute_value,
            issuer_id=self.issuer_id,
            issuer_signature=b"",
        )
        sig = keys.sign_detached(self._private_key, unsigned.signed_material())
        return AttributeDisclosure(
            attribute_name, attribute_value, self.issuer_id, sig
        )


class IssuerRegistry:
    """The door server's view: issuer_id -> trusted public key."""

    def __init__(self, issuers: Mapping[str, rsa.RSAPublicKey] | None = None):
        self._issuers: dict[str, rsa.RSAPublicKey] = dict(issuers or {})

    def add(self, issuer_id: str, public_key: rsa.RSAPublicKey) -> None:
        self._issuers[issuer_id] = public_key

    def verify(self, disclosure: AttributeDisclosure) -> tuple[bool, str]:
        """Returns (valid, reason); reason is empty on success."""
        issuer_key = self._issuers.get(disclosure.issuer_id)
        if issuer_key is None:
            return False, "unknown-issuer"
        if not keys.verify_detached(
            issuer_key, disclosure.signed_material(), disclosure.issuer_signature
        ):
            return False, "bad-signature"
        return True, ""
