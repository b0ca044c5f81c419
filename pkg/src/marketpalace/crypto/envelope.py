"""Encrypted, authenticated direct-message envelopes.

Hybrid pipeline: the payload is encrypted with a fresh AES-256-GCM key,
that key is wrapped under the receiver's RSA public key (OAEP), the
sender attaches its server-certified key, and signs the whole thing.

Opening follows the receiver-side order: decrypt first, then check the
sender's certification under the door server key, then the envelope
signature under the sender's key; any failure rejects the envelope with
a distinct error.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass
from typing import Any, Mapping

from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric import padding, rsa
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from marketpalace.canonical import b64decode, b64encode, canonical_json
from marketpalace.crypto import keys
from marketpalace.crypto.certify import CertifiedKey, verify_certification
from marketpalace.errors import (
    BadCertificateError,
    BadSignatureError,
    DecryptionError,
    EncodingError,
    ParameterError,
)

_NONCE_LEN = 12

_OAEP = padding.OAEP(
    mgf=padding.MGF1(algorithm=hashes.SHA256()),
    algorithm=hashes.SHA256(),
    label=None,
)


@dataclass(frozen=True)
class Envelope:
    ciphertext: bytes
    wrapped_key: bytes
    sender_cert: CertifiedKey
    signature: bytes
    timestamp: int

    def signed_material(self) -> bytes:
        return canonical_json(
            {
                "ciphertext": b64encode(self.ciphertext),
                "wrapped_key": b64encode(self.wrapped_key),
                "sender_cert": self.sender_cert.to_dict(),
                "timestamp": int(self.timestamp),
            }
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "ciphertext": b64encode(self.ciphertext),
            "wrapped_key": b64encode(self.wrapped_key),
            "sender_cert": self.sender_cert.to_dict(),
            "signature": b64encode(self.signature),
            "timestamp": int(self.timestamp),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Envelope":
        if not isinstance(data, Mapping):
            raise EncodingError("envelope must be an object")
        try:
            return cls(
                ciphertext=b64decode(data["ciphertext"]),
                wrapped_key=b64decode(data["wrapped_key"]),
                sender_cert=CertifiedKey.from_dict(data["sender_cert"]),
                signature=b64decode(data["signature"]),
                timestamp=int(data["timestamp"]),
            )
        except KeyError as exc:
            raise EncodingError(f"envelope missing field {exc}") from None
        except (ValueError, TypeError) as exc:
            raise EncodingError(str(exc)) from None


def seal_envelope(
    sender_private_key: rsa.RSAPrivateKey,
    sender_cert: CertifiedKey,
    receiver_public_key: rsa.RSAPublicKey,
    plaintext: bytes,
    timestamp: int | None = None,
) -> Envelope:
    """Encrypt ``plaintext`` to the receiver and sign the envelope."""
    if keys.public_key_bytes(sender_private_key.public_key()) != keys.public_key_bytes(
        sender_cert.public_key
    ):
        raise ParameterError("sender certificate does not match the private key")
    payload_key = AESGCM.generate_key(bit_length=256)
    nonce = os.urandom(_NONCE_LEN)
    body = AESGCM(payload_key).encrypt(nonce, plaintext, None)
    wrapped = receiver_public_key.encrypt(payload_key, _OAEP)
    ts = int(time.time()) if timestamp is None else int(timestamp)
    unsigned = Envelope(
        ciphertext=nonce + body,
        wrapped_key=wrapped,
        sender_cert=sender_cert,
        signature=b"",
        timestamp=ts,
    )
    signature = keys.sign_detached(sender_private_key, unsigned.signed_material())
    return Envelope(
        ciphertext=unsigned.ciphertext,
        wrapped_key=unsigned.wrapped_key,
        sender_cert=sender_cert,
        signature=signature,
        timestamp=ts,
    )


def open_envelope(
    receiver_private_key: rsa.RSAPrivateKey,
    server_public_key: rsa.RSAPublicKey,
    env: Envelope,
) -> tuple[bytes, rsa.RSAPublicKey]:
    """Decrypt and authenticate; returns (plaintext, sender public key).

    Raises DecryptionError (wrong recipient or mangled ciphertext),
    BadCertificateError (sender not certified by the server), or
    BadSignatureError (envelope tampered after signing).
    """
    try:
        payload_key = receiver_private_key.decrypt(env.wrapped_key, _OAEP)
    except Exception:
        raise DecryptionError("cannot unwrap payload key (wrong recipient?)") from None
    if len(env.ciphertext) < _NONCE_LEN:
        raise DecryptionError("ciphertext too short")
    nonce, body = env.ciphertext[:_NONCE_LEN], env.ciphertext[_NONCE_LEN:]
    try:
        plaintext = AESGCM(payload_key).decrypt(nonce, body, None)
    except Exception:
        raise DecryptionError("payload failed authenticated decryption") from None

    if not verify_certification(server_public_key, env.sender_cert):
        raise BadCertificateError("sender key is not certified by the door server")

    if not keys.verify_detached(
        env.sender_cert.public_key, env.signed_material(), env.signature
    ):
        raise BadSignatureError("envelope signature does not verify")

    return plaintext, env.sender_cert.public_key
