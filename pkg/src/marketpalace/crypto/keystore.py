"""Passphrase-protected private key storage.

The private key (PKCS#8 DER) is encrypted with AES-256-GCM under a key
derived from the passphrase via PBKDF2-HMAC-SHA256 (>= 100,000 iterations,
fresh 16-byte salt and 12-byte nonce per encryption). The stored JSON is
exactly {ciphertext, kdf_salt, kdf_iterations, nonce}, byte fields base64.

The ciphertext field internally starts with an 8-byte key-check value
(truncated SHA-256 of the derived key and salt) so a wrong passphrase is
reported as an authentication failure while a tampered or truncated
ciphertext under the correct passphrase is reported as corrupt data; the
KCV leaks nothing an attacker could not already test against the GCM tag.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from typing import Any, Mapping

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.pbkdf2 import PBKDF2HMAC
from cryptography.hazmat.primitives.asymmetric import rsa

from marketpalace.canonical import b64decode, b64encode
from marketpalace.crypto import keys
from marketpalace.errors import (
    AuthenticationError,
    CorruptDataError,
    EncodingError,
    ParameterError,
)

MIN_PASSPHRASE_CHARS = 8
MIN_KDF_ITERATIONS = 100_000
DEFAULT_KDF_ITERATIONS = 100_000

_SALT_LEN = 16
_NONCE_LEN = 12
_KCV_LEN = 8
_GCM_TAG_LEN = 16


@dataclass(frozen=True)
class EncryptedPrivateKey:
    ciphertext: bytes
    kdf_salt: bytes
    kdf_iterations: int
    nonce: bytes

    def to_dict(self) -> dict[str, Any]:
        return {
            "ciphertext": b64encode(self.ciphertext),
            "kdf_salt": b64encode(self.kdf_salt),
            "kdf_iterations": int(self.kdf_iterations),
            "nonce": b64encode(self.nonce),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EncryptedPrivateKey":
        try:
            return cls(
                ciphertext=b64decode(data["ciphertext"]),
                kdf_salt=b64decode(data["kdf_salt"]),
                kdf_iterations=int(data["kdf_iterations"]),
                nonce=b64decode(data["nonce"]),
            )
        except KeyError as exc:
            raise EncodingError(f"encrypted key missing field {exc}") from None
        except (ValueError, TypeError) as exc:
            raise EncodingError(str(exc)) from None


def _derive_key(passphrase: str, salt: bytes, iterations: int) -> bytes:
    kdf = PBKDF2HMAC(
        algorithm=hashes.SHA256(), length=32, salt=salt, iterations=iterations
    )
    return kdf.derive(passphrase.encode("utf-8"))


def _kcv(derived_key: bytes, salt: bytes) -> bytes:
    return hashlib.sha256(b"marketpalace-kcv" + derived_key + salt).digest()[:_KCV_LEN]


def encrypt_private_key(
    private_key: rsa.RSAPrivateKey,
    passphrase: str,
    kdf_iterations: int = DEFAULT_KDF_ITERATIONS,
) -> EncryptedPrivateKey:
    if len(passphrase) < MIN_PASSPHRASE_CHARS:
        raise ParameterError(
            f"passphrase must be at least {MIN_PASSPHRASE_CHARS} characters"
        )
    if kdf_iterations < MIN_KDF_ITERATIONS:
        raise ParameterError(
            f"kdf_iterations must be >= {MIN_KDF_ITERATIONS}"
        )
    salt = os.urandom(_SALT_LEN)
    nonce = os.urandom(_NONCE_LEN)
    derived = _derive_key(passphrase, salt, kdf_iterations)
    body = AESGCM(derived).encrypt(nonce, keys.private_key_der(private_key), None)
    return EncryptedPrivateKey(
        ciphertext=_kcv(derived, salt) + body,
        kdf_salt=salt,
        kdf_iterations=kdf_iterations,
        nonce=nonce,
    )


def decrypt_private_key(enc: EncryptedPrivateKey, passphrase: str) -> rsa.RSAPrivateKey:
    if len(enc.kdf_salt) != _SALT_LEN or len(enc.nonce) != _NONCE_LEN:
        raise CorruptDataError("salt or nonce has the wrong length")
    if enc.kdf_iterations < 1:
        raise CorruptDataError("non-positive kdf_iterations")
    if len(enc.ciphertext) < _KCV_LEN + _GCM_TAG_LEN:
        raise CorruptDataError("ciphertext too short")
    derived = _derive_key(passphrase, enc.kdf_salt, enc.kdf_iterations)
    kcv, body = enc.ciphertext[:_KCV_LEN], enc.ciphertext[_KCV_LEN:]
    if kcv != _kcv(derived, enc.kdf_salt):
        raise AuthenticationError("wrong passphrase")
    try:
        der = AESGCM(derived).decrypt(enc.nonce, body, None)
    except InvalidTag:
        raise CorruptDataError("ciphertext failed integrity check") from None
    return keys.private_key_from_der(der)
