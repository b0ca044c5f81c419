"""RSA key pairs, detached signatures, and the canonical public key form.

The canonical encoding of a public key is its DER SubjectPublicKeyInfo; it
is the byte string that gets signed during certification, hashed into
fingerprints and peer ids, and base64-embedded in JSON bundles.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import padding, rsa

from marketpalace.errors import EncodingError, ParameterError

MIN_MODULUS_BITS = 2048

_PSS = padding.PSS(
    mgf=padding.MGF1(hashes.SHA256()),
    salt_length=hashes.SHA256.digest_size,
)


@dataclass(frozen=True)
class KeyPair:
    """An RSA key pair; the public half is what gets certified."""

    private_key: rsa.RSAPrivateKey
    public_key: rsa.RSAPublicKey

    @property
    def modulus_bits(self) -> int:
        return self.public_key.key_size


def generate_keypair(bits: int = MIN_MODULUS_BITS) -> KeyPair:
    """Generate a fresh RSA key pair with modulus of at least 2048 bits."""
    if bits < MIN_MODULUS_BITS:
        raise ParameterError(
            f"modulus must be >= {MIN_MODULUS_BITS} bits, got {bits}"
        )
    private = rsa.generate_private_key(public_exponent=65537, key_size=bits)
    return KeyPair(private_key=private, public_key=private.public_key())


def public_key_bytes(public_key: rsa.RSAPublicKey) -> bytes:
    """Canonical encoding: DER SubjectPublicKeyInfo."""
    return public_key.public_bytes(
        encoding=serialization.Encoding.DER,
        format=serialization.PublicFormat.SubjectPublicKeyInfo,
    )


def public_key_from_bytes(der: bytes) -> rsa.RSAPublicKey:
    try:
        key = serialization.load_der_public_key(der)
    except Exception as exc:
        raise EncodingError(f"malformed public key: {exc}") from None
    if not isinstance(key, rsa.RSAPublicKey):
        raise EncodingError("public key is not RSA")
    return key


def fingerprint(public_key: rsa.RSAPublicKey) -> str:
    """SHA-256 over the canonical public key bytes, lowercase hex."""
    return hashlib.sha256(public_key_bytes(public_key)).hexdigest()


def sign_detached(private_key: rsa.RSAPrivateKey, message: bytes) -> bytes:
    """RSA-PSS signature over the SHA-256 digest of ``message``."""
    return private_key.sign(message, _PSS, hashes.SHA256())


def verify_detached(
    public_key: rsa.RSAPublicKey, message: bytes, signature: bytes
) -> bool:
    if not isinstance(signature, (bytes, bytearray)):
        return False
    try:
        public_key.verify(bytes(signature), message, _PSS, hashes.SHA256())
        return True
    except Exception:
        return False


def private_key_pem(private_key: rsa.RSAPrivateKey) -> bytes:
    return private_key.private_bytes(
        encoding=serialization.Encoding.PEM,
        format=serialization.PrivateFormat.PKCS8,
        encryption_algorithm=serialization.NoEncryption(),
    )


def load_private_key_pem(pem: bytes) -> KeyPair:
    try:
        key = serialization.load_pem_private_key(pem, password=None)
    except Exception as exc:
        raise EncodingError(f"malformed private key: {exc}") from None
    if not isinstance(key, rsa.RSAPrivateKey):
        raise EncodingError("private key is not RSA")
    return KeyPair(private_key=key, public_key=key.public_key())


def private_key_der(private_key: rsa.RSAPrivateKey) -> bytes:
    return private_key.private_bytes(
        encoding=serialization.Encoding.DER,
        format=serialization.PrivateFormat.PKCS8,
        encryption_algorithm=serialization.NoEncryption(),
    )


def private_key_from_der(der: bytes) -> rsa.RSAPrivateKey:
    try:
        key = serialization.load_der_private_key(der, password=None)
    except Exception as exc:
        raise EncodingError(f"malformed private key: {exc}") from None
    if not isinstance(key, rsa.RSAPrivateKey):
        raise EncodingError("private key is not RSA")
    return key
