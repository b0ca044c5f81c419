"""Key generation, certification, protected key storage, and envelopes."""

from marketpalace.crypto.keys import (
    KeyPair,
    generate_keypair,
    public_key_bytes,
    public_key_from_bytes,
    fingerprint,
    sign_detached,
    verify_detached,
    load_private_key_pem,
    private_key_pem,
)
from marketpalace.crypto.certify import CertifiedKey, certify_key, verify_certification
from marketpalace.crypto.keystore import (
    EncryptedPrivateKey,
    encrypt_private_key,
    decrypt_private_key,
)
from marketpalace.crypto.envelope import Envelope, seal_envelope, open_envelope

__all__ = [
    "KeyPair",
    "generate_keypair",
    "public_key_bytes",
    "public_key_from_bytes",
    "fingerprint",
    "sign_detached",
    "verify_detached",
    "load_private_key_pem",
    "private_key_pem",
    "CertifiedKey",
    "certify_key",
    "verify_certification",
    "EncryptedPrivateKey",
    "encrypt_private_key",
    "decrypt_private_key",
    "Envelope",
    "seal_envelope",
    "open_envelope",
]
