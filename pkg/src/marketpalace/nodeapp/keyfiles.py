"""On-disk key material.

A key directory (the parent of the configured key bundle path) holds:

  private_key.json   {ciphertext, kdf_salt, kdf_iterations, nonce}
  public_key.json    {public_key, created_at}
  key_bundle.json    {public_key, certification, created_at}   (after
                     registration; path given by NodeConfig)

plus the node's trusted door server key as server_public_key.json
({public_key}), all byte fields base64.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

from cryptography.hazmat.primitives.asymmetric import rsa

from marketpalace.canonical import b64decode, b64encode, canonical_json
from marketpalace.crypto import (
    CertifiedKey,
    EncryptedPrivateKey,
    KeyPair,
    decrypt_private_key,
    encrypt_private_key,
)
from marketpalace.crypto import keys as crypto_keys
from marketpalace.crypto.certify import bundle_dict
from marketpalace.errors import EncodingError, ParameterError

PRIVATE_KEY_NAME = "private_key.json"
PUBLIC_KEY_NAME = "public_key.json"


def _write_json(path: Path, data: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(canonical_json(data) + b"\n")


def _read_json(path: Path) -> dict:
    try:
        data = json.loads(path.read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise EncodingError(f"cannot read {path}: {exc}") from None
    if not isinstance(data, dict):
        raise EncodingError(f"{path} must hold a JSON object")
    return data


def write_keypair(
    directory: str | Path,
    keypair: KeyPair,
    passphrase: str,
    force: bool = False,
    kdf_iterations: int | None = None,
) -> tuple[Path, Path]:
    """Write encrypted private key and public key files; refuses to
    overwrite existing key material unless forced."""
    directory = Path(directory)
    private_path = directory / PRIVATE_KEY_NAME
    public_path = directory / PUBLIC_KEY_NAME
    if not force:
        for path in (private_path, public_path):
            if path.exists():
                raise ParameterError(
                    f"{path} already exists; pass force to overwrite"
                )
    kwargs = {} if kdf_iterations is None else {"kdf_iterations": kdf_iterations}
    enc = encrypt_private_key(keypair.private_key, passphrase, **kwargs)
    _write_json(private_path, enc.to_dict())
    _write_json(
        public_path,
        {
            "public_key": b64encode(crypto_keys.public_key_bytes(keypair.public_key)),
            "created_at": int(time.time()),
        },
    )
    return private_path, public_path


def load_public_key(directory: str | Path) -> rsa.RSAPublicKey:
    data = _read_json(Path(directory) / PUBLIC_KEY_NAME)
    return crypto_keys.public_key_from_bytes(b64decode(data["public_key"]))


def load_keypair(directory: str | Path, passphrase: str) -> KeyPair:
    data = _read_json(Path(directory) / PRIVATE_KEY_NAME)
    enc = EncryptedPrivateKey.from_dict(data)
    private_key = decrypt_private_key(enc, passphrase)
    return KeyPair(private_key=private_key, public_key=private_key.public_key())


def write_bundle(path: str | Path, cert: CertifiedKey, created_at: int | None = None) -> None:
    _write_json(Path(path), bundle_dict(cert, created_at))


def load_bundle(path: str | Path) -> CertifiedKey:
    return CertifiedKey.from_dict(_read_json(Path(path)))


def write_server_public_key(path: str | Path, public_key: rsa.RSAPublicKey) -> None:
    _write_json(
        Path(path),
        {"public_key": b64encode(crypto_keys.public_key_bytes(public_key))},
    )


def load_server_public_key(path: str | Path) -> rsa.RSAPublicKey:
    data = _read_json(Path(path))
    return crypto_keys.public_key_from_bytes(b64decode(data["public_key"]))
