"""Registration client: walks the door server's session flow.

start session -> disclose attribute -> submit public key -> store the
certified bundle. Retry-safe before completion: nothing is written until
the server returns a bundle, and rerunning after success is a no-op that
reports the existing bundle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import requests

from marketpalace.canonical import b64encode
from marketpalace.crypto import verify_certification
from marketpalace.crypto import keys as crypto_keys
from marketpalace.crypto.certify import CertifiedKey
from marketpalace.errors import EncodingError, MarketPalaceError, NetworkError
from marketpalace.nodeapp import keyfiles
from marketpalace.nodeapp.config import NodeConfig

logger = logging.getLogger(__name__)

TIMEOUT_S = 10.0


class DuplicateIdentityError(MarketPalaceError):
    """The attribute was used before: the registration was denied."""


class RegistrationRejectedError(MarketPalaceError):
    """The door server rejected the disclosure or the key submission."""


@dataclass(frozen=True)
class RegistrationOutcome:
    cert: CertifiedKey
    already_registered: bool


def _post(url: str, payload: dict | None) -> requests.Response:
    try:
        reply = requests.post(url, json=payload, timeout=TIMEOUT_S)
    except requests.RequestException as exc:
        raise NetworkError(f"door server unreachable: {exc}") from None
    return reply


def fetch_server_public_key(door_url: str):
    try:
        reply = requests.get(f"{door_url}/server-key", timeout=TIMEOUT_S)
        reply.raise_for_status()
        data = reply.json()
    except (requests.RequestException, ValueError) as exc:
        raise NetworkError(f"cannot fetch door server key: {exc}") from None
    from marketpalace.canonical import b64decode

    return crypto_keys.public_key_from_bytes(b64decode(data["public_key"]))


def ensure_server_public_key(config: NodeConfig):
    """Load the pinned door server key, fetching it on first use."""
    path = config.resolve(config.server_public_key_path)
    if path.exists():
        return keyfiles.load_server_public_key(path)
    key = fetch_server_public_key(config.door_server_url)
    keyfiles.write_server_public_key(path, key)
    logger.info("pinned door server key to %s", path)
    return key


def fetch_mock_disclosure(door_url: str, attribute_name: str, attribute_value: str) -> dict:
    reply = _post(
        f"{door_url}/dev/mock-disclosure",
        {"attribute_name": attribute_name, "attribute_value": attribute_value},
    )
    if reply.status_code != 200:
        raise RegistrationRejectedError(
            f"mock issuer refused ({reply.status_code}): {reply.text[:200]}"
        )
    return reply.json()


def register(config: NodeConfig, disclosure: dict) -> RegistrationOutcome:
    """Run the full registration flow against the configured door server."""
    server_key = ensure_server_public_key(config)
    bundle_path = config.resolve(config.key_bundle_path)

    if bundle_path.exists():
        try:
            cert = keyfiles.load_bundle(bundle_path)
        except EncodingError:
            cert = None
        if cert is not None and verify_certification(server_key, cert):
            logger.info("already registered; keeping %s", bundle_path)
            return RegistrationOutcome(cert=cert, already_registered=True)

    public_key = keyfiles.load_public_key(config.key_dir)
    door = config.door_server_url.rstrip("/")

    reply = _post(f"{door}/session", None)
    if reply.status_code != 200:
        raise NetworkError(f"session start failed ({reply.status_code})")
    token = reply.json()["token"]

    reply = _post(f"{door}/session/{token}/disclose", disclosure)
    if reply.status_code != 200:
        raise RegistrationRejectedError(
            f"disclosure refused ({reply.status_code}): {reply.text[:200]}"
        )
    result = reply.json().get("result")
    if result == "duplicate":
        raise DuplicateIdentityError(
            "this identity already registered; the door server denied access"
        )
    if result != "accepted":
        raise RegistrationRejectedError(f"disclosure result: {result}")

    reply = _post(
        f"{door}/session/{token}/complete",
        {"public_key": b64encode(crypto_keys.public_key_bytes(public_key))},
    )
    if reply.status_code != 200:
        raise RegistrationRejectedError(
            f"completion refused ({reply.status_code}): {reply.text[:200]}"
        )
    bundle = reply.json()
    cert = CertifiedKey.from_dict(bundle)
    if not verify_certification(server_key, cert):
        raise RegistrationRejectedError(
            "returned certification does not verify under the pinned server key"
        )
    keyfiles.write_bundle(bundle_path, cert, created_at=bundle.get("created_at"))
    logger.info("registration complete; bundle stored at %s", bundle_path)
    return RegistrationOutcome(cert=cert, already_registered=False)
