"""Shared fixtures.

RSA key generation is the slow primitive (~80 ms each), so tests draw
from a session-scoped pool instead of generating keys inline.
"""

from __future__ import annotations

import pytest

from marketpalace.crypto import KeyPair, certify_key, generate_keypair

POOL_SIZE = 10


@pytest.fixture(scope="session")
def keypool() -> list[KeyPair]:
    return [generate_keypair(2048) for _ in range(POOL_SIZE)]


@pytest.fixture(scope="session")
def server_keys(keypool) -> KeyPair:
    """The door server's signing key pair."""
    return keypool[0]


@pytest.fixture(scope="session")
def other_server_keys(keypool) -> KeyPair:
    """A second, unrelated certification authority."""
    return keypool[1]


@pytest.fixture(scope="session")
def user_keys(keypool) -> KeyPair:
    return keypool[2]


@pytest.fixture(scope="session")
def user_cert(server_keys, user_keys):
    return certify_key(server_keys.private_key, user_keys.public_key)
