"""Registration sessions and the one-identity gate.

A session walks created -> attributes-verified -> completed; any state
may expire. Disclosure hashes the attribute value (SHA-256 of the exact
UTF-8 string, unsalted so duplicates are detectable across sessions) and
admits it only if never seen before; completion certifies the user's
public key exactly once per session.

Attribute values are never persisted or logged in plaintext: only their
hashes reach the store, and log lines carry hashes truncated to 12 chars.
"""

from __future__ import annotations

import enum
import hashlib
import logging
import secrets
import threading
import time
from dataclasses import dataclass, field
from typing import Callable
from urllib.parse import parse_qs, urlsplit

from cryptography.hazmat.primitives.asymmetric import rsa

from marketpalace.crypto import CertifiedKey, certify_key
from marketpalace.door.attributes import AttributeDisclosure, IssuerRegistry
from marketpalace.door.hashstore import HashStore
from marketpalace.errors import SessionError

logger = logging.getLogger(__name__)


class UnknownSessionError(SessionError):
    """No session with that token."""


DEFAULT_SESSION_TTL_S = 300

QR_SCHEME = "marketpalace"


class SessionState(enum.Enum):
    CREATED = "created"
    ATTRIBUTES_VERIFIED = "attributes-verified"
    COMPLETED = "completed"
    EXPIRED = "expired"


class DisclosureResult(enum.Enum):
    ACCEPTED = "accepted"
    DUPLICATE = "duplicate"
    INVALID = "invalid"


@dataclass
class SessionToken:
    token: str
    state: SessionState = SessionState.CREATED
    created_at: int = field(default_factory=lambda: int(time.time()))
    attribute_hash: str | None = None
    # Serializes state transitions on this one token.
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


def hash_attribute(attribute_value: str) -> str:
    return hashlib.sha256(attribute_value.encode("utf-8")).hexdigest()


def make_qr_payload(host: str, token: str) -> str:
    return f"{QR_SCHEME}://register?host={host}&token={token}"


def parse_qr_payload(payload: str) -> tuple[str, str]:
    """Inverse of make_qr_payload: returns (host, token)."""
    parts = urlsplit(payload)
    if parts.scheme != QR_SCHEME or parts.netloc != "register":
        raise ValueError(f"not a registration URI: {payload!r}")
    query = parse_qs(parts.query)
    try:
        return query["host"][0], query["token"][0]
    except (KeyError, IndexError):
        raise ValueError("registration URI missing host or token") from None


class DoorService:
    """Session orchestration over an issuer registry and a hash store."""

    def __init__(
        self,
        server_private_key: rsa.RSAPrivateKey,
        issuers: IssuerRegistry,
        store: HashStore,
        public_host: str = "localhost:0",
        session_ttl_s: int = DEFAULT_SESSION_TTL_S,
        clock: Callable[[], float] = time.time,
    ):
        self._server_private_key = server_private_key
        self.server_public_key = server_private_key.public_key()
        self._issuers = issuers
        self._store = store
        self.public_host = public_host
        self._ttl = session_ttl_s
        self._clock = clock
        self._sessions: dict[str, SessionToken] = {}
        self._lock = threading.Lock()

    # -- sessions ----------------------------------------------------

    def start_session(self) -> tuple[SessionToken, str]:
        token = SessionToken(
            token=secrets.token_hex(16), created_at=int(self._clock())
        )
        with self._lock:
            self._sessions[token.token] = token
        return token, make_qr_payload(self.public_host, token.token)

    def _get_live(self, token: str) -> SessionToken:
        with self._lock:
            session = self._sessions.get(token)
        if session is None:
            raise UnknownSessionError("unknown session token")
        if (
            session.state is not SessionState.EXPIRED
            and session.state is not SessionState.COMPLETED
            and self._clock() - session.created_at > self._ttl
        ):
            session.state = SessionState.EXPIRED
        if session.state is SessionState.EXPIRED:
            raise SessionError("session expired")
        return session

    def expire_sessions(self, now: float | None = None) -> int:
        now = self._clock() if now is None else now
        count = 0
        with self._lock:
            for session in self._sessions.values():
                if session.state in (SessionState.COMPLETED, SessionState.EXPIRED):
                    continue
                if now - session.created_at > self._ttl:
                    session.state = SessionState.EXPIRED
                    count += 1
        return count

    # -- registration steps -------------------------------------------

    def verify_attribute_assertion(self, d: AttributeDisclosure) -> bool:
        ok, reason = self._issuers.verify(d)
        if not ok:
            logger.info("attribute assertion rejected (%s)", reason)
        return ok

    def disclose(self, token: str, d: AttributeDisclosure) -> DisclosureResult:
        session = self._get_live(token)
        with session.lock:
            if session.state is not SessionState.CREATED:
                raise SessionError(f"cannot disclose in state {session.state.value}")
            if not self.verify_attribute_assertion(d):
                return DisclosureResult.INVALID
            idhash = hash_attribute(d.attribute_value)
            if not self._store.insert_if_absent(idhash):
                # Same identity seen before: deny access, burn the session.
                session.state = SessionState.EXPIRED
                logger.info("duplicate identity %s…, access denied", idhash[:12])
                return DisclosureResult.DUPLICATE
            session.attribute_hash = idhash
            session.state = SessionState.ATTRIBUTES_VERIFIED
            logger.info("identity %s… admitted", idhash[:12])
            return DisclosureResult.ACCEPTED

    def complete_registration(
        self, token: str, user_public_key: rsa.RSAPublicKey
    ) -> CertifiedKey:
        session = self._get_live(token)
        with session.lock:
            if session.state is not SessionState.ATTRIBUTES_VERIFIED:
                raise SessionError(
                    f"cannot complete in state {session.state.value}"
                )
            session.state = SessionState.COMPLETED
        return certify_key(self._server_private_key, user_public_key)
