"""HTTP surface of the door server.

POST /session                      -> {token, qr_payload}
POST /session/{token}/disclose     -> {result: accepted|duplicate|invalid}
POST /session/{token}/complete     -> certified key bundle
GET  /server-key                   -> {public_key}
POST /dev/mock-disclosure          -> signed fixture disclosure (flag-gated)

Unknown tokens are 404, out-of-order or expired sessions 409, malformed
bodies 400.
"""

from __future__ import annotations

import logging
import ssl
import time
from pathlib import Path

from marketpalace.canonical import b64encode
from marketpalace.crypto import keys as crypto_keys
from marketpalace.crypto.certify import bundle_dict
from marketpalace.door.attributes import AttributeDisclosure, AttributeIssuer, IssuerRegistry
from marketpalace.door.config import DoorConfig
from marketpalace.door.hashstore import HashStore
from marketpalace.door.service import DoorService, UnknownSessionError
from marketpalace.errors import EncodingError, SessionError
from marketpalace.httpbase import ApiError, JsonApiServer, parse_hostport, route
from marketpalace.canonical import b64decode

logger = logging.getLogger(__name__)


class DoorHttpServer:
    def __init__(
        self,
        service: DoorService,
        host: str,
        port: int,
        mock_issuer: AttributeIssuer | None = None,
        tls_context: ssl.SSLContext | None = None,
    ):
        self.service = service
        self._mock_issuer = mock_issuer
        routes = [
            route("POST", r"/session", self._start_session),
            route("POST", r"/session/([0-9a-f]{32})/disclose", self._disclose),
            route("POST", r"/session/([0-9a-f]{32})/complete", self._complete),
            route("GET", r"/server-key", self._server_key),
            route("POST", r"/dev/mock-disclosure", self._mock_disclosure),
        ]
        self._server = JsonApiServer(host, port, routes, tls_context=tls_context)
        # When bound to port 0, advertise the real port in QR payloads.
        if service.public_host.endswith(":0"):
            service.public_host = f"{host}:{self._server.port}"

    # -- endpoints -----------------------------------------------------

    def _start_session(self, match, body):
        token, qr_payload = self.service.start_session()
        return {"token": token.token, "qr_payload": qr_payload}

    def _disclose(self, match, body):
        if not isinstance(body, dict):
            raise ApiError(400, "missing-body", "expected an AttributeDisclosure")
        try:
            disclosure = AttributeDisclosure.from_dict(body)
        except EncodingError as exc:
            raise ApiError(400, "malformed-disclosure", str(exc)) from None
        result = self._session_call(
            lambda: self.service.disclose(match.group(1), disclosure)
        )
        return {"result": result.value}

    def _complete(self, match, body):
        if not isinstance(body, dict) or "public_key" not in body:
            raise ApiError(400, "missing-public-key")
        try:
            public_key = crypto_keys.public_key_from_bytes(
                b64decode(body["public_key"])
            )
        except (EncodingError, ValueError) as exc:
            raise ApiError(400, "malformed-public-key", str(exc)) from None
        cert = self._session_call(
            lambda: self.service.complete_registration(match.group(1), public_key)
        )
        return bundle_dict(cert, created_at=int(time.time()))

    def _server_key(self, match, body):
        return {
            "public_key": b64encode(
                crypto_keys.public_key_bytes(self.service.server_public_key)
            )
        }

    def _mock_disclosure(self, match, body):
        if self._mock_issuer is None:
            raise ApiError(404, "mock-issuer-disabled")
        if not isinstance(body, dict):
            raise ApiError(400, "missing-body")
        name = body.get("attribute_name")
        value = body.get("attribute_value")
        if not isinstance(name, str) or not isinstance(value, str) or not value:
            raise ApiError(400, "missing-attribute")
        return self._mock_issuer.issue(name, value).to_dict()

    @staticmethod
    def _session_call(fn):
        try:
            return fn()
        except UnknownSessionError as exc:
            raise ApiError(404, "unknown-session", str(exc)) from None
        except SessionError as exc:
            raise ApiError(409, "session-state", str(exc)) from None

    # -- lifecycle ------------------------------------------------------

    @property
    def address(self) -> str:
        return self._server.address

    @property
    def port(self) -> int:
        return self._server.port

    def start(self) -> None:
        self._server.start()

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def stop(self) -> None:
        self._server.stop()


def build_door_server(
    config: DoorConfig, base_dir: str | Path = "."
) -> DoorHttpServer:
    """Assemble the full door server from a config file's contents."""
    base = Path(base_dir)

    def resolve(p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else base / path

    key_path = resolve(config.server_key_path)
    server_keys = crypto_keys.load_private_key_pem(key_path.read_bytes())

    registry = IssuerRegistry()
    for entry in config.issuer_keys:
        registry.add(
            entry["issuer_id"],
            crypto_keys.public_key_from_bytes(b64decode(entry["public_key"])),
        )

    mock_issuer = None
    if config.mock_issuer.enabled:
        mock_keys = crypto_keys.load_private_key_pem(
            resolve(config.mock_issuer.private_key_path).read_bytes()
        )
        mock_issuer = AttributeIssuer(
            config.mock_issuer.issuer_id, mock_keys.private_key
        )
        registry.add(mock_issuer.issuer_id, mock_issuer.public_key)

    host, port = parse_hostport(config.listen_addr)
    store = HashStore(base / "hashes.txt")
    service = DoorService(
        server_keys.private_key,
        registry,
        store,
        public_host=config.listen_addr,
        session_ttl_s=config.session_ttl_s,
    )

    tls_context = None
    if config.tls.enabled:
        tls_context = ssl.SSLContext(ssl.PROTOCOL_TLS_SERVER)
        tls_context.load_cert_chain(
            certfile=resolve(config.tls.cert_path),
            keyfile=resolve(config.tls.key_path),
        )

    return DoorHttpServer(service, host, port, mock_issuer, tls_context)
