"""Door server configuration file handling."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from marketpalace.errors import ParameterError


@dataclass(frozen=True)
class TlsConfig:
    enabled: bool = False
    cert_path: str = ""
    key_path: str = ""


@dataclass(frozen=True)
class MockIssuerConfig:
    """Dev-only wallet stand-in: lets the sign-up UI request a signed
    fixture disclosure instead of scanning a real wallet app."""

    enabled: bool = False
    issuer_id: str = "mock-issuer"
    private_key_path: str = ""


@dataclass(frozen=True)
class DoorConfig:
    listen_addr: str = "127.0.0.1:8800"
    server_key_path: str = "door_server_key.pem"
    issuer_keys: tuple[dict, ...] = field(default_factory=tuple)
    session_ttl_s: int = 300
    tls: TlsConfig = field(default_factory=TlsConfig)
    mock_issuer: MockIssuerConfig = field(default_factory=MockIssuerConfig)

    @classmethod
    def load(cls, path: str | Path) -> "DoorConfig":
        try:
            data = json.loads(Path(path).read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ParameterError(f"cannot read door config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ParameterError("door config must be a JSON object")
        issuers = data.get("issuer_keys", [])
        if not isinstance(issuers, list):
            raise ParameterError("issuer_keys must be a list")
        for entry in issuers:
            if not isinstance(entry, dict) or not {
                "issuer_id",
                "public_key",
            } <= set(entry):
                raise ParameterError(
                    "each issuer_keys entry needs issuer_id and public_key"
                )
        tls = TlsConfig(**data.get("tls", {}))
        mock = MockIssuerConfig(**data.get("mock_issuer", {}))
        return cls(
            listen_addr=data.get("listen_addr", "127.0.0.1:8800"),
            server_key_path=data.get("server_key_path", "door_server_key.pem"),
            issuer_keys=tuple(issuers),
            session_ttl_s=int(data.get("session_ttl_s", 300)),
            tls=tls,
            mock_issuer=mock,
        )
