"""Node configuration file handling."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from marketpalace.errors import ParameterError
from marketpalace.httpbase import is_loopback, parse_hostport

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NodeConfig:
    listen_addr: str = "127.0.0.1:0"
    api_addr: str = "127.0.0.1:0"
    bootstrap_addrs: tuple[str, ...] = field(default_factory=tuple)
    door_server_url: str = "http://127.0.0.1:8800"
    server_public_key_path: str = "keys/server_public_key.json"
    key_bundle_path: str = "keys/key_bundle.json"
    timer_period_s: float = 90.0
    k: int = 20
    data_dir: str = "data"
    base_dir: Path = field(default_factory=Path, compare=False)

    def __post_init__(self):
        if self.timer_period_s <= 0:
            raise ParameterError("timer_period_s must be positive")
        if self.k < 1:
            raise ParameterError("k must be >= 1")
        for name, addr in (("listen_addr", self.listen_addr), ("api_addr", self.api_addr)):
            try:
                parse_hostport(addr)
            except ValueError as exc:
                raise ParameterError(f"{name}: {exc}") from None
        api_host, _ = parse_hostport(self.api_addr)
        if not is_loopback(api_host):
            logger.warning(
                "api_addr %s is not loopback; the local API has no "
                "authentication and should not be exposed",
                self.api_addr,
            )

    def resolve(self, p: str | Path) -> Path:
        path = Path(p)
        return path if path.is_absolute() else self.base_dir / path

    @property
    def key_dir(self) -> Path:
        return self.resolve(self.key_bundle_path).parent

    @property
    def store_dir(self) -> Path:
        return self.resolve(self.data_dir) / "store"

    @property
    def runtime_path(self) -> Path:
        return self.resolve(self.data_dir) / "runtime.json"

    @classmethod
    def load(cls, path: str | Path) -> "NodeConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ParameterError(f"cannot read node config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ParameterError("node config must be a JSON object")
        known = {
            "listen_addr",
            "api_addr",
            "bootstrap_addrs",
            "door_server_url",
            "server_public_key_path",
            "key_bundle_path",
            "timer_period_s",
            "k",
            "data_dir",
        }
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown node config fields: {sorted(unknown)}")
        kwargs = {key: data[key] for key in known & set(data)}
        if "bootstrap_addrs" in kwargs:
            kwargs["bootstrap_addrs"] = tuple(kwargs["bootstrap_addrs"])
        if "timer_period_s" in kwargs:
            kwargs["timer_period_s"] = float(kwargs["timer_period_s"])
        if "k" in kwargs:
            kwargs["k"] = int(kwargs["k"])
        return cls(base_dir=path.resolve().parent, **kwargs)

    def dump(self) -> dict:
        return {
            "listen_addr": self.listen_addr,
            "api_addr": self.api_addr,
            "bootstrap_addrs": list(self.bootstrap_addrs),
            "door_server_url": self.door_server_url,
            "server_public_key_path": self.server_public_key_path,
            "key_bundle_path": self.key_bundle_path,
            "timer_period_s": self.timer_period_s,
            "k": self.k,
            "data_dir": self.data_dir,
        }
