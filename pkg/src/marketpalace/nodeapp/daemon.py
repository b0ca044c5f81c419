"""Daemon wiring: key material + gossip runtime + local API + signals.

Refuses to start unregistered. After startup it writes
``<data_dir>/runtime.json`` with the actually-bound addresses (configs
may ask for port 0) so CLI clients and tests can find the node. SIGTERM
and SIGINT trigger a clean shutdown; the store is write-through, so a
hard kill loses at most the messages since the last merge.
"""

from __future__ import annotations

import json
import logging
import os
import signal
import threading
import time

from marketpalace.crypto import verify_certification
from marketpalace.errors import AuthenticationError, MarketPalaceError, ParameterError
from marketpalace.httpbase import parse_hostport
from marketpalace.market import ListingStore
from marketpalace.nodeapp import keyfiles
from marketpalace.nodeapp.api import NodeApiServer
from marketpalace.nodeapp.config import NodeConfig
from marketpalace.p2p.node import NodeRuntime

logger = logging.getLogger(__name__)

PASSPHRASE_ENV = "MARKETPALACE_PASSPHRASE"


class NotRegisteredError(MarketPalaceError):
    """The node has no valid certified key bundle."""


def resolve_passphrase(passphrase: str | None = None) -> str:
    if passphrase is not None:
        return passphrase
    env = os.environ.get(PASSPHRASE_ENV)
    if env is not None:
        return env
    raise AuthenticationError(
        f"no passphrase given and {PASSPHRASE_ENV} is not set"
    )


def load_identity(config: NodeConfig, passphrase: str):
    """Load (keypair, cert, server_public_key); raises if unregistered."""
    server_key_path = config.resolve(config.server_public_key_path)
    bundle_path = config.resolve(config.key_bundle_path)
    if not server_key_path.exists():
        raise NotRegisteredError(
            f"no pinned door server key at {server_key_path}; run register first"
        )
    if not bundle_path.exists():
        raise NotRegisteredError(
            f"no certified key bundle at {bundle_path}; run register first"
        )
    server_public_key = keyfiles.load_server_public_key(server_key_path)
    cert = keyfiles.load_bundle(bundle_path)
    if not verify_certification(server_public_key, cert):
        raise NotRegisteredError(
            "stored key bundle does not verify under the door server key"
        )
    keypair = keyfiles.load_keypair(config.key_dir, passphrase)
    from marketpalace.crypto.keys import public_key_bytes

    if public_key_bytes(keypair.public_key) != public_key_bytes(cert.public_key):
        raise NotRegisteredError("key bundle does not match the private key")
    return keypair, cert, server_public_key


def is_registered(config: NodeConfig) -> bool:
    try:
        server_key_path = config.resolve(config.server_public_key_path)
        bundle_path = config.resolve(config.key_bundle_path)
        if not (server_key_path.exists() and bundle_path.exists()):
            return False
        server_public_key = keyfiles.load_server_public_key(server_key_path)
        return verify_certification(
            server_public_key, keyfiles.load_bundle(bundle_path)
        )
    except MarketPalaceError:
        return False


class NodeDaemon:
    def __init__(self, config: NodeConfig, passphrase: str | None = None):
        self.config = config
        keypair, cert, server_public_key = load_identity(
            config, resolve_passphrase(passphrase)
        )
        listen_host, listen_port = parse_hostport(config.listen_addr)
        store = ListingStore(server_public_key, directory=config.store_dir)
        self.node = NodeRuntime(
            keypair=keypair,
            cert=cert,
            server_public_key=server_public_key,
            store=store,
            listen_host=listen_host,
            listen_port=listen_port,
            period_s=config.timer_period_s,
            k=config.k,
        )
        api_host, api_port = parse_hostport(config.api_addr)
        self._api_host, self._api_port = api_host, api_port
        self.api: NodeApiServer | None = None
        self._stop = threading.Event()

    def start(self) -> None:
        self.node.start()
        try:
            self.api = NodeApiServer(self.node, self._api_host, self._api_port)
            self.api.start()
        except OSError as exc:
            self.node.stop()
            raise ParameterError(f"cannot bind API address: {exc}") from None
        if self.config.bootstrap_addrs:
            try:
                count = self.node.bootstrap(list(self.config.bootstrap_addrs))
                logger.info("joined network; %d peers known", count)
            except MarketPalaceError as exc:
                logger.warning("bootstrap failed (continuing alone): %s", exc)
        self._write_runtime_file()
        logger.info(
            "node up: p2p %s, api %s", self.node.listen_addr, self.api.address
        )

    def _write_runtime_file(self) -> None:
        assert self.api is not None
        path = self.config.runtime_path
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(
                {
                    "peer_id": self.node.peer_id,
                    "listen_addr": self.node.listen_addr,
                    "api_addr": f"127.0.0.1:{self.api.port}",
                    "pid": os.getpid(),
                    "started_at": int(time.time()),
                },
                indent=2,
                sort_keys=True,
            )
            + "\n"
        )

    def stop(self) -> None:
        self._stop.set()

    def shutdown(self) -> None:
        if self.api is not None:
            self.api.stop()
        self.node.stop()
        logger.info("node stopped cleanly")

    def run_until_signal(self) -> None:
        """Block until SIGTERM/SIGINT, then shut down cleanly."""

        def handler(signum, frame):
            logger.info("received signal %d, shutting down", signum)
            self._stop.set()

        signal.signal(signal.SIGTERM, handler)
        signal.signal(signal.SIGINT, handler)
        self.start()
        try:
            while not self._stop.wait(0.2):
                pass
        finally:
            self.shutdown()
