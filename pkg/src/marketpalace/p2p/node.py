"""The gossip node runtime.

A node owns a certified key, a listing store, a peer table, a TCP
listener for framed wire messages, and a push timer. Every period it
sends its full store snapshot (listings and tombstones) to the k peers
closest to its own id; inbound pushes are merged through the store's
tombstone-wins semantics. Bids and chats travel as sealed envelopes over
direct connections.

Concurrency: inbound frames, timer rounds, and local API calls all
mutate state under one runtime lock (peer table, inboxes, channels) and
the store's own writer lock; network I/O happens outside both.
"""

from __future__ import annotations

import logging
import random
import socket
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable

from cryptography.hazmat.primitives.asymmetric import rsa

from marketpalace.crypto import (
    CertifiedKey,
    Envelope,
    KeyPair,
    open_envelope,
    seal_envelope,
)
from marketpalace.crypto import keys as crypto_keys
from marketpalace.errors import (
    AuthorizationError,
    EncodingError,
    MarketPalaceError,
    NetworkError,
    NotFoundError,
    ParameterError,
)
from marketpalace.market import (
    Bid,
    ChatMessage,
    ListingStore,
    MergeReport,
    SignedListing,
    Tombstone,
    chat_channel_id,
    create_signed_listing,
    make_bid_payload,
    make_chat_payload,
    parse_bid_payload,
    parse_chat_payload,
)
from marketpalace.market.payloads import payload_kind
from marketpalace.p2p.peers import PeerInfo, PeerTable, k_closest, peer_id_from_cert
from marketpalace.p2p.wire import (
    ConnectionClosed,
    FrameError,
    MessageType,
    WireMessage,
    recv_message,
    send_message,
)

logger = logging.getLogger(__name__)

DEFAULT_PERIOD_S = 90.0
DEFAULT_K = 20
CONNECT_TIMEOUT_S = 5.0


@dataclass
class _OutboundConn:
    sock: socket.socket
    lock: threading.Lock = field(default_factory=threading.Lock)


@dataclass
class ChatChannel:
    channel_id: str
    peer_fingerprint: str
    content_id: str | None
    messages: list[dict] = field(default_factory=list)


class NodeRuntime:
    def __init__(
        self,
        keypair: KeyPair,
        cert: CertifiedKey,
        server_public_key: rsa.RSAPublicKey,
        store: ListingStore,
        listen_host: str = "127.0.0.1",
        listen_port: int = 0,
        advertised_host: str | None = None,
        period_s: float = DEFAULT_PERIOD_S,
        k: int = DEFAULT_K,
        phase_s: float | None = None,
        connect_timeout_s: float = CONNECT_TIMEOUT_S,
        clock: Callable[[], float] = time.time,
    ):
        if period_s <= 0:
            raise ParameterError("period_s must be positive")
        if k < 1:
            raise ParameterError("k must be >= 1")
        self.keypair = keypair
        self.cert = cert
        self.server_public_key = server_public_key
        self.store = store
        self.peer_id = peer_id_from_cert(cert)
        self.period_s = period_s
        self.k = k
        self.connect_timeout_s = connect_timeout_s
        self._clock = clock
        self._listen_host = listen_host
        self._listen_port = listen_port
        self._advertised_host = advertised_host or listen_host

        self.table = PeerTable(server_public_key)
        self._lock = threading.RLock()
        self._channels: dict[str, ChatChannel] = {}
        self._bids: list[dict] = []
        self._started_at: float | None = None
        self.phase_s = (
            random.uniform(0.0, period_s) if phase_s is None else phase_s % period_s
        )

        self._listener: socket.socket | None = None
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._inbound: set[socket.socket] = set()
        self._outbound: dict[str, _OutboundConn] = {}

    # -- lifecycle -----------------------------------------------------

    @property
    def listen_addr(self) -> str:
        assert self._listener is not None, "node not started"
        port = self._listener.getsockname()[1]
        return f"{self._advertised_host}:{port}"

    @property
    def uptime_s(self) -> float:
        return 0.0 if self._started_at is None else self._clock() - self._started_at

    def start(self) -> None:
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self._listen_host, self._listen_port))
        listener.listen(32)
        listener.settimeout(0.25)
        self._listener = listener
        self._started_at = self._clock()
        self._spawn(self._accept_loop, "accept")
        self._spawn(self._timer_loop, "timer")
        logger.info("node %s… listening on %s", self.peer_id[:12], self.listen_addr)

    def stop(self) -> None:
        self._stop.set()
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
        with self._lock:
            inbound = list(self._inbound)
            outbound = list(self._outbound.values())
            self._outbound.clear()
        for sock in inbound:
            _quiet_close(sock)
        for conn in outbound:
            _quiet_close(conn.sock)
        for thread in list(self._threads):
            thread.join(timeout=5.0)

    def _spawn(self, target, name: str, *args) -> None:
        thread = threading.Thread(
            target=target, args=args, name=f"node-{self.peer_id[:8]}-{name}",
            daemon=True,
        )
        thread.start()
        self._threads.append(thread)

    # -- inbound -------------------------------------------------------

    def _accept_loop(self) -> None:
        assert self._listener is not None
        while not self._stop.is_set():
            try:
                sock, _ = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            sock.settimeout(1.0)
            with self._lock:
                self._inbound.add(sock)
            self._spawn(self._serve_connection, "conn", sock)

    def _serve_connection(self, sock: socket.socket) -> None:
        peer: PeerInfo | None = None
        try:
            while not self._stop.is_set():
                try:
                    msg = recv_message(sock)
                except socket.timeout:
                    continue
                except (ConnectionClosed, ConnectionError):
                    break
                except FrameError as exc:
                    logger.debug("dropping undecodable frame: %s", exc)
                    break
                reply, peer = self._dispatch(msg, peer)
                if reply is not None:
                    send_message(sock, reply)
        except OSError:
            pass
        finally:
            with self._lock:
                self._inbound.discard(sock)
            _quiet_close(sock)

    def _dispatch(
        self, msg: WireMessage, peer: PeerInfo | None
    ) -> tuple[WireMessage | None, PeerInfo | None]:
        if msg.type == MessageType.HELLO:
            new_peer = self._handle_hello(msg)
            if new_peer is None:
                return None, peer
            ack = WireMessage(
                MessageType.HELLO_ACK,
                {"cert": self.cert.to_dict(), "listen_addr": self.listen_addr},
            )
            return ack, new_peer
        if peer is None:
            # Everything else requires an authenticated hello first.
            logger.info("rejecting %s from un-helloed connection", msg.type.name)
            return None, None
        if msg.type == MessageType.PEERS_REQUEST:
            return self._handle_peers_request(peer), peer
        if msg.type == MessageType.PUSH:
            return self._handle_push(msg, peer), peer
        if msg.type == MessageType.ENVELOPE:
            self._handle_envelope(msg)
            return None, peer
        logger.debug("ignoring unexpected %s", msg.type.name)
        return None, peer

    def _handle_hello(self, msg: WireMessage) -> PeerInfo | None:
        try:
            cert = CertifiedKey.from_dict(msg.payload["cert"])
            listen_addr = str(msg.payload["listen_addr"])
        except (KeyError, EncodingError) as exc:
            logger.info("malformed hello: %s", exc)
            return None
        info = PeerInfo(
            peer_id=peer_id_from_cert(cert),
            address=listen_addr,
            cert=cert,
            last_seen=int(self._clock()),
        )
        with self._lock:
            if not self.table.add(info):
                logger.info("rejecting hello with uncertified key from %s", listen_addr)
                return None
        return info

    def _handle_peers_request(self, requester: PeerInfo) -> WireMessage:
        with self._lock:
            peers = [
                p.to_dict()
                for p in self.table.peers()
                if p.peer_id != requester.peer_id
            ]
        return WireMessage(MessageType.PEERS_RESPONSE, {"peers": peers})

    def _handle_push(self, msg: WireMessage, sender: PeerInfo) -> WireMessage | None:
        try:
            listings = [
                SignedListing.from_dict(x) for x in msg.payload.get("listings", [])
            ]
            tombs = [
                Tombstone.from_dict(x) for x in msg.payload.get("tombstones", [])
            ]
        except EncodingError as exc:
            logger.debug("dropping undecodable push: %s", exc)
            return None
        report = self.store.merge(batch=listings, tombs=tombs)
        with self._lock:
            refreshed = PeerInfo(
                sender.peer_id, sender.address, sender.cert, int(self._clock())
            )
            self.table.add(refreshed)
        if report.accepted:
            logger.info(
                "merged push from %s…: +%d listings/tombstones",
                sender.peer_id[:12],
                report.accepted,
            )
        return WireMessage(
            MessageType.PUSH_ACK,
            {
                "accepted": report.accepted,
                "rejected": report.rejected,
                "duplicates": report.duplicates,
            },
        )

    def _handle_envelope(self, msg: WireMessage) -> None:
        try:
            env = Envelope.from_dict(msg.payload.get("envelope", {}))
        except EncodingError as exc:
            logger.debug("dropping undecodable envelope: %s", exc)
            return
        try:
            plaintext, sender_pk = open_envelope(
                self.keypair.private_key, self.server_public_key, env
            )
        except MarketPalaceError as exc:
            logger.info("dropping envelope: %s", exc)
            return
        sender_fp = crypto_keys.fingerprint(sender_pk)
        try:
            kind = payload_kind(plaintext)
            if kind == "bid":
                self._receive_bid(parse_bid_payload(plaintext), sender_fp)
            elif kind == "chat":
                self._receive_chat(parse_chat_payload(plaintext), sender_fp)
            else:
                logger.info("dropping envelope with unknown kind %r", kind)
        except EncodingError as exc:
            logger.info("dropping malformed envelope payload: %s", exc)

    def _receive_bid(self, bid: Bid, sender_fp: str) -> None:
        if bid.bidder_fingerprint != sender_fp:
            logger.info("dropping bid whose bidder does not match the sender")
            return
        with self._lock:
            self._bids.append(
                {
                    "content_id": bid.content_id,
                    "amount": bid.amount,
                    "currency": bid.currency,
                    "bidder_fingerprint": bid.bidder_fingerprint,
                    "created_at": bid.created_at,
                    "direction": "received",
                }
            )

    def _receive_chat(self, msg: ChatMessage, sender_fp: str) -> None:
        with self._lock:
            channel = self._channels.get(msg.channel_id)
            if channel is None:
                channel = ChatChannel(
                    channel_id=msg.channel_id,
                    peer_fingerprint=sender_fp,
                    content_id=self._resolve_chat_listing(msg.channel_id, sender_fp),
                )
                self._channels[msg.channel_id] = channel
            channel.messages.append(
                {
                    "body": msg.body,
                    "sent_at": msg.sent_at,
                    "direction": "received",
                    "from": sender_fp,
                }
            )

    def _resolve_chat_listing(self, channel_id: str, sender_fp: str) -> str | None:
        """Match an incoming chat to one of this node's own listings."""
        if sender_fp == self.fingerprint:
            return None
        for sl in self.store.listings():
            if sl.listing.owner_fingerprint != self.fingerprint:
                continue
            if chat_channel_id(self.fingerprint, sender_fp, sl.content_id) == channel_id:
                return sl.content_id
        return None

    # -- outbound ------------------------------------------------------

    def _connect(self, address: str) -> _OutboundConn:
        host, port_s = address.rsplit(":", 1)
        sock = socket.create_connection(
            (host, int(port_s)), timeout=self.connect_timeout_s
        )
        sock.settimeout(self.connect_timeout_s)
        conn = _OutboundConn(sock=sock)
        send_message(
            sock,
            WireMessage(
                MessageType.HELLO,
                {"cert": self.cert.to_dict(), "listen_addr": self.listen_addr},
            ),
        )
        ack = recv_message(sock)
        if ack.type != MessageType.HELLO_ACK:
            _quiet_close(sock)
            raise NetworkError(f"expected hello-ack from {address}, got {ack.type}")
        cert = CertifiedKey.from_dict(ack.payload["cert"])
        with self._lock:
            self.table.add_certified(
                cert, str(ack.payload["listen_addr"]), int(self._clock())
            )
        return conn

    def _request(
        self, address: str, msg: WireMessage, expect: MessageType | None
    ) -> WireMessage | None:
        last_error: Exception | None = None
        for attempt in (0, 1):
            with self._lock:
                conn = self._outbound.get(address)
            reused = conn is not None
            try:
                if conn is None:
                    conn = self._connect(address)
                    with self._lock:
                        self._outbound[address] = conn
                with conn.lock:
                    send_message(conn.sock, msg)
                    if expect is None:
                        return None
                    reply = recv_message(conn.sock)
                if reply.type != expect:
                    raise NetworkError(
                        f"expected {expect.name} from {address}, got {reply.type.name}"
                    )
                return reply
            except (OSError, KeyError, FrameError, MarketPalaceError) as exc:
                last_error = exc
                with self._lock:
                    stale = self._outbound.pop(address, None)
                if stale is not None:
                    _quiet_close(stale.sock)
                # A pooled socket may simply have gone stale; one fresh
                # connection attempt is warranted. A failed fresh connect
                # is not retried, keeping unreachable detection within
                # one connect timeout.
                if not reused:
                    break
        raise NetworkError(f"peer at {address} unreachable: {last_error}")

    # -- gossip --------------------------------------------------------

    def bootstrap(
        self, addresses: list[str], retries: int = 3, retry_delay_s: float = 0.5
    ) -> int:
        """Join via bootstrap servers; returns the number of known peers.

        Succeeds if at least one address answers. Learned peers are
        greeted immediately so both sides know each other even before
        the first push round.
        """
        if not addresses:
            raise ParameterError("at least one bootstrap address is required")
        reached = False
        for attempt in range(retries):
            for address in addresses:
                try:
                    reply = self._request(
                        address,
                        WireMessage(MessageType.PEERS_REQUEST, {}),
                        MessageType.PEERS_RESPONSE,
                    )
                except NetworkError as exc:
                    logger.info("bootstrap %s failed: %s", address, exc)
                    continue
                reached = True
                assert reply is not None
                for raw in reply.payload.get("peers", []):
                    try:
                        info = PeerInfo.from_dict(raw)
                    except EncodingError:
                        continue
                    with self._lock:
                        known = info.peer_id in self.table
                        if info.peer_id != self.peer_id:
                            self.table.add(info)
                    if not known and info.peer_id != self.peer_id:
                        try:
                            self._request(info.address, WireMessage(
                                MessageType.PEERS_REQUEST, {}
                            ), MessageType.PEERS_RESPONSE)
                        except NetworkError:
                            logger.info("learned peer %s unreachable", info.address)
            if reached:
                with self._lock:
                    return len(self.table)
            if attempt < retries - 1:
                time.sleep(retry_delay_s)
        raise NetworkError(f"no bootstrap reachable after {retries} attempts")

    def build_push_message(self) -> WireMessage:
        listings = [sl.to_dict() for sl in self.store.listings()]
        tombstones = [t.to_dict() for t in self.store.tombstones()]
        return WireMessage(
            MessageType.PUSH, {"listings": listings, "tombstones": tombstones}
        )

    def push_targets(self) -> list[PeerInfo]:
        with self._lock:
            return k_closest(self.table, self.peer_id, self.k)

    def push_round(self) -> list[tuple[PeerInfo, MergeReport | None]]:
        """One timer firing: push the snapshot to the k closest peers."""
        self.store.expire()
        msg = self.build_push_message()
        targets = self.push_targets()
        results: list[tuple[PeerInfo, MergeReport | None]] = []
        threads: list[threading.Thread] = []
        out_lock = threading.Lock()

        def push_one(peer: PeerInfo) -> None:
            try:
                ack = self._request(peer.address, msg, MessageType.PUSH_ACK)
                assert ack is not None
                report = MergeReport(
                    int(ack.payload.get("accepted", 0)),
                    int(ack.payload.get("rejected", 0)),
                    int(ack.payload.get("duplicates", 0)),
                )
            except (NetworkError, TypeError, ValueError) as exc:
                logger.info("push to %s failed: %s", peer.address, exc)
                report = None
            with out_lock:
                results.append((peer, report))

        for peer in targets:
            thread = threading.Thread(target=push_one, args=(peer,), daemon=True)
            thread.start()
            threads.append(thread)
        for thread in threads:
            thread.join(timeout=self.connect_timeout_s + 1.0)
        return results

    def _timer_loop(self) -> None:
        if self._stop.wait(self.phase_s):
            return
        while not self._stop.is_set():
            started = time.monotonic()
            try:
                self.push_round()
            except Exception:
                logger.exception("push round failed")
            elapsed = time.monotonic() - started
            if self._stop.wait(max(0.0, self.period_s - elapsed)):
                return

    # -- direct messages -------------------------------------------------

    def send_envelope(self, target_peer_id: str, env: Envelope) -> None:
        with self._lock:
            peer = self.table.get(target_peer_id)
        if peer is None:
            raise NotFoundError(f"unknown peer {target_peer_id[:12]}…")
        self._request(
            peer.address,
            WireMessage(MessageType.ENVELOPE, {"envelope": env.to_dict()}),
            None,
        )

    def _seal_to_fingerprint(self, fp: str, plaintext: bytes) -> tuple[str, Envelope]:
        """Find the peer/cert for a fingerprint and seal plaintext to it."""
        with self._lock:
            peer = self.table.get(fp)
        receiver_cert = peer.cert if peer is not None else None
        if receiver_cert is None:
            for sl in self.store.listings():
                if sl.owner_cert.fingerprint == fp:
                    receiver_cert = sl.owner_cert
                    break
        if receiver_cert is None:
            raise NotFoundError(f"no certificate known for {fp[:12]}…")
        env = seal_envelope(
            self.keypair.private_key,
            self.cert,
            receiver_cert.public_key,
            plaintext,
            timestamp=int(self._clock()),
        )
        return fp, env

    # -- market actions ---------------------------------------------------

    @property
    def fingerprint(self) -> str:
        return self.cert.fingerprint

    def add_listing(
        self, title: str, description: str, price_amount: int, currency: str,
        ttl_s: int,
    ) -> SignedListing:
        sl = create_signed_listing(
            self.keypair, self.cert, title, description, price_amount, currency,
            ttl_s, clock=self._clock,
        )
        report = self.store.add_own_listing(sl)
        if report.accepted != 1:
            raise ParameterError("listing was not accepted by the local store")
        return sl

    def remove_listing(self, content_id: str) -> Tombstone:
        return self.store.remove_listing(self.keypair, self.cert, content_id)

    def send_bid(
        self, content_id: str, amount: int, currency: str, target_peer: str
    ) -> Bid:
        bid = Bid(
            content_id=content_id,
            amount=amount,
            currency=currency,
            bidder_fingerprint=self.fingerprint,
            created_at=int(self._clock()),
        )
        fp, env = self._seal_to_fingerprint(target_peer, make_bid_payload(bid))
        self.send_envelope(fp, env)
        with self._lock:
            self._bids.append(
                {
                    "content_id": bid.content_id,
                    "amount": bid.amount,
                    "currency": bid.currency,
                    "bidder_fingerprint": bid.bidder_fingerprint,
                    "created_at": bid.created_at,
                    "direction": "sent",
                }
            )
        return bid

    def bids(self) -> list[dict]:
        with self._lock:
            return list(self._bids)

    def channel_for_listing(self, sl: SignedListing) -> str | None:
        """Chat channel between this node and the listing's owner."""
        owner_fp = sl.listing.owner_fingerprint
        if owner_fp == self.fingerprint:
            return None
        channel_id = chat_channel_id(self.fingerprint, owner_fp, sl.content_id)
        with self._lock:
            if channel_id not in self._channels:
                self._channels[channel_id] = ChatChannel(
                    channel_id=channel_id,
                    peer_fingerprint=owner_fp,
                    content_id=sl.content_id,
                )
            else:
                self._channels[channel_id].content_id = sl.content_id
        return channel_id

    def send_chat(self, channel_id: str, body: str) -> ChatMessage:
        with self._lock:
            channel = self._channels.get(channel_id)
        if channel is None:
            raise NotFoundError(f"unknown chat channel {channel_id[:12]}…")
        msg = ChatMessage(
            channel_id=channel_id, body=body, sent_at=int(self._clock())
        )
        fp, env = self._seal_to_fingerprint(
            channel.peer_fingerprint, make_chat_payload(msg)
        )
        self.send_envelope(fp, env)
        with self._lock:
            channel.messages.append(
                {
                    "body": body,
                    "sent_at": msg.sent_at,
                    "direction": "sent",
                    "from": self.fingerprint,
                }
            )
        return msg

    def channels(self) -> list[ChatChannel]:
        with self._lock:
            return list(self._channels.values())

    def channel(self, channel_id: str) -> ChatChannel | None:
        with self._lock:
            return self._channels.get(channel_id)


def _quiet_close(sock: socket.socket) -> None:
    try:
        sock.shutdown(socket.SHUT_RDWR)
    except OSError:
        pass
    try:
        sock.close()
    except OSError:
        pass
