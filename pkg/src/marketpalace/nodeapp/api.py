"""Local HTTP API the web UI and CLI talk to.

GET  /status                   node identity and counters
GET  /listings                 all currently valid listings
POST /listings                 create + sign + store a listing (201)
DELETE /listings/{content_id}  tombstone an owned listing
POST /bids                     seal a bid envelope to a listing owner
GET  /chats                    known chat channels
GET  /chats/{channel_id}       message history
POST /chats/{channel_id}       send a chat message
GET  /peers                    current peer table

Validation failures are 400, non-owner removal 401, unknown ids 404,
undeliverable direct messages 409.
"""

from __future__ import annotations

import logging

from marketpalace.errors import (
    AuthorizationError,
    EncodingError,
    MarketPalaceError,
    NetworkError,
    NotFoundError,
    ParameterError,
)
from marketpalace.httpbase import ApiError, JsonApiServer, route
from marketpalace.market import ListingStatus, verify_signed_listing
from marketpalace.p2p.node import NodeRuntime

logger = logging.getLogger(__name__)


class NodeApiServer:
    def __init__(self, node: NodeRuntime, host: str, port: int):
        self.node = node
        routes = [
            route("GET", r"/status", self._status),
            route("GET", r"/listings", self._list_listings),
            route("POST", r"/listings", self._create_listing),
            route("DELETE", r"/listings/([0-9a-f]{64})", self._remove_listing),
            route("POST", r"/bids", self._post_bid),
            route("GET", r"/chats", self._list_chats),
            route("GET", r"/chats/([0-9a-f]{64})", self._chat_history),
            route("POST", r"/chats/([0-9a-f]{64})", self._post_chat),
            route("GET", r"/peers", self._list_peers),
        ]
        self._server = JsonApiServer(host, port, routes)

    # -- endpoints -----------------------------------------------------

    def _status(self, match, body):
        node = self.node
        return {
            "peer_id": node.peer_id,
            "peer_count": len(node.table),
            "listing_count": len(node.store),
            "uptime_s": int(node.uptime_s),
            "registered": True,  # the daemon refuses to start otherwise
            "fingerprint": node.fingerprint,
        }

    def _list_listings(self, match, body):
        node = self.node
        rows = []
        for sl in node.store.listings():
            # Contract: everything returned verifies at read time.
            if verify_signed_listing(
                node.server_public_key, sl, clock=node._clock
            ) is not ListingStatus.VALID:
                continue
            row = sl.to_dict()
            row["mine"] = sl.listing.owner_fingerprint == node.fingerprint
            row["chat_channel_id"] = node.channel_for_listing(sl)
            rows.append(row)
        rows.sort(key=lambda r: (-r["listing"]["created_at"], r["content_id"]))
        return {"listings": rows}

    def _create_listing(self, match, body):
        if not isinstance(body, dict):
            raise ApiError(400, "missing-body")
        try:
            sl = self.node.add_listing(
                title=body.get("title", ""),
                description=body.get("description", ""),
                price_amount=body.get("price_amount"),
                currency=body.get("currency", ""),
                ttl_s=int(body.get("ttl_s", 7 * 24 * 3600)),
            )
        except (ParameterError, EncodingError, TypeError, ValueError) as exc:
            raise ApiError(400, "invalid-listing", str(exc)) from None
        return 201, sl.to_dict()

    def _remove_listing(self, match, body):
        try:
            tomb = self.node.remove_listing(match.group(1))
        except AuthorizationError as exc:
            raise ApiError(401, "not-owner", str(exc)) from None
        except NotFoundError as exc:
            raise ApiError(404, "unknown-listing", str(exc)) from None
        return {"removed": match.group(1), "tombstone": tomb.to_dict()}

    def _post_bid(self, match, body):
        if not isinstance(body, dict):
            raise ApiError(400, "missing-body")
        target = body.get("target_peer", "")
        try:
            bid = self.node.send_bid(
                content_id=body.get("content_id", ""),
                amount=body.get("amount"),
                currency=body.get("currency", ""),
                target_peer=target,
            )
        except (ParameterError, EncodingError, TypeError) as exc:
            raise ApiError(400, "invalid-bid", str(exc)) from None
        except NotFoundError as exc:
            raise ApiError(404, "unknown-peer", str(exc)) from None
        except NetworkError as exc:
            raise ApiError(409, "peer-unreachable", str(exc)) from None
        return {
            "delivered": True,
            "bid": {
                "content_id": bid.content_id,
                "amount": bid.amount,
                "currency": bid.currency,
                "bidder_fingerprint": bid.bidder_fingerprint,
                "created_at": bid.created_at,
            },
        }

    def _list_chats(self, match, body):
        channels = []
        for channel in self.node.channels():
            channels.append(
                {
                    "channel_id": channel.channel_id,
                    "peer_fingerprint": channel.peer_fingerprint,
                    "content_id": channel.content_id,
                    "message_count": len(channel.messages),
                }
            )
        channels.sort(key=lambda c: c["channel_id"])
        return {"channels": channels}

    def _chat_history(self, match, body):
        channel = self.node.channel(match.group(1))
        if channel is None:
            raise ApiError(404, "unknown-channel")
        return {
            "channel_id": channel.channel_id,
            "peer_fingerprint": channel.peer_fingerprint,
            "content_id": channel.content_id,
            "messages": list(channel.messages),
        }

    def _post_chat(self, match, body):
        if not isinstance(body, dict) or not isinstance(body.get("body"), str):
            raise ApiError(400, "missing-body")
        try:
            msg = self.node.send_chat(match.group(1), body["body"])
        except ParameterError as exc:
            raise ApiError(400, "invalid-chat", str(exc)) from None
        except NotFoundError as exc:
            raise ApiError(404, "unknown-channel", str(exc)) from None
        except NetworkError as exc:
            raise ApiError(409, "peer-unreachable", str(exc)) from None
        return {"delivered": True, "sent_at": msg.sent_at}

    def _list_peers(self, match, body):
        return {"peers": [p.to_dict() for p in self.node.table.peers()]}

    # -- lifecycle ------------------------------------------------------

    @property
    def address(self) -> str:
        return self._server.address

    @property
    def port(self) -> int:
        return self._server.port

    def start(self) -> None:
        self._server.start()

    def stop(self) -> None:
        self._server.stop()
