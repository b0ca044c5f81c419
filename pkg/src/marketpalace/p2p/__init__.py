"""Peer identity, discovery, framing, and the gossip node runtime."""

from marketpalace.p2p.peers import (
    PeerInfo,
    PeerTable,
    k_closest,
    peer_id_from_cert,
    xor_distance,
)
from marketpalace.p2p.wire import (
    MAX_FRAME_BYTES,
    FrameTooLarge,
    IncompleteFrame,
    MessageType,
    WireMessage,
    frame_decode,
    frame_encode,
)

__all__ = [
    "PeerInfo",
    "PeerTable",
    "k_closest",
    "peer_id_from_cert",
    "xor_distance",
    "MAX_FRAME_BYTES",
    "FrameTooLarge",
    "IncompleteFrame",
    "MessageType",
    "WireMessage",
    "frame_decode",
    "frame_encode",
]
