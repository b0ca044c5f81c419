"""Peer identity and XOR-distance neighbor selection.

A peer's id is the SHA-256 of its certified public key's canonical bytes,
so identity is pinned to registration. Closeness between peers is the
Kademlia metric: bitwise XOR of the two ids read as a big-endian 256-bit
integer. The peer table is a flat certified set (no buckets); at the
target scale of tens of nodes, bucketing buys nothing.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from cryptography.hazmat.primitives.asymmetric import rsa

from marketpalace.crypto import keys
from marketpalace.crypto.certify import CertifiedKey, verify_certification
from marketpalace.errors import BadCertificateError, EncodingError

_HEX64 = re.compile(r"^[0-9a-f]{64}$")

DEFAULT_TABLE_CAPACITY = 256


def peer_id_from_cert(cert: CertifiedKey) -> str:
    """256-bit peer id: SHA-256 of the certified public key, hex."""
    try:
        return keys.fingerprint(cert.public_key)
    except Exception as exc:
        raise EncodingError(f"malformed certificate: {exc}") from None


def xor_distance(a: str, b: str) -> int:
    """Kademlia metric: XOR of the two ids as a big-endian integer."""
    if not (_HEX64.match(a) and _HEX64.match(b)):
        raise EncodingError("peer ids must be 64 lowercase hex characters")
    return int(a, 16) ^ int(b, 16)


@dataclass(frozen=True)
class PeerInfo:
    peer_id: str
    address: str
    cert: CertifiedKey
    last_seen: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "peer_id": self.peer_id,
            "address": self.address,
            "cert": self.cert.to_dict(),
            "last_seen": self.last_seen,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PeerInfo":
        if not isinstance(data, Mapping):
            raise EncodingError("peer info must be an object")
        try:
            peer_id = data["peer_id"]
            address = data["address"]
            cert = CertifiedKey.from_dict(data["cert"])
            last_seen = int(data["last_seen"])
        except KeyError as exc:
            raise EncodingError(f"peer info missing field {exc}") from None
        except (TypeError, ValueError) as exc:
            raise EncodingError(str(exc)) from None
        if not isinstance(peer_id, str) or not _HEX64.match(peer_id):
            raise EncodingError("peer_id must be 64 lowercase hex characters")
        if not isinstance(address, str) or ":" not in address:
            raise EncodingError("address must be host:port")
        return cls(peer_id, address, cert, last_seen)


class PeerTable:
    """Certified peers keyed by id, with a capacity bound.

    Every insert re-derives the peer id from the certificate and checks
    the certification under the door server key, so the table can never
    hold an uncertified or mislabeled entry. When full, the entry seen
    longest ago is evicted.
    """

    def __init__(
        self,
        server_public_key: rsa.RSAPublicKey,
        capacity: int = DEFAULT_TABLE_CAPACITY,
    ):
        self._server_public_key = server_public_key
        self._capacity = capacity
        self._peers: dict[str, PeerInfo] = {}

    def __len__(self) -> int:
        return len(self._peers)

    def __contains__(self, peer_id: str) -> bool:
        return peer_id in self._peers

    def get(self, peer_id: str) -> PeerInfo | None:
        return self._peers.get(peer_id)

    def peers(self) -> list[PeerInfo]:
        return list(self._peers.values())

    def add(self, info: PeerInfo) -> bool:
        """Insert or refresh; False if the certificate fails verification."""
        if not verify_certification(self._server_public_key, info.cert):
            return False
        derived = peer_id_from_cert(info.cert)
        if derived != info.peer_id:
            return False
        existing = self._peers.get(info.peer_id)
        if existing is None and len(self._peers) >= self._capacity:
            oldest = min(self._peers.values(), key=lambda p: p.last_seen)
            del self._peers[oldest.peer_id]
        if existing is None or info.last_seen >= existing.last_seen:
            self._peers[info.peer_id] = info
        return True

    def add_certified(
        self, cert: CertifiedKey, address: str, last_seen: int | None = None
    ) -> PeerInfo:
        """Build a PeerInfo from a cert and insert it; raises on bad certs."""
        info = PeerInfo(
            peer_id=peer_id_from_cert(cert),
            address=address,
            cert=cert,
            last_seen=int(time.time()) if last_seen is None else int(last_seen),
        )
        if not self.add(info):
            raise BadCertificateError("peer certificate failed verification")
        return info

    def remove(self, peer_id: str) -> None:
        self._peers.pop(peer_id, None)


def k_closest(
    peers: Iterable[PeerInfo] | PeerTable, target: str, k: int
) -> list[PeerInfo]:
    """The k entries nearest to ``target``, ascending by XOR distance,
    ties broken by lexicographic peer id; fewer if the table is smaller."""
    if k < 1:
        raise ValueError("k must be >= 1")
    entries = peers.peers() if isinstance(peers, PeerTable) else list(peers)
    ranked = sorted(entries, key=lambda p: (xor_distance(p.peer_id, target), p.peer_id))
    return ranked[:k]
