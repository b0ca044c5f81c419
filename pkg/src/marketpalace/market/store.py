"""Replicated listing store with tombstone-wins merge semantics.

merge() is the single entry point gossip uses: it admits only listings
that verify under a server-certified owner key, never resurrects anything
a valid tombstone removed (tombstones are applied retroactively: one that
arrives before its listing is parked as pending and judged when the
listing's owner cert shows up), and is idempotent and order-insensitive.

Persistence is write-through: one {content_id}.json per listing plus
tombstones.json in the store directory, refreshed on every mutation.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

from cryptography.hazmat.primitives.asymmetric import rsa

from marketpalace.errors import AuthorizationError, NotFoundError
from marketpalace.market.listings import (
    DEFAULT_TTL_S,
    ListingStatus,
    SignedListing,
    Tombstone,
    make_tombstone,
    verify_signed_listing,
    verify_tombstone,
)
from marketpalace.crypto import keys as crypto_keys
from marketpalace.crypto.certify import CertifiedKey

logger = logging.getLogger(__name__)

TOMBSTONE_GRACE_S = 24 * 3600

Clock = Callable[[], float]


@dataclass(frozen=True)
class MergeReport:
    accepted: int = 0
    rejected: int = 0
    duplicates: int = 0

    def __add__(self, other: "MergeReport") -> "MergeReport":
        return MergeReport(
            self.accepted + other.accepted,
            self.rejected + other.rejected,
            self.duplicates + other.duplicates,
        )


@dataclass(frozen=True)
class _TombEntry:
    tombstone: Tombstone
    retain_until: int


class ListingStore:
    def __init__(
        self,
        server_public_key: rsa.RSAPublicKey,
        directory: str | os.PathLike | None = None,
        clock: Clock = time.time,
    ):
        self._server_public_key = server_public_key
        self._dir = Path(directory) if directory is not None else None
        self._clock = clock
        self._lock = threading.RLock()
        self._listings: dict[str, SignedListing] = {}
        self._tombstones: dict[str, _TombEntry] = {}
        self._pending_tombstones: dict[str, Tombstone] = {}
        if self._dir is not None:
            self._load()

    # -- queries -------------------------------------------------------

    def listings(self) -> list[SignedListing]:
        with self._lock:
            return list(self._listings.values())

    def get(self, content_id: str) -> SignedListing | None:
        with self._lock:
            return self._listings.get(content_id)

    def tombstones(self) -> list[Tombstone]:
        with self._lock:
            applied = [e.tombstone for e in self._tombstones.values()]
            return applied + list(self._pending_tombstones.values())

    def __len__(self) -> int:
        return len(self._listings)

    def state_fingerprint(self) -> tuple:
        """Comparable snapshot of the full store state (for merge algebra)."""
        with self._lock:
            return (
                tuple(
                    sorted(sl.canonical_bytes() for sl in self._listings.values())
                ),
                tuple(
                    sorted(
                        e.tombstone.canonical_bytes()
                        for e in self._tombstones.values()
                    )
                ),
                tuple(
                    sorted(
                        t.canonical_bytes()
                        for t in self._pending_tombstones.values()
                    )
                ),
            )

    # -- mutations -----------------------------------------------------

    def merge(
        self,
        batch: Iterable[SignedListing] = (),
        tombs: Iterable[Tombstone] = (),
        ) -> MergeReport:
        accepted = rejected = duplicates = 0
        now = self._clock()
        with self._lock:
            dirty_tombs = False
            for sl in batch:
                if sl.content_id in self._tombstones:
                    rejected += 1
                    continue
                if sl.content_id in self._listings:
                    duplicates += 1
                    continue
                if verify_signed_listing(
                    self._server_public_key, sl, clock=lambda: now
                ) is not ListingStatus.VALID:
                    rejected += 1
                    continue
                pending = self._pending_tombstones.get(sl.content_id)
                if pending is not None:
                    if verify_tombstone(sl.owner_cert, pending):
                        # The parked removal was genuine: apply it now.
                        del self._pending_tombstones[sl.content_id]
                        self._apply_tombstone(pending, sl)
                        dirty_tombs = True
                        rejected += 1
                        continue
                    del self._pending_tombstones[sl.content_id]
                    dirty_tombs = True
                self._listings[sl.content_id] = sl
                self._persist_listing(sl)
                accepted += 1

            for tomb in tombs:
                cid = tomb.content_id
                if cid in self._tombstones or cid in self._pending_tombstones:
                    duplicates += 1
                    continue
                stored = self._listings.get(cid)
                if stored is not None:
                    if not verify_tombstone(stored.owner_cert, tomb):
                        rejected += 1
                        continue
                    del self._listings[cid]
                    self._unpersist_listing(cid)
                    self._apply_tombstone(tomb, stored)
                else:
                    # Owner cert unknown: park it until the listing shows up.
                    self._pending_tombstones[cid] = tomb
                accepted += 1
                dirty_tombs = True

            if dirty_tombs:
                self._persist_tombstones()
        return MergeReport(accepted, rejected, duplicates)

    def add_own_listing(self, sl: SignedListing) -> MergeReport:
        return self.merge(batch=[sl])

    def remove_listing(
        self,
        owner_keys: crypto_keys.KeyPair,
        owner_cert: CertifiedKey,
        content_id: str,
    ) -> Tombstone:
        with self._lock:
            stored = self._listings.get(content_id)
            if stored is None:
                raise NotFoundError(f"no listing {content_id[:12]}…")
            if stored.listing.owner_fingerprint != owner_cert.fingerprint:
                raise AuthorizationError("only the owner can remove a listing")
            tomb = make_tombstone(owner_keys, content_id, clock=self._clock)
            del self._listings[content_id]
            self._unpersist_listing(content_id)
            self._apply_tombstone(tomb, stored)
            self._persist_tombstones()
            return tomb

    def expire(self) -> int:
        now = self._clock()
        removed = 0
        with self._lock:
            for cid in [
                cid
                for cid, sl in self._listings.items()
                if sl.listing.expires_at <= now
            ]:
                del self._listings[cid]
                self._unpersist_listing(cid)
                removed += 1
            stale = [
                cid
                for cid, entry in self._tombstones.items()
                if entry.retain_until <= now
            ]
            for cid in stale:
                del self._tombstones[cid]
            stale_pending = [
                cid
                for cid, tomb in self._pending_tombstones.items()
                if tomb.removed_at + DEFAULT_TTL_S + TOMBSTONE_GRACE_S <= now
            ]
            for cid in stale_pending:
                del self._pending_tombstones[cid]
            if stale or stale_pending:
                self._persist_tombstones()
        return removed

    def _apply_tombstone(self, tomb: Tombstone, listing: SignedListing) -> None:
        retain_until = listing.listing.expires_at + TOMBSTONE_GRACE_S
        self._tombstones[tomb.content_id] = _TombEntry(tomb, retain_until)

    # -- persistence -----------------------------------------------------

    def _listing_path(self, content_id: str) -> Path:
        assert self._dir is not None
        return self._dir / f"{content_id}.json"

    def _persist_listing(self, sl: SignedListing) -> None:
        if self._dir is None:
            return
        self._dir.mkdir(parents=True, exist_ok=True)
        _atomic_write(self._listing_path(sl.content_id), sl.canonical_bytes())

    def _unpersist_listing(self, content_id: str) -> None:
        if self._dir is None:
            return
        try:
            self._listing_path(content_id).unlink()
        except FileNotFoundError:
            pass

    def _persist_tombstones(self) -> None:
        if self._dir is None:
            return
        self._dir.mkdir(parents=True, exist_ok=True)
        payload = {
            "applied": [
                {
                    "tombstone": entry.tombstone.to_dict(),
                    "retain_until": entry.retain_until,
                }
                for entry in self._tombstones.values()
            ],
            "pending": [t.to_dict() for t in self._pending_tombstones.values()],
        }
        _atomic_write(
            self._dir / "tombstones.json",
            json.dumps(payload, sort_keys=True, indent=1).encode("utf-8"),
        )

    def _load(self) -> None:
        assert self._dir is not None
        if not self._dir.exists():
            return
        tomb_path = self._dir / "tombstones.json"
        if tomb_path.exists():
            try:
                payload = json.loads(tomb_path.read_text("utf-8"))
                for entry in payload.get("applied", []):
                    tomb = Tombstone.from_dict(entry["tombstone"])
                    self._tombstones[tomb.content_id] = _TombEntry(
                        tomb, int(entry["retain_until"])
                    )
                for raw in payload.get("pending", []):
                    tomb = Tombstone.from_dict(raw)
                    self._pending_tombstones[tomb.content_id] = tomb
            except Exception:
                logger.exception("discarding unreadable tombstones.json")
        now = self._clock()
        for path in sorted(self._dir.glob("*.json")):
            if path.name == "tombstones.json":
                continue
            try:
                sl = SignedListing.from_dict(json.loads(path.read_text("utf-8")))
            except Exception:
                logger.exception("discarding unreadable listing file %s", path.name)
                continue
            if sl.content_id in self._tombstones:
                continue
            if verify_signed_listing(
                self._server_public_key, sl, clock=lambda: now
            ) is ListingStatus.VALID:
                self._listings[sl.content_id] = sl


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)
