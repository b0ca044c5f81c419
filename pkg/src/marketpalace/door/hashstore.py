"""Append-only uniqueness store for hashed attributes.

One table, one column: the file holds one 64-char lowercase-hex SHA-256
digest per LF-terminated line, mirrored by an in-memory set. Inserts are
serialized through a single writer lock and fsynced so the file and the
set never diverge; membership reads are lock-free against the set.
"""

from __future__ import annotations

import os
import re
import threading
from pathlib import Path

from marketpalace.errors import EncodingError

_HEX64 = re.compile(r"^[0-9a-f]{64}$")


class HashStore:
    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._hashes: set[str] = set()
        self._load()

    def _load(self) -> None:
        if not self.path.exists():
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.touch()
            return
        raw = self.path.read_bytes()
        complete, _, partial = raw.rpartition(b"\n")
        # A trailing partial line is an interrupted write; it was never
        # acknowledged, so it is not part of the set.
        lines = complete.decode("ascii").split("\n") if complete else []
        for line in lines:
            if not _HEX64.match(line):
                raise EncodingError(f"corrupt hash store line: {line!r}")
            self._hashes.add(line)
        if partial:
            with open(self.path, "wb") as fh:
                for h in sorted(self._hashes):
                    fh.write(h.encode("ascii") + b"\n")
                fh.flush()
                os.fsync(fh.fileno())

    @staticmethod
    def _check(idhash: str) -> str:
        if not isinstance(idhash, str) or not _HEX64.match(idhash):
            raise EncodingError("idhash must be 64 lowercase hex characters")
        return idhash

    def __contains__(self, idhash: str) -> bool:
        return idhash in self._hashes

    def __len__(self) -> int:
        return len(self._hashes)

    def insert_if_absent(self, idhash: str) -> bool:
        """Atomically insert; True if new, False if already present."""
        idhash = self._check(idhash)
        with self._lock:
            if idhash in self._hashes:
                return False
            with open(self.path, "a", encoding="ascii") as fh:
                fh.write(idhash + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._hashes.add(idhash)
            return True
