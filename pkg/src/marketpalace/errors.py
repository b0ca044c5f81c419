"""Shared exception taxonomy.

Errors are grouped by contract, not by module: parameter rejection,
encoding problems, authentication failures (wrong credentials), corrupt
data (tampering/truncation), authorization, lookup misses, session state
violations, and network failures. Verification routines that report
outcomes (e.g. listing validity) return enums instead of raising.
"""

from __future__ import annotations


class MarketPalaceError(Exception):
    """Base class for all library errors."""


class ParameterError(MarketPalaceError):
    """Rejected parameters (bounds, preconditions)."""


class EncodingError(MarketPalaceError):
    """Malformed serialized material (keys, hashes, payloads)."""


class AuthenticationError(MarketPalaceError):
    """Wrong credentials: bad passphrase, uncertified sender."""


class CorruptDataError(MarketPalaceError):
    """Stored or transmitted bytes fail integrity checks."""


class AuthorizationError(MarketPalaceError):
    """Caller lacks the right to perform the operation."""


class NotFoundError(MarketPalaceError):
    """Referenced entity does not exist."""


class SessionError(MarketPalaceError):
    """Registration session in the wrong state, expired, or unknown."""


class NetworkError(MarketPalaceError):
    """Peer or server unreachable after retries."""


class BadCertificateError(AuthenticationError):
    """A certified key does not verify under the door server key."""


class BadSignatureError(CorruptDataError):
    """A detached signature does not verify."""


class DecryptionError(MarketPalaceError):
    """Ciphertext cannot be decrypted by this recipient."""
