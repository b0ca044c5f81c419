"""Centralized registration authority (the door server)."""

from marketpalace.door.attributes import AttributeDisclosure, AttributeIssuer, IssuerRegistry
from marketpalace.door.hashstore import HashStore
from marketpalace.door.service import DisclosureResult, DoorService, SessionToken

__all__ = [
    "AttributeDisclosure",
    "AttributeIssuer",
    "IssuerRegistry",
    "HashStore",
    "DisclosureResult",
    "DoorService",
    "SessionToken",
]
