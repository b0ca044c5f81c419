"""Listings, bids, and chat: the market domain logic."""

from marketpalace.market.listings import (
    Listing,
    ListingStatus,
    SignedListing,
    Tombstone,
    content_id_of,
    create_signed_listing,
    make_tombstone,
    verify_signed_listing,
    verify_tombstone,
)
from marketpalace.market.store import ListingStore, MergeReport
from marketpalace.market.payloads import (
    Bid,
    ChatMessage,
    chat_channel_id,
    make_bid_payload,
    parse_bid_payload,
    make_chat_payload,
    parse_chat_payload,
)

__all__ = [
    "Listing",
    "ListingStatus",
    "SignedListing",
    "Tombstone",
    "content_id_of",
    "create_signed_listing",
    "make_tombstone",
    "verify_signed_listing",
    "verify_tombstone",
    "ListingStore",
    "MergeReport",
    "Bid",
    "ChatMessage",
    "chat_channel_id",
    "make_bid_payload",
    "parse_bid_payload",
    "make_chat_payload",
    "parse_chat_payload",
]
