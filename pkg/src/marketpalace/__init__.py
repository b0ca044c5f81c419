"""MarketPalace: a Sybil-resistant decentralized marketplace.

A centralized door server admits each person at most once (hashed verified
attributes) and certifies their public key; fully peer-to-peer market nodes
gossip signed listings and exchange bids/chat over encrypted envelopes; a
deterministic simulator measures listing-propagation delay.
"""

__version__ = "0.1.0"
