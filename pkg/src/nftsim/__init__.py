"""Formal NFT model: ledger state machine, ownership laws, public certifiability."""

__version__ = "0.1.0"
