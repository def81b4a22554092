"""Proof-of-work audit ledger with simulated smart-contract access control."""

from .chain import (
    GENESIS,
    Block,
    Chain,
    ContractRecord,
    Transaction,
    block_hash,
    leading_zero_bits,
    sha256,
    tx_root,
    verify_chain,
)
from .export import dumps_chain, loads_chain

__all__ = [
    "GENESIS", "Block", "Chain", "ContractRecord", "Transaction", "block_hash", "dumps_chain",
    "leading_zero_bits", "loads_chain", "sha256", "tx_root", "verify_chain",
]
