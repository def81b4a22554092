"""Federated learning with exponential-ElGamal secure aggregation and a
proof-of-work audit ledger."""

from ._backend import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
