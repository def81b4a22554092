"""Exponential ElGamal over safe-prime groups and the secure-summation pipeline."""

from .dlog import dlog_recover
from .elgamal import Ciphertext, KeyPair, decrypt, encode, encrypt, encrypt_exponent, fold, hom_combine, keygen
from .group import GroupParams, generate_group, is_probable_prime
from .noise import discrete_gaussian_pmf, sample_discrete_gaussian
from .pipeline import (
    AggregationConfig,
    QuantizedVector,
    add_discrete_gaussian,
    aggregate_decrypt,
    dequantize,
    encrypt_update,
    quantize,
)
from .serialize import dumps_ciphertexts, dumps_key, loads_ciphertexts, loads_key

__all__ = [
    "AggregationConfig", "Ciphertext", "GroupParams", "KeyPair", "QuantizedVector",
    "add_discrete_gaussian", "aggregate_decrypt", "decrypt", "dequantize", "discrete_gaussian_pmf",
    "dlog_recover", "dumps_ciphertexts", "dumps_key", "encode", "encrypt", "encrypt_exponent",
    "encrypt_update", "fold", "generate_group", "hom_combine", "is_probable_prime", "keygen",
    "loads_ciphertexts", "loads_key", "quantize", "sample_discrete_gaussian",
]
