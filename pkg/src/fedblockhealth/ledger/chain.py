"""Simulated proof-of-work ledger with a smart-contract registry.

Only SHA-256 digests go on chain; payloads sit in an off-chain
content-addressed store and are released to authorized parties only.
"""
from __future__ import annotations

import hashlib
import json
import struct
import threading
from collections import deque
from dataclasses import dataclass, field

from .._backend import kernels
from ..errors import AccessError, DomainError, IdentityConflictError, NothingToMineError, NotFoundError

ROLES = ("client", "server", "auditor")
KINDS = ("registration", "update", "validation")
ZERO_HASH = bytes(32)
DEFAULT_DIFFICULTY = 8
DEFAULT_MAX_TX = 16


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


@dataclass(frozen=True)
class ContractRecord:
    party_id: str
    role: str
    key_fingerprint: bytes
    abi: str
    bytecode_digest: bytes
    registered_at: int

    def to_bytes(self) -> bytes:
        return json.dumps({
            "party_id": self.party_id, "role": self.role, "key_fingerprint": self.key_fingerprint.hex(),
            "abi": self.abi, "bytecode_digest": self.bytecode_digest.hex(), "registered_at": self.registered_at,
        }, separators=(",", ":")).encode("utf-8")


@dataclass(frozen=True)
class Transaction:
    sender: str
    payload_digest: bytes
    kind: str
    round: int
    timestamp: int

    def to_bytes(self) -> bytes:
        s = self.sender.encode("utf-8")
        k = self.kind.encode("utf-8")
        return (b"FBHTX1" + struct.pack(">H", len(s)) + s + struct.pack(">B", len(k)) + k
                + self.payload_digest + struct.pack(">QQ", self.round, self.timestamp))

    @property
    def tx_hash(self) -> bytes:
        return sha256(self.to_bytes())


def tx_root(txs) -> bytes:
    """SHA-256 over the concatenated transaction hashes, in block order."""
    return sha256(b"".join(tx.tx_hash for tx in txs))


def header_prefix(index: int, prev_hash: bytes, root: bytes, timestamp: int) -> bytes:
    return struct.pack(">Q", index) + prev_hash + root + struct.pack(">Q", timestamp)


def block_hash(index, prev_hash, root, timestamp, nonce) -> bytes:
    """SHA-256 of u64be(index) || prev_hash || tx_root || u64be(timestamp) || u64be(nonce)."""
    return sha256(header_prefix(index, prev_hash, root, timestamp) + struct.pack(">Q", nonce))


def leading_zero_bits(digest: bytes) -> int:
    value = int.from_bytes(digest, "big")
    return len(digest) * 8 - value.bit_length()


@dataclass(frozen=True)
class Block:
    index: int
    prev_hash: bytes
    txs: tuple
    tx_root: bytes
    nonce: int
    timestamp: int
    hash: bytes


def genesis_block() -> Block:
    root = tx_root(())
    return Block(0, ZERO_HASH, (), root, 0, 0, block_hash(0, ZERO_HASH, root, 0, 0))


GENESIS = genesis_block()


def verify_chain(chain, difficulty: int | None = None):
    """Index of the first block that breaks an invariant, or None if the chain is sound.

    Accepts a Chain or a plain block sequence (then ``difficulty`` is required).
    """
    if isinstance(chain, Chain):
        blocks, difficulty = chain.blocks, chain.difficulty
    else:
        blocks = list(chain)
        if difficulty is None:
            raise DomainError("difficulty is required when verifying a bare block list")
    if not blocks:
        return 0
    for i, blk in enumerate(blocks):
        if i == 0:
            if blk != GENESIS:
                return 0
            continue
        prev = blocks[i - 1]
        if blk.index != prev.index + 1 or blk.prev_hash != prev.hash or blk.timestamp <= prev.timestamp:
            return i
        if any(len(tx.payload_digest) != 32 for tx in blk.txs):
            return i
        if blk.tx_root != tx_root(blk.txs):
            return i
        if blk.hash != block_hash(blk.index, blk.prev_hash, blk.tx_root, blk.timestamp, blk.nonce):
            return i
        if leading_zero_bits(blk.hash) < difficulty:
            return i
    return None


def _fingerprint(pk_bytes: bytes) -> bytes:
    return sha256(pk_bytes)


class Chain:
    """Single-miner chain plus contract registry, access policy and payload store."""

    def __init__(self, difficulty: int = DEFAULT_DIFFICULTY, max_tx_per_block: int = DEFAULT_MAX_TX):
        if not 0 <= difficulty <= 256:
            raise DomainError("difficulty must be in [0, 256]")
        if max_tx_per_block < 1:
            raise DomainError("max_tx_per_block must be positive")
        self.difficulty = difficulty
        self.max_tx_per_block = max_tx_per_block
        self.blocks: list[Block] = [GENESIS]
        self.pool: deque[Transaction] = deque()
        self.contracts: dict[str, ContractRecord] = {}
        self.authorized: set[str] = set()
        self._store: dict[bytes, bytes] = {}
        self._mined: set[bytes] = set()
        self._clock = 0
        self._lock = threading.RLock()

    def _tick(self) -> int:
        self._clock += 1
        return self._clock

    @property
    def head(self) -> Block:
        return self.blocks[-1]

    def register(self, party_id: str, role: str, pk_bytes: bytes) -> ContractRecord:
        """Create (or return the existing) contract record for ``party_id``."""
        if role not in ROLES:
            raise DomainError(f"role must be one of {ROLES}")
        fp = _fingerprint(pk_bytes)
        with self._lock:
            existing = self.contracts.get(party_id)
            if existing is not None:
                if existing.key_fingerprint != fp:
                    raise IdentityConflictError(f"{party_id} is already registered with a different key")
                return existing
            abi = f"fbh-contract/1;party={party_id};role={role};key={fp.hex()[:16]}"
            bytecode = sha256(b"fbh-bytecode/1\x00" + party_id.encode("utf-8") + b"\x00" + role.encode() + fp)
            record = ContractRecord(party_id, role, fp, abi, bytecode, self._tick())
            self.contracts[party_id] = record
            self.authorized.add(party_id)
            self._enqueue(party_id, record.to_bytes(), "registration", 0)
            return record

    def authorize(self, party_id: str) -> None:
        """Grant read access without a contract (e.g. an external auditor)."""
        with self._lock:
            self.authorized.add(party_id)

    def _enqueue(self, sender, payload, kind, round_index):
        digest = sha256(payload)
        tx = Transaction(sender, digest, kind, round_index, self._tick())
        self._store[digest] = bytes(payload)
        self.pool.append(tx)
        return tx

    def submit_tx(self, sender: str, payload: bytes, kind: str = "update", round_index: int = 0) -> Transaction:
        if kind not in KINDS:
            raise DomainError(f"kind must be one of {KINDS}")
        if round_index < 0:
            raise DomainError("round index must be non-negative")
        with self._lock:
            if sender not in self.contracts:
                raise AccessError(f"{sender} has no contract on this chain")
            return self._enqueue(sender, payload, kind, round_index)

    def mine(self, max_tx: int | None = None) -> Block:
        """Seal up to ``max_tx`` pooled transactions (FIFO) into a new block."""
        with self._lock:
            if not self.pool:
                raise NothingToMineError("transaction pool is empty")
            limit = max_tx or self.max_tx_per_block
            txs = tuple(self.pool.popleft() for _ in range(min(limit, len(self.pool))))
            prev = self.head
            root = tx_root(txs)
            ts = self._tick()
            index = prev.index + 1
            nonce, digest = kernels.search_nonce(header_prefix(index, prev.hash, root, ts), self.difficulty, 0)
            blk = Block(index, prev.hash, txs, root, nonce, ts, digest)
            self.blocks.append(blk)
            self._mined.update(tx.payload_digest for tx in txs)
            return blk

    def mine_all(self) -> list[Block]:
        out = []
        while self.pool:
            out.append(self.mine())
        return out

    def retrieve(self, requester: str, digest: bytes) -> bytes:
        """Payload behind a mined digest, for authorized requesters only."""
        with self._lock:
            if digest not in self._mined:
                raise NotFoundError(f"digest {digest.hex()} is not in any mined block")
            if requester not in self.authorized:
                raise AccessError(f"{requester} is not authorized to read chain payloads")
            return self._store[digest]

    def verify(self):
        return verify_chain(self)
