"""JSON-lines chain export: one block per line, hashes as lowercase hex."""
from __future__ import annotations

import json

from ..errors import FormatError
from .chain import Block, Transaction


def block_to_dict(blk: Block, difficulty: int) -> dict:
    return {
        "index": blk.index,
        "prev_hash": blk.prev_hash.hex(),
        "tx_root": blk.tx_root.hex(),
        "timestamp": blk.timestamp,
        "nonce": blk.nonce,
        "hash": blk.hash.hex(),
        "difficulty": difficulty,
        "txs": [{"sender": tx.sender, "payload_digest": tx.payload_digest.hex(), "kind": tx.kind,
                 "round": tx.round, "timestamp": tx.timestamp} for tx in blk.txs],
    }


def dumps_chain(blocks, difficulty: int) -> str:
    return "".join(json.dumps(block_to_dict(b, difficulty), separators=(",", ":")) + "\n" for b in blocks)


def _hex(value, field):
    if not isinstance(value, str) or value != value.lower():
        raise FormatError(f"field {field!r}: expected lowercase hex")
    try:
        return bytes.fromhex(value)
    except ValueError:
        raise FormatError(f"field {field!r}: expected lowercase hex") from None


def _int(value, field):
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise FormatError(f"field {field!r}: expected a non-negative integer")
    return value


def loads_chain(text: str) -> tuple[list[Block], int]:
    """Parse an export into (blocks, difficulty)."""
    blocks = []
    difficulty = None
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            txs = tuple(
                Transaction(t["sender"], _hex(t["payload_digest"], "payload_digest"), t["kind"],
                            _int(t["round"], "round"), _int(t["timestamp"], "timestamp"))
                for t in d["txs"])
            blk = Block(_int(d["index"], "index"), _hex(d["prev_hash"], "prev_hash"), txs,
                        _hex(d["tx_root"], "tx_root"), _int(d["nonce"], "nonce"),
                        _int(d["timestamp"], "timestamp"), _hex(d["hash"], "hash"))
            diff = _int(d["difficulty"], "difficulty")
        except FormatError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
        except (ValueError, KeyError, TypeError) as exc:
            raise FormatError(f"line {lineno}: {exc!r}") from None
        if difficulty is None:
            difficulty = diff
        elif diff != difficulty:
            raise FormatError(f"line {lineno}: difficulty {diff} differs from {difficulty}")
        blocks.append(blk)
    if not blocks:
        raise FormatError("chain export is empty")
    return blocks, difficulty
