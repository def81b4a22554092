"""Text serialization for keys and ciphertext vectors.

Key files are line-based ``key=value`` with lowercase big-endian hex
magnitudes::

    p=17
    q=b
    g=4
    h=12
    x=3        # optional secret

Ciphertext vectors are a decimal count line followed by one ``c1 c2`` hex
pair per line.
"""
from __future__ import annotations

from ..errors import FormatError
from .elgamal import Ciphertext, KeyPair
from .group import GroupParams


def _hex(n: int) -> str:
    return format(n, "x")


def _unhex(field: str, value: str) -> int:
    if not value or value != value.lower() or value.startswith(("-", "+", "0x")):
        raise FormatError(f"field {field!r}: expected lowercase hex, got {value!r}")
    try:
        return int(value, 16)
    except ValueError:
        raise FormatError(f"field {field!r}: expected lowercase hex, got {value!r}") from None


def dumps_key(params: GroupParams, keypair: KeyPair, include_secret: bool = False) -> str:
    lines = [f"p={_hex(params.p)}", f"q={_hex(params.q)}", f"g={_hex(params.g)}", f"h={_hex(keypair.pk)}"]
    if include_secret:
        lines.append(f"x={_hex(keypair.sk)}")
    return "\n".join(lines) + "\n"


def loads_key(text: str) -> tuple[GroupParams, KeyPair]:
    """Parse a key file; the returned KeyPair has ``sk == 0`` when x is absent."""
    fields = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"line {lineno}: expected key=value")
        key = key.strip()
        if key not in ("p", "q", "g", "h", "x"):
            raise FormatError(f"line {lineno}: unknown field {key!r}")
        if key in fields:
            raise FormatError(f"line {lineno}: duplicate field {key!r}")
        fields[key] = _unhex(key, value.strip())
    for key in ("p", "q", "g", "h"):
        if key not in fields:
            raise FormatError(f"missing field {key!r}")
    params = GroupParams(fields["p"], fields["q"], fields["g"])
    return params, KeyPair(fields.get("x", 0), fields["h"])


def dumps_ciphertexts(cts) -> bytes:
    cts = list(cts)
    body = "".join(f"{_hex(c.c1)} {_hex(c.c2)}\n" for c in cts)
    return f"{len(cts)}\n{body}".encode("ascii")


def loads_ciphertexts(data: bytes) -> list[Ciphertext]:
    try:
        lines = data.decode("ascii").split("\n")
    except UnicodeDecodeError:
        raise FormatError("ciphertext vector is not ASCII") from None
    if not lines or not lines[0].isdigit():
        raise FormatError("field 'count': missing length prefix")
    n = int(lines[0])
    if len(lines) != n + 2 or lines[-1] != "":
        raise FormatError(f"field 'count': prefix says {n} pairs, found {max(len(lines) - 2, 0)}")
    out = []
    for i, line in enumerate(lines[1:n + 1]):
        parts = line.split(" ")
        if len(parts) != 2:
            raise FormatError(f"pair {i}: expected 'c1 c2'")
        out.append(Ciphertext(_unhex("c1", parts[0]), _unhex("c2", parts[1])))
    return out
