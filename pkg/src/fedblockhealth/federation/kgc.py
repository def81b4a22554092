"""Key Generation Centre: group setup, key distribution, ledger registration."""
from __future__ import annotations

from dataclasses import dataclass

from ..crypto import GroupParams, KeyPair, dumps_key, generate_group, keygen
from ..errors import DomainError
from ..rng import spawn

SERVER_ID = "server"


def client_id(i: int) -> str:
    return f"client-{i:03d}"


@dataclass(frozen=True)
class Credentials:
    """What one party receives from the KGC. Only the server's carries ``sk``."""

    party_id: str
    role: str
    group: GroupParams
    pk: int
    sk: int | None = None

    @property
    def keypair(self) -> KeyPair:
        if self.sk is None:
            raise DomainError(f"{self.party_id} holds no secret key")
        return KeyPair(self.sk, self.pk)

    def public_key_bytes(self) -> bytes:
        return dumps_key(self.group, KeyPair(0, self.pk)).encode("ascii")


@dataclass
class KgcState:
    group: GroupParams
    keypair: KeyPair
    roster: list


def kgc_setup(n_clients: int, group_bits: int, seed: int, chain=None):
    """One group and one keypair for the whole simulation.

    Returns ``(KgcState, credentials)`` where ``credentials`` maps party id to
    Credentials (n clients plus the server). Every party is registered on
    ``chain`` when one is given.
    """
    if n_clients < 1:
        raise DomainError("n_clients must be at least 1")
    group = generate_group(group_bits, seed=seed)
    keypair = keygen(group, spawn(seed, 10))
    creds = {SERVER_ID: Credentials(SERVER_ID, "server", group, keypair.pk, keypair.sk)}
    for i in range(n_clients):
        cid = client_id(i)
        creds[cid] = Credentials(cid, "client", group, keypair.pk)
    state = KgcState(group, keypair, list(creds))
    if chain is not None:
        for cred in creds.values():
            chain.register(cred.party_id, cred.role, cred.public_key_bytes())
    return state, creds
