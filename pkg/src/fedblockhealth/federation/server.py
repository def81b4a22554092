"""Server side: homomorphic aggregation and federated averaging."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..crypto import AggregationConfig, GroupParams, aggregate_decrypt
from ..errors import DomainError, IncompleteRoundError, OutOfBoundError, RoundAbortError
from ..ledger import sha256
from ..nn import Model
from .kgc import Credentials


@dataclass
class ServerState:
    model: Model
    credentials: Credentials
    roster: tuple
    agg: AggregationConfig
    stats_agg: AggregationConfig
    round: int = 0

    @property
    def group(self) -> GroupParams:
        return self.credentials.group


def _decrypt_channel(server, vectors, agg):
    if not vectors[0]:
        return np.zeros(0)
    sums = aggregate_decrypt(vectors, server.credentials.keypair, server.group, agg)
    return sums / agg.scale / len(vectors)


def server_aggregate(server: ServerState, submissions) -> Model:
    """Fold, decrypt and average one full round of submissions into the global model.

    Submissions whose ledger receipt does not hash-match their ciphertexts,
    or whose aggregate leaves the discrete-log window, abort the round.
    """
    by_id = {}
    for sub in submissions:
        if sub.client_id not in server.roster:
            raise DomainError(f"submission from {sub.client_id}, who is not on the roster")
        if sub.client_id in by_id:
            raise DomainError(f"duplicate submission from {sub.client_id}")
        by_id[sub.client_id] = sub
    missing = [c for c in server.roster if c not in by_id]
    if missing:
        raise IncompleteRoundError(f"waiting for {len(missing)} of {len(server.roster)} clients: {missing[:3]}")
    next_round = server.round + 1
    ordered = [by_id[c] for c in server.roster]
    for sub in ordered:
        if sub.tx is not None and sha256(sub.payload()) != sub.tx.payload_digest:
            raise RoundAbortError(next_round, f"ciphertexts from {sub.client_id} do not match their ledger digest")
    try:
        avg = np.concatenate([
            _decrypt_channel(server, [s.ciphertexts for s in ordered], server.agg),
            _decrypt_channel(server, [s.stat_ciphertexts for s in ordered], server.stats_agg),
        ])
    except OutOfBoundError as exc:
        raise RoundAbortError(next_round, f"aggregate overflow or tampering: {exc}") from exc
    except DomainError as exc:
        raise RoundAbortError(next_round, str(exc)) from exc
    state = server.model.get_state()
    if avg.shape != state.shape:
        raise RoundAbortError(next_round, f"aggregate has {avg.size} coordinates, model has {state.size}")
    server.model.set_state(state + avg)
    server.round = next_round
    return server.model
