"""Client side: local training and encrypted submission."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..crypto import AggregationConfig, add_discrete_gaussian, dumps_ciphertexts, encrypt_update, quantize
from ..data import Dataset
from ..errors import AccessError, DomainError
from ..nn import Model, TrainConfig, train
from .kgc import Credentials


@dataclass
class ClientState:
    """One hospital: credentials, private shard, local model replica.

    ``agg`` governs the trainable-weight channel, ``stats_agg`` the
    batch-norm running-statistics channel (same scale, wider clip).
    """

    credentials: Credentials
    data: Dataset
    model: Model
    agg: AggregationConfig
    stats_agg: AggregationConfig
    rng: np.random.Generator
    last_loss: float = float("nan")

    @property
    def client_id(self) -> str:
        return self.credentials.party_id


@dataclass(frozen=True)
class Submission:
    """Everything a client sends the server: ciphertexts and the ledger receipt."""

    client_id: str
    ciphertexts: tuple
    stat_ciphertexts: tuple = ()
    tx: object = None

    def payload(self) -> bytes:
        """Canonical bytes hashed onto the ledger: weight vector then statistics vector."""
        return dumps_ciphertexts(self.ciphertexts) + dumps_ciphertexts(self.stat_ciphertexts)


def client_local_train(client: ClientState, global_state, config: TrainConfig) -> np.ndarray:
    """Train from the broadcast state; returns the flattened state delta.

    The delta covers trainable parameters followed by batch-norm running
    statistics, in the model's flatten order.
    """
    if len(client.data) == 0:
        raise DomainError(f"{client.client_id} has an empty shard")
    global_state = np.asarray(global_state, dtype=np.float64)
    client.model.set_state(global_state)
    history = train(client.model, client.data.x, client.data.labels, config, client.rng)
    client.last_loss = history[-1] if history else float("nan")
    return client.model.get_state() - global_state


def _encrypt_channel(client, values, agg):
    cred = client.credentials
    qv = quantize(values, agg)
    if agg.sigma > 0:
        qv = add_discrete_gaussian(qv, agg.sigma, client.rng)
    return tuple(encrypt_update(qv, cred.pk, cred.group, agg, client.rng))


def client_submit(client: ClientState, delta, chain=None, round_index: int = 0) -> Submission:
    """Quantize, noise and encrypt a state delta; log its digest on the ledger."""
    if chain is not None and client.client_id not in chain.contracts:
        raise AccessError(f"{client.client_id} is not registered on the ledger")
    delta = np.asarray(delta, dtype=np.float64)
    n = client.model.n_params
    if delta.shape != (client.model.get_state().size,):
        raise DomainError(f"delta has shape {delta.shape}, model state has {client.model.get_state().size} entries")
    sub = Submission(client.client_id, _encrypt_channel(client, delta[:n], client.agg),
                     _encrypt_channel(client, delta[n:], client.stats_agg))
    if chain is not None:
        tx = chain.submit_tx(client.client_id, sub.payload(), "update", round_index)
        sub = Submission(sub.client_id, sub.ciphertexts, sub.stat_ciphertexts, tx)
    return sub
