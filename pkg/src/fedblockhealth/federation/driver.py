"""Round driver: broadcast -> local train -> encrypted submit -> aggregate -> mine."""
from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..config import RunConfig
from ..crypto import AggregationConfig
from ..data import Dataset, partition
from ..errors import FedBlockError, RoundAbortError
from ..ledger import Chain, sha256
from ..nn import AnnSpec, CnnSpec, Model, TrainConfig, build_ann, build_cnn, dumps_checkpoint, evaluate
from ..rng import spawn
from .client import ClientState, client_local_train, client_submit
from .kgc import SERVER_ID, client_id, kgc_setup
from .server import ServerState, server_aggregate

log = logging.getLogger(__name__)

CSV_HEADER = "round,train_loss,test_accuracy,test_loss,agg_ms,mine_ms,block_hash"
AUDITOR_ID = "auditor"


@dataclass(frozen=True)
class RoundReport:
    round: int
    train_loss: float
    test_accuracy: float
    test_loss: float
    block_hash: str | None
    update_digests: tuple = ()
    agg_ms: float = field(default=float("nan"), compare=False)
    mine_ms: float = field(default=float("nan"), compare=False)

    def csv_row(self, timings: bool = False) -> str:
        agg = f"{self.agg_ms:.3f}" if timings else ""
        mine = f"{self.mine_ms:.3f}" if timings else ""
        return (f"{self.round},{self.train_loss!r},{self.test_accuracy!r},{self.test_loss!r},"
                f"{agg},{mine},{self.block_hash or ''}")


def metrics_csv(reports, timings: bool = False) -> str:
    return CSV_HEADER + "\n" + "".join(r.csv_row(timings) + "\n" for r in reports)


@dataclass
class TrainingResult:
    reports: list
    model: Model
    chain: Chain | None
    server: ServerState
    clients: list
    stopped_early: bool = False


def build_model(config: RunConfig, seed_path=(20,)) -> Model:
    rng = spawn(config.seed, *seed_path)
    if config.model == "ann":
        return build_ann(AnnSpec(), rng)
    return build_cnn(CnnSpec(), rng)


def run_training(config: RunConfig, train: Dataset, test: Dataset, chain: Chain | None = None,
                 on_round=None, model: Model | None = None) -> TrainingResult:
    """Run ``config.rounds`` synchronous federated rounds.

    Stops early once the test loss has failed to improve by ``min_delta``
    for ``patience`` consecutive rounds (``patience=0`` disables this).
    ``chain`` defaults to a fresh ledger when ``config.ledger`` is set.
    ``model`` overrides the architecture named by ``config.model``; it is
    copied, not trained in place.
    """
    if chain is None and config.ledger:
        chain = Chain(config.difficulty, config.max_tx_per_block)
    kgc, creds = kgc_setup(config.clients, config.group_bits, config.seed, chain)
    agg = AggregationConfig.derive(config.clients, config.scale, config.clip, config.sigma, config.modulus)
    stats_agg = AggregationConfig.derive(config.clients, config.scale, config.stats_clip, config.sigma,
                                         config.modulus)
    global_model = model.clone() if model is not None else build_model(config)
    shards = partition(len(train), config.clients, config.seed)
    clients = []
    for shard in shards:
        cid = client_id(shard.client_id)
        local = global_model.clone()
        clients.append(ClientState(creds[cid], train.subset(shard.indices), local, agg, stats_agg,
                                   spawn(config.seed, 30, shard.client_id)))
    server = ServerState(global_model, creds[SERVER_ID], tuple(c.client_id for c in clients), agg, stats_agg)
    tc = TrainConfig(config.learning_rate, config.local_epochs, config.batch_size)

    reports = []
    best = float("inf")
    stale = 0
    stopped = False
    pool = ThreadPoolExecutor(max_workers=config.threads) if config.threads > 1 else None
    try:
        for r in range(1, config.rounds + 1):
            broadcast = global_model.get_state()
            if pool is not None:
                deltas = list(pool.map(lambda c: client_local_train(c, broadcast, tc), clients))
            else:
                deltas = [client_local_train(c, broadcast, tc) for c in clients]
            try:
                submissions = [client_submit(c, d, chain, r) for c, d in zip(clients, deltas)]
                del deltas
                t0 = time.perf_counter()
                server_aggregate(server, submissions)
                agg_ms = (time.perf_counter() - t0) * 1e3
            except RoundAbortError:
                raise
            except FedBlockError as exc:
                raise RoundAbortError(r, str(exc)) from exc
            t0 = time.perf_counter()
            block_hash = None
            if chain is not None:
                blocks = chain.mine_all()
                block_hash = blocks[-1].hash.hex()
            mine_ms = (time.perf_counter() - t0) * 1e3
            acc, test_loss = evaluate(global_model, test.x, test.labels)
            train_loss = float(np.mean([c.last_loss for c in clients]))
            digests = tuple(s.tx.payload_digest.hex() for s in submissions if s.tx is not None)
            report = RoundReport(r, train_loss, acc, test_loss, block_hash, digests, agg_ms, mine_ms)
            reports.append(report)
            log.info("round %d: train_loss=%.4f test_acc=%.4f test_loss=%.4f", r, train_loss, acc, test_loss)
            if on_round is not None:
                on_round(report)
            if config.patience:
                if test_loss < best - config.min_delta:
                    best, stale = test_loss, 0
                else:
                    stale += 1
                    if stale >= config.patience:
                        stopped = True
                        break
    finally:
        if pool is not None:
            pool.shutdown()
    return TrainingResult(reports, global_model, chain, server, clients, stopped)


@dataclass(frozen=True)
class ValidationRecord:
    accuracy: float
    loss: float
    checkpoint_digest: str
    auditor: str
    tx: object = None

    def payload(self) -> bytes:
        return json.dumps({"auditor": self.auditor, "accuracy": self.accuracy, "loss": self.loss,
                           "checkpoint_sha256": self.checkpoint_digest}, sort_keys=True).encode("utf-8")


def validate_model_hook(model: Model, held_out: Dataset, chain: Chain | None = None,
                        auditor: str = AUDITOR_ID, round_index: int = 0) -> ValidationRecord:
    """Evaluate on held-out data and log an auditor record on the ledger.

    This is a sign-off hook only: the record binds the checkpoint digest and
    metrics to the auditor's ledger identity; no external audit protocol runs.
    """
    acc, loss = evaluate(model, held_out.x, held_out.labels)
    digest = sha256(dumps_checkpoint(model)).hex()
    record = ValidationRecord(acc, loss, digest, auditor)
    if chain is not None:
        if auditor not in chain.contracts:
            chain.register(auditor, "auditor", auditor.encode("utf-8"))
        tx = chain.submit_tx(auditor, record.payload(), "validation", round_index)
        record = ValidationRecord(acc, loss, digest, auditor, tx)
    return record


def verify_validation_record(record: ValidationRecord, checkpoint_bytes: bytes) -> bool:
    return sha256(checkpoint_bytes).hex() == record.checkpoint_digest
