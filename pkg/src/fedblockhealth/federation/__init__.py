"""Federated training protocol: KGC, clients, server and the round driver."""

from .client import ClientState, Submission, client_local_train, client_submit
from .driver import (
    AUDITOR_ID,
    CSV_HEADER,
    RoundReport,
    TrainingResult,
    ValidationRecord,
    build_model,
    metrics_csv,
    run_training,
    validate_model_hook,
    verify_validation_record,
)
from .kgc import SERVER_ID, Credentials, KgcState, client_id, kgc_setup
from .server import ServerState, server_aggregate

__all__ = [
    "AUDITOR_ID", "CSV_HEADER", "ClientState", "Credentials", "KgcState", "RoundReport", "SERVER_ID",
    "ServerState", "Submission", "TrainingResult", "ValidationRecord", "build_model", "client_id",
    "client_local_train", "client_submit", "kgc_setup", "metrics_csv", "run_training", "server_aggregate",
    "validate_model_hook", "verify_validation_record",
]
