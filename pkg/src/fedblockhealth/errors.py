"""Exception hierarchy shared by every subsystem."""


class FedBlockError(Exception):
    """Base class for all package errors."""


class DomainError(FedBlockError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class GenerationBudgetError(FedBlockError, RuntimeError):
    """Safe-prime search exhausted its iteration budget."""


class OutOfBoundError(FedBlockError, ArithmeticError):
    """A discrete log has no solution inside the requested bound."""


class FormatError(FedBlockError, ValueError):
    """A file or wire payload does not match its documented layout."""


class AccessError(FedBlockError, PermissionError):
    """The caller is not registered or not authorized on the ledger."""


class IdentityConflictError(FedBlockError):
    """A party re-registered with a different public key."""


class NothingToMineError(FedBlockError):
    """Mining was requested with an empty transaction pool."""


class NotFoundError(FedBlockError, LookupError):
    """A digest is unknown or has not been mined yet."""


class RoundAbortError(FedBlockError):
    """A federated round could not complete.

    ``round_index`` is the 1-based round that failed.
    """

    def __init__(self, round_index, message):
        super().__init__(f"round {round_index}: {message}")
        self.round_index = round_index


class IncompleteRoundError(FedBlockError):
    """Aggregation was attempted before every roster member submitted."""
