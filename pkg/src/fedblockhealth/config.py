"""Run configuration: defaults, ``key=value`` files and canonical text form."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

from .errors import DomainError, FormatError

MODELS = ("cnn", "ann")


@dataclass(frozen=True)
class RunConfig:
    clients: int = 10
    rounds: int = 20
    local_epochs: int = 1
    batch_size: int = 10
    learning_rate: float = 0.05
    scale: int = 1024
    clip: float = 1.0
    stats_clip: float = 1024.0
    sigma: float = 0.0
    group_bits: int = 128
    difficulty: int = 8
    seed: int = 0
    dataset_dir: str = ""
    synthetic: bool = False
    model: str = "cnn"
    train_size: int = 2000
    test_size: int = 1000
    val_size: int = 200
    modulus: int = 2 ** 32
    max_tx_per_block: int = 16
    patience: int = 5
    min_delta: float = 1e-4
    threads: int = 1
    ledger: bool = True
    record_timings: bool = False

    def __post_init__(self):
        if self.clients < 1:
            raise DomainError("clients must be at least 1")
        if self.rounds < 0 or self.local_epochs < 0 or self.patience < 0:
            raise DomainError("rounds, local_epochs and patience must be non-negative")
        if self.batch_size < 1 or self.threads < 1 or self.max_tx_per_block < 1:
            raise DomainError("batch_size, threads and max_tx_per_block must be positive")
        if not self.learning_rate > 0 or not self.clip > 0 or not self.stats_clip > 0 or self.sigma < 0 or self.scale < 1:
            raise DomainError("learning_rate and clip must be positive, sigma non-negative, scale >= 1")
        if self.model not in MODELS:
            raise DomainError(f"model must be one of {MODELS}")
        if self.group_bits < 8 or not 0 <= self.difficulty <= 256:
            raise DomainError("group_bits must be >= 8 and difficulty in [0, 256]")
        if min(self.train_size, self.test_size, self.val_size) < 0:
            raise DomainError("split sizes must be non-negative")

    def to_text(self) -> str:
        return "".join(f"{f.name}={_format(getattr(self, f.name))}\n" for f in fields(self))

    def with_overrides(self, **overrides) -> "RunConfig":
        clean = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(clean) - {f.name for f in fields(self)}
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        return replace(self, **clean)

    def as_dict(self) -> dict:
        return asdict(self)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def _coerce(name, kind, raw: str):
    try:
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw, 0)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise FormatError(f"config key {name!r}: cannot parse {raw!r} as {kind}") from None


_KINDS = {f.name: f.type for f in fields(RunConfig)}


def parse_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    """Apply ``key=value`` lines (``#`` comments allowed) on top of ``base``."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip()
        if not sep:
            raise FormatError(f"config line {lineno}: expected key=value")
        if key not in _KINDS:
            raise FormatError(f"config line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, _KINDS[key], raw.strip())
    return (base or RunConfig()).with_overrides(**values)


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), base)
