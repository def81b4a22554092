"""Seeded train/test/validation splits and client shards."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..rng import spawn
from .dataset import Dataset

# Training / testing / validation sample counts of the reference EMNIST split.
REFERENCE_COUNTS = (71_039, 14_799, 17_760)


@dataclass(frozen=True)
class SplitSpec:
    train: int
    test: int
    validation: int = 0
    seed: int = 0

    @classmethod
    def proportional(cls, available: int, seed: int = 0, counts=REFERENCE_COUNTS) -> "SplitSpec":
        """Counts in the reference ratio that fit inside ``available`` samples."""
        total = sum(counts)
        if available >= total:
            return cls(*counts, seed=seed)
        tr, te, va = (available * c // total for c in counts)
        return cls(tr, te, va, seed)


@dataclass(frozen=True)
class Shard:
    client_id: int
    indices: np.ndarray


def split_indices(n_available: int, spec: SplitSpec):
    counts = (spec.train, spec.test, spec.validation)
    if min(counts) < 0 or sum(counts) > n_available:
        raise DomainError(f"split {counts} needs {sum(counts)} samples, only {n_available} available")
    order = spawn(spec.seed, 0).permutation(n_available)
    a, b = spec.train, spec.train + spec.test
    return order[:a], order[a:b], order[b:b + spec.validation]


def split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Seeded shuffle, then contiguous train / test / validation slices."""
    return tuple(dataset.subset(ix) for ix in split_indices(len(dataset), spec))


def partition(n_samples: int, n_clients: int, seed: int = 0) -> list[Shard]:
    """Equal IID shards over range(n_samples); the remainder goes round-robin."""
    if n_clients < 1:
        raise DomainError("n_clients must be at least 1")
    if n_clients > n_samples:
        raise DomainError(f"{n_clients} clients but only {n_samples} samples")
    order = spawn(seed, 1).permutation(n_samples)
    base = n_samples // n_clients
    shards = [list(order[c * base:(c + 1) * base]) for c in range(n_clients)]
    for k, idx in enumerate(order[n_clients * base:]):
        shards[k % n_clients].append(idx)
    return [Shard(c, np.array(s, dtype=np.int64)) for c, s in enumerate(shards)]
