from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError


@dataclass(frozen=True)
class Dataset:
    """Images (N, 28, 28) in [0, 1] with integer labels in [0, 9]."""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise DomainError(f"{len(self.images)} images but {len(self.labels)} labels")
        if self.images.ndim != 3:
            raise DomainError(f"images must be (N, H, W), got shape {self.images.shape}")
        if self.images.size and (self.images.min() < 0 or self.images.max() > 1):
            raise DomainError("pixel values must lie in [0, 1]")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() > 9):
            raise DomainError("labels must lie in [0, 9]")

    def __len__(self):
        return len(self.labels)

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.images[idx], self.labels[idx])

    @property
    def x(self) -> np.ndarray:
        """Images as an (N, 1, H, W) batch for the network."""
        return self.images[:, None, :, :]
