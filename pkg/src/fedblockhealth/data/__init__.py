"""Dataset ingestion, synthetic digits, splitting and client sharding."""

from .dataset import Dataset
from .idx import dumps_idx, find_idx_pairs, load_idx, load_idx_dir, parse_idx_images, parse_idx_labels, write_idx
from .split import REFERENCE_COUNTS, Shard, SplitSpec, partition, split, split_indices
from .synth import synth_digits

__all__ = [
    "Dataset", "REFERENCE_COUNTS", "Shard", "SplitSpec", "dumps_idx", "find_idx_pairs", "load_idx",
    "load_idx_dir", "parse_idx_images", "parse_idx_labels", "partition", "split", "split_indices",
    "synth_digits", "write_idx",
]
