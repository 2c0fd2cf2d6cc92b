from .fetch import CACHE_ENV, CacheIntegrityError, DatasetNotFoundError, FetchError, default_cache_dir, fetch_dataset
from .io import (
    SCHEMA_VERSION,
    DatasetError,
    describe,
    document_from_signal,
    dumps_document,
    load_dataset,
    parse_document,
    read_document,
    save_dataset,
    signal_from_document,
)
from .synthetic import synthetic_benchmark_sequence, synthetic_diffusion_dataset

__all__ = [
    "CACHE_ENV",
    "CacheIntegrityError",
    "DatasetNotFoundError",
    "FetchError",
    "default_cache_dir",
    "fetch_dataset",
    "SCHEMA_VERSION",
    "DatasetError",
    "describe",
    "document_from_signal",
    "dumps_document",
    "load_dataset",
    "parse_document",
    "read_document",
    "save_dataset",
    "signal_from_document",
    "synthetic_benchmark_sequence",
    "synthetic_diffusion_dataset",
]
