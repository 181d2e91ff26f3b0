"""Character-level query reformulation: anchor mining, seq2seq generation,
query-likelihood retrieval and TREC-style evaluation."""

from ._qreform import (
    DataError,
    Index,
    Model,
    NumericError,
    __version__,
    average_precision,
    build_pairs,
    err_at_k,
    ndcg_at_k,
    normalize_anchor,
    precision_at_k,
    run_cli,
    tokenize,
    word_jaccard,
)

__all__ = [
    "DataError",
    "Index",
    "Model",
    "NumericError",
    "__version__",
    "average_precision",
    "build_pairs",
    "err_at_k",
    "ndcg_at_k",
    "normalize_anchor",
    "precision_at_k",
    "run_cli",
    "tokenize",
    "word_jaccard",
]
