"""Python bindings for the HAKG knowledge-graph recommender."""

from ._core import (
    HakgError,
    KnowledgeGraph,
    build_subgraph,
    build_subgraphs,
    evaluate,
    load_checkpoint,
    load_kg,
    metrics_at_n,
    parameter_shapes,
    parse_kg,
    pessimistic_rank,
    prepare,
    run_cli,
    sample_paths,
    train,
    variants,
    write_synthetic,
)

__all__ = [
    "HakgError",
    "KnowledgeGraph",
    "build_subgraph",
    "build_subgraphs",
    "evaluate",
    "load_checkpoint",
    "load_kg",
    "metrics_at_n",
    "parameter_shapes",
    "parse_kg",
    "pessimistic_rank",
    "prepare",
    "run_cli",
    "sample_paths",
    "train",
    "variants",
    "write_synthetic",
]
