"""Visual-bug detection for sprite-based 2D canvas scenes."""

from ._spritecheck import (
    Error,
    accuracy,
    build_pairs,
    cliffs_delta,
    embedding,
    esim,
    format_percent,
    list_bugs,
    mann_whitney_u,
    mse,
    pct,
    read_png,
    run_cli,
    simulate,
    ssim,
    verify_bug,
    write_png,
)

__all__ = [
    "Error",
    "accuracy",
    "build_pairs",
    "cliffs_delta",
    "embedding",
    "esim",
    "format_percent",
    "list_bugs",
    "mann_whitney_u",
    "mse",
    "pct",
    "read_png",
    "run_cli",
    "simulate",
    "ssim",
    "verify_bug",
    "write_png",
]
