"""Sum-product network image classifiers: max-margin training, t-SPN label grouping, patch features."""

from ._core import (
    Codebook,
    FormatError,
    Graph,
    ImageError,
    ParseError,
    ShapeError,
    StructuralError,
    accuracy,
    build_flat,
    build_tspn,
    class_scores,
    confusion,
    filter_image,
    learn_codebook,
    log_kernel,
    predict,
    read_image,
    run_variant,
    select_confused,
    train,
    write_png,
)

__all__ = [
    "Codebook",
    "FormatError",
    "Graph",
    "ImageError",
    "ParseError",
    "ShapeError",
    "StructuralError",
    "accuracy",
    "build_flat",
    "build_tspn",
    "class_scores",
    "confusion",
    "filter_image",
    "learn_codebook",
    "log_kernel",
    "predict",
    "read_image",
    "run_variant",
    "select_confused",
    "train",
    "write_png",
]
