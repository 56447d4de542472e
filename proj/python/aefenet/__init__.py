"""Process fault detection with stacked window-SVD autoencoder features."""

from ._aefenet import (
    Error,
    FormatError,
    InvalidArgument,
    Model,
    NumericalError,
    ParseError,
    column_subsets,
    default_config,
    far,
    fdr,
    fit,
    from_bytes,
    generate_synthetic,
    load,
    window_singular_values,
)

__all__ = [
    "Error",
    "FormatError",
    "InvalidArgument",
    "Model",
    "NumericalError",
    "ParseError",
    "column_subsets",
    "default_config",
    "far",
    "fdr",
    "fit",
    "from_bytes",
    "generate_synthetic",
    "load",
    "window_singular_values",
]
