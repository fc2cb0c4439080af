"""Zero-shot feature classification via generated pseudo training data.

A conditional variational autoencoder is trained on feature vectors of
seen classes, conditioned on per-class attribute vectors. Feature
vectors for unseen classes are then sampled from the decoder using their
attributes alone, and an ordinary linear classifier is trained on the
synthetic samples. Everything is plain numpy; no GPU or autograd
framework is involved.
"""

from .errors import (
    ConfigError,
    DataError,
    FormatError,
    InputError,
    ShapeError,
    StateError,
    TrainingDivergedError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "FormatError",
    "InputError",
    "ShapeError",
    "StateError",
    "TrainingDivergedError",
    "__version__",
]
