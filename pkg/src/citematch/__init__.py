"""Citation matching: reference parsing, field similarity, a rotation
index for candidate retrieval and a single-machine map/reduce pipeline."""

__version__ = "0.1.0"
