"""Morphing of manifold-valued images.

Images are numpy arrays of shape (n1, n2, dof) together with a Manifold that
says how to read the last axis (SPD matrices are stored row-major).
"""

from ._core import (
    CutLocusError,
    DegenerateDeformation,
    InvalidArgument,
    Manifold,
    ParseError,
    morph,
    optimal_images,
    read_mvr,
    register,
    synthetic_pair,
    write_mvr,
)

__all__ = [
    "CutLocusError",
    "DegenerateDeformation",
    "InvalidArgument",
    "Manifold",
    "ParseError",
    "morph",
    "optimal_images",
    "read_mvr",
    "register",
    "synthetic_pair",
    "write_mvr",
]
__version__ = "0.1.0"
