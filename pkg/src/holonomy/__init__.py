"""Transverse dynamics of one-dimensional pseudogroups of local maps.

Expansion exponents, regular-index truncation, certified contractions,
hyperbolic fixed points, ping-pong detection and entropy estimates.
"""

__version__ = "0.1.0"

from .maps import Affine, Composite, Hermite, Interval, LocalMap, Moebius  # noqa: E402
from .pseudogroup import Pseudogroup, Transversal, Word, compose, enumerate_words, orbit  # noqa: E402

__all__ = ["__version__", "Affine", "Composite", "Hermite", "Interval", "LocalMap", "Moebius",
           "Pseudogroup", "Transversal", "Word", "compose", "enumerate_words", "orbit"]
