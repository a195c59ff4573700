"""Integer-programming design and evaluation of error-correcting output codes."""

__version__ = "0.1.0"

from .codebook import Codebook, generate_exhaustive, one_vs_all, one_vs_one  # noqa: E402,F401
