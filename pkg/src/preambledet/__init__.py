"""Preamble detection for short packets on simulated grant-free ALOHA channels."""
from .kernels import DEFAULT_BACKEND as SPLIT_BACKEND

__version__ = "0.1.0"
__all__ = ["SPLIT_BACKEND", "__version__"]
