"""Cell-resolved and homogenised simulation of cardiac strands with gap junctions."""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
