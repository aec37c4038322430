"""Quantum-feature temporal graph network for dynamic link prediction."""

from ._backend import NAME as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
