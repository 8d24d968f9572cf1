"""Sequential optimizer portfolios with kNN-based, per-instance selection."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
