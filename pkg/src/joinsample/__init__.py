"""Streaming reservoir sampling over multi-way join results."""

from .config import load_query, load_query_file, packaged_query
from .engine import Engine
from .reservoir import Reservoir

__version__ = "0.1.0"

__all__ = ["Engine", "Reservoir", "load_query", "load_query_file",
           "packaged_query", "__version__"]
