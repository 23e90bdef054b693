"""Streaming temporal graph attention inference engine.

Maintains persistent node memory, embedding, and attention caches,
recomputes only the K-hop affected set after each edge batch, and checks
every incremental result against a full-recomputation oracle.
"""

from .config import Dims, RunConfig
from .graph_store import EdgeQueue, TemporalAdjacencyList, TemporalEdge
from .params import ModelParameters, init_params, load_params, save_params

__all__ = [
    "Dims",
    "RunConfig",
    "EdgeQueue",
    "TemporalAdjacencyList",
    "TemporalEdge",
    "ModelParameters",
    "init_params",
    "load_params",
    "save_params",
]

__version__ = "0.1.0"
