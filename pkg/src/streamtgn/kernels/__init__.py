"""Neural kernels: reference single-call ops plus batched backends.

The batched node-embedding pipeline has two implementations, a numba
@njit kernel and a pure-numpy twin. Selection: STREAMTGN_NUMBA=1 forces
numba, =0 forces numpy, unset prefers numba when it imports. Both loop
per node with a fixed reduction order, so a node's result does not
depend on which node set it was computed with.
"""

from __future__ import annotations

import os

from .reference import (
    KernelInputError,
    aggregate_messages,
    attention_state,
    compute_message,
    gru_update,
    predict_link,
    temporal_attention,
    time_encode,
)
from . import pipeline_numpy

_FLAG = os.environ.get("STREAMTGN_NUMBA", "").strip()

if _FLAG == "0":
    _impl = pipeline_numpy
    BACKEND = "numpy"
else:
    try:
        from . import pipeline_numba as _impl
        BACKEND = "numba"
    except ImportError:
        if _FLAG == "1":
            raise
        _impl = pipeline_numpy
        BACKEND = "numpy"


def pipeline_many(*args, **kwargs):
    """K-layer attention pipelines for a set of nodes (selected backend)."""
    return _impl.pipeline_many(*args, **kwargs)


def backend_for(name: str):
    """Explicit backend lookup, used by tests and the backend benchmark."""
    if name == "numpy":
        return pipeline_numpy
    if name == "numba":
        from . import pipeline_numba
        return pipeline_numba
    raise ValueError(f"unknown backend {name!r}")


__all__ = [
    "KernelInputError",
    "aggregate_messages",
    "attention_state",
    "compute_message",
    "gru_update",
    "predict_link",
    "temporal_attention",
    "time_encode",
    "pipeline_many",
    "backend_for",
    "BACKEND",
]
