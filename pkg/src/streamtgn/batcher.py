"""Batch formation, logical timestamps, staleness, and the
sequential-vs-batched comparison harness."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .engine import IncrementalEngine
from .graph_store import EdgeQueue, TemporalEdge
from .oracle import replay_sequential
from .params import ModelParameters


@dataclass
class Batch:
    """Time-ordered edges sharing a logical timestamp.

    t_batch is the maximum member timestamp; s_max the staleness gap to
    the oldest member (zero for single-edge batches).
    """

    edges: list[TemporalEdge]
    t_batch: float
    s_max: float

    def __len__(self) -> int:
        return len(self.edges)


def form_batch(queue: EdgeQueue, batch_size: int) -> Batch | None:
    """Flush up to batch_size edges; None when the queue is empty."""
    edges = queue.flush_batch(batch_size)
    if not edges:
        return None
    t_batch = max(e.t for e in edges)
    s_max = t_batch - min(e.t for e in edges)
    return Batch(edges=edges, t_batch=t_batch, s_max=s_max)


def batches_of(stream: list[TemporalEdge], batch_size: int):
    """Arrival-order batches over an in-memory stream."""
    for i in range(0, len(stream), batch_size):
        chunk = stream[i:i + batch_size]
        yield Batch(chunk, max(e.t for e in chunk), max(e.t for e in chunk) - min(e.t for e in chunk))


@dataclass
class StalenessReport:
    batch_size: int
    max_dev: float
    mean_dev: float


def compare_sequential_vs_batched(stream: list[TemporalEdge], batch_sizes: list[int],
                                  cfg: RunConfig, params: ModelParameters):
    """Run strict sequential replay once, then the incremental engine per
    batch size on the identical stream, pairing predictions edge by edge.

    Returns (reports, slope) where slope is the least-squares slope of
    max deviation against batch size.
    """
    seq_preds, _ = replay_sequential(stream, cfg, params)
    seq = np.asarray(seq_preds)
    reports = []
    for b in batch_sizes:
        engine = IncrementalEngine(cfg.with_(batch_size=b), params)
        preds: list[float] = []
        for batch in batches_of(stream, b):
            preds.extend(engine.process_batch(batch.edges))
        dev = np.abs(np.asarray(preds) - seq)
        reports.append(StalenessReport(batch_size=b,
                                       max_dev=float(dev.max()) if dev.size else 0.0,
                                       mean_dev=float(dev.mean()) if dev.size else 0.0))
    if len(reports) >= 2:
        xs = np.array([r.batch_size for r in reports], dtype=np.float64)
        ys = np.array([r.max_dev for r in reports])
        slope = float(np.polyfit(xs, ys, 1)[0])
    else:
        slope = 0.0
    return reports, slope
