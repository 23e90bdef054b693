"""Full-recomputation oracle engine: the ground truth every incremental
result is checked against, plus strict one-edge-at-a-time replay."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .config import RunConfig
from .engine_base import EngineCore
from .graph_store import NeighborEntry, TemporalEdge
from .params import ModelParameters


@dataclass
class EngineSnapshot:
    embeddings: np.ndarray   # (n, d) final-layer
    layers: np.ndarray       # (n, K, d)
    memory: np.ndarray       # (n, d_s)
    last_interaction: np.ndarray
    timestamp: float

    def dump(self) -> str:
        """Structured text for golden-file comparisons."""
        lines = [f"snapshot t={self.timestamp!r} n={self.embeddings.shape[0]}"]
        for v in range(self.embeddings.shape[0]):
            row = " ".join(f"{x:.17g}" for x in self.embeddings[v])
            lines.append(f"node {v} {row}")
        return "\n".join(lines) + "\n"


class OracleEngine(EngineCore):
    """Recomputes every node's embedding after each batch (O(n) by design)."""

    def __init__(self, cfg: RunConfig, params: ModelParameters):
        super().__init__(cfg, params)
        self.last_pred_embeddings: dict[int, np.ndarray] = {}

    def _entries(self, v: int, t_now: float | None = None) -> list[NeighborEntry]:
        limit = self.cfg.fanout
        if t_now is None or t_now >= self.store.t_now:
            return self.store.recent_upto(v, limit)
        return self.store.get_temporal_neighbors(v, -np.inf, t_now)[:limit]

    def full_recompute(self, t_now: float | None = None) -> EngineSnapshot:
        """K-layer attention for every node. Pure: no state mutated."""
        n = self.node_count
        self.ensure_nodes(n)
        ids = list(range(n))
        entries = [self._entries(v, t_now) for v in ids]
        out, *_ = self.run_pipeline(ids, entries, self.memory.states, "embed_refresh")
        dims = self.params.dims
        ts = t_now if t_now is not None else (self.store.t_now if self.store.m else 0.0)
        return EngineSnapshot(
            embeddings=out[:, dims.layers - 1, :].copy(),
            layers=out.copy(),
            memory=self.memory.states[:n].copy(),
            last_interaction=self.memory.last_interaction[:n].copy(),
            timestamp=float(ts),
        )

    def apply_batch_full(self, batch: list[TemporalEdge],
                         snapshot: bool = True) -> tuple[list[float], EngineSnapshot]:
        """One batch: predictions from pre-batch memory, messages + GRU for
        direct nodes, then a full recompute that refreshes the snapshot.

        snapshot=False skips the full recompute (prediction-only replay);
        only valid for single-layer models, whose edge payloads never read
        the layer cache.
        """
        self.counters.start_batch()
        if not batch:
            return [], self._snapshot_from_cache(self.node_count)
        self.batch_index += 1
        pending = self.stage_batch(batch)
        self.commit_pending()

        endpoints = sorted({e for pe in pending for e in (pe.src, pe.dst)})
        entries = [self._entries(v) for v in endpoints]
        pred_out, *_ = self.run_pipeline(endpoints, entries, self.memory.states, "embed_predict")
        dims = self.params.dims
        h = {v: pred_out[i, dims.layers - 1, :] for i, v in enumerate(endpoints)}
        self.last_pred_embeddings = {v: h[v].copy() for v in endpoints}
        preds = [kernels.predict_link(h[pe.src], h[pe.dst], self.params) for pe in pending]

        self.memory_step(pending)

        if not snapshot:
            return preds, self._snapshot_from_cache(self.node_count)
        snap = self.full_recompute()
        n = snap.embeddings.shape[0]
        self.cache.ensure(n)
        self.cache.h[:n] = snap.layers
        self.cache.valid[:n] = True
        self.cache.valid_at[:n] = snap.timestamp
        return preds, snap

    def _snapshot_from_cache(self, n: int) -> EngineSnapshot:
        self.ensure_nodes(n)
        dims = self.params.dims
        return EngineSnapshot(
            embeddings=self.cache.h[:n, dims.layers - 1, :].copy(),
            layers=self.cache.h[:n].copy(),
            memory=self.memory.states[:n].copy(),
            last_interaction=self.memory.last_interaction[:n].copy(),
            timestamp=float(self.store.t_now if self.store.m else 0.0),
        )


def replay_sequential(stream: list[TemporalEdge], cfg: RunConfig, params: ModelParameters):
    """Strict sequential reference: the stream as batch-size-1 batches.

    Returns (per-edge predictions, final engine). The bounded-staleness
    comparisons treat these predictions as ground truth. Single-layer
    models skip the per-edge full snapshot (payloads never read it).
    """
    engine = OracleEngine(cfg.with_(batch_size=1), params)
    want_snapshot = params.dims.layers > 1
    preds: list[float] = []
    for edge in stream:
        p, _ = engine.apply_batch_full([edge], snapshot=want_snapshot)
        preds.extend(p)
    return preds, engine
