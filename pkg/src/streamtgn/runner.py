"""Verification and benchmark runs over edge streams, with structured
key=value reports."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .batcher import form_batch
from .config import RunConfig
from .engine import IncrementalEngine
from .graph_store import EdgeQueue, TemporalAdjacencyList, TemporalEdge
from .oracle import OracleEngine
from .params import ModelParameters, init_params


def stream_batches(stream: list[TemporalEdge], cfg: RunConfig, d_e: int):
    """Drive the real ingestion path: enqueue with backpressure, then
    form_batch flushes arrival-order batches of size B."""
    queue = EdgeQueue(cfg.queue_capacity, d_e)
    i = 0
    while True:
        while i < len(stream) and queue.enqueue(stream[i]):
            i += 1
        batch = form_batch(queue, cfg.batch_size)
        if batch is None:
            return
        yield batch


def brute_force_affected(store: TemporalAdjacencyList, batch: list[TemporalEdge],
                         fanout: int, layers: int) -> set[int]:
    """Independent K-hop BFS closure over the post-insertion store.

    Call after the batch is committed: lists come straight from the
    adjacency list (truncated to the fanout), not from any engine cache.
    """
    direct = set()
    for e in batch:
        direct.add(e.src)
        direct.add(e.dst)
    allset = set(direct)
    frontier = sorted(direct)
    for _ in range(layers):
        nxt = []
        for w in frontier:
            for entry in store.recent_upto(w, fanout):
                if entry.nbr not in allset:
                    allset.add(entry.nbr)
                    nxt.append(entry.nbr)
        frontier = nxt
    return allset


def _hit_rate(counters: dict) -> float:
    hits = counters.get("nbr_hit", 0) + counters.get("attn_hit", 0)
    total = hits + counters.get("nbr_miss", 0) + counters.get("attn_miss", 0)
    return hits / total if total else 0.0


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def kv_line(tag: str, **kv) -> str:
    return tag + " " + " ".join(f"{k}={_fmt(v)}" for k, v in kv.items())


_BATCH_COUNTER_KEYS = (
    "nbr_hit", "nbr_miss", "attn_hit", "attn_miss", "embed_refresh",
    "embed_predict", "embed_skip", "gru_steps", "messages",
    "macs_attention", "macs_gru", "rows_gathered", "rebuild_pipelines",
)


@dataclass
class VerifyResult:
    batches: int = 0
    max_embed_dev: float = 0.0
    max_pred_dev: float = 0.0
    max_memory_dev: float = 0.0
    bfs_mismatches: int = 0
    bound_violations: int = 0
    drift_violations: int = 0
    max_drift: float = 0.0
    drift_bound: float = 0.0
    lines: list[str] = field(default_factory=list)
    times: list[str] = field(default_factory=list)

    def exit_code(self, mode: str) -> int:
        if self.bound_violations or self.bfs_mismatches or self.drift_violations:
            return 1
        if mode == "exact" and (self.max_embed_dev > 1e-9 or self.max_pred_dev > 1e-9):
            return 1
        return 0

    def report(self) -> str:
        return "\n".join(self.lines + self.times) + "\n"


def run_verify(cfg: RunConfig, stream: list[TemporalEdge],
               params: ModelParameters | None = None,
               drift_check_every: int = 0) -> VerifyResult:
    """Oracle and incremental engines in lockstep over the whole stream.

    Per batch: prediction and post-batch embedding/memory deviations, the
    brute-force affected-set check, and delta-mode bound checks. Every
    `drift_check_every` batches (when > 0) the per-node embedding drift is
    checked against the adaptive-policy bound.
    """
    if params is None:
        params = init_params(cfg.seed, cfg.dims)
    oracle = OracleEngine(cfg, params)
    incr = IncrementalEngine(cfg, params)
    res = VerifyResult()
    res.lines.append(kv_line(
        "meta", kind="verify", mode=cfg.mode, batch=cfg.batch_size,
        fanout=cfg.fanout, layers=cfg.dims.layers, aggregator=cfg.aggregator,
        seed=cfg.seed, edges=len(stream)))
    slack = 1e-12
    for batch in stream_batches(stream, cfg, cfg.dims.d_e):
        t0 = time.perf_counter()
        preds_i = incr.process_batch(batch.edges)
        preds_o, snap = oracle.apply_batch_full(batch.edges)
        res.batches += 1

        pred_dev = float(np.max(np.abs(np.asarray(preds_i) - np.asarray(preds_o)))) \
            if preds_i else 0.0
        n = snap.embeddings.shape[0]
        emb_dev = float(np.max(np.abs(incr.cache.embeddings(n) - snap.embeddings))) if n else 0.0
        mem_dev = float(np.max(np.abs(incr.memory.states[:n] - snap.memory))) if n else 0.0
        if n:
            mem_dev = max(mem_dev, float(np.max(np.abs(
                incr.memory.last_interaction[:n] - snap.last_interaction))))
        res.max_pred_dev = max(res.max_pred_dev, pred_dev)
        res.max_embed_dev = max(res.max_embed_dev, emb_dev)
        res.max_memory_dev = max(res.max_memory_dev, mem_dev)

        brute = brute_force_affected(incr.store, batch.edges, cfg.fanout, cfg.dims.layers)
        mismatch = int(brute != incr.last_affected.all)
        res.bfs_mismatches += mismatch

        violations = 0
        for ev in incr.delta_events:
            ref = oracle.last_pred_embeddings.get(ev.node)
            if ref is None:
                continue
            dev = float(np.linalg.norm(ev.embedding - ref))
            if dev > ev.bound + slack:
                violations += 1
        res.bound_violations += violations

        drift_checked = 0
        if drift_check_every and incr.batch_index % drift_check_every == 0:
            bound = (cfg.delta_max / (1.0 - cfg.gamma)) * incr.max_value_norm_seen
            res.drift_bound = max(res.drift_bound, bound)
            drift = float(np.max(np.linalg.norm(
                incr.cache.embeddings(n) - snap.embeddings, axis=1))) if n else 0.0
            res.max_drift = max(res.max_drift, drift)
            if drift > bound + 1e-9:
                res.drift_violations += 1
            drift_checked = 1

        rep = incr.last_report
        counters = {k: int(incr.counters.get(k)) for k in _BATCH_COUNTER_KEYS}
        res.lines.append(kv_line(
            "batch", index=rep.index, edges=rep.edges, t_batch=rep.t_batch,
            s_max=batch.s_max, direct=rep.direct, affected=rep.affected,
            ratio=rep.affected / max(incr.node_count, 1),
            cache_hit_rate=_hit_rate(counters),
            rebuild=rep.rebuild, rebuild_nodes=rep.rebuild_nodes, **counters))
        res.lines.append(kv_line(
            "check", index=rep.index, embed_dev=emb_dev, pred_dev=pred_dev,
            memory_dev=mem_dev, bfs_mismatch=mismatch,
            bound_violations=violations, drift_checked=drift_checked))
        res.times.append(kv_line("time.batch", index=rep.index,
                                 seconds=time.perf_counter() - t0))
    res.lines.append(kv_line(
        "summary", batches=res.batches, max_embed_dev=res.max_embed_dev,
        max_pred_dev=res.max_pred_dev, max_memory_dev=res.max_memory_dev,
        bfs_mismatches=res.bfs_mismatches, bound_violations=res.bound_violations,
        drift_violations=res.drift_violations, max_drift=res.max_drift,
        exit=res.exit_code(cfg.mode)))
    return res


@dataclass
class BenchResult:
    batches: int = 0
    mean_affected_ratio: float = 0.0
    counter_speedup: float = 0.0
    total_refresh: int = 0
    rebuild_count: int = 0
    rebuild_batches: list[int] = field(default_factory=list)
    reports: list = field(default_factory=list)
    lines: list[str] = field(default_factory=list)
    times: list[str] = field(default_factory=list)

    def report(self) -> str:
        return "\n".join(self.lines + self.times) + "\n"


def run_bench(cfg: RunConfig, stream: list[TemporalEdge],
              params: ModelParameters | None = None) -> BenchResult:
    """Incremental engine over the stream, emitting per-batch counters and
    the counter-based speedup summary (oracle pipelines = n per batch by
    definition of full recomputation)."""
    if params is None:
        params = init_params(cfg.seed, cfg.dims)
    incr = IncrementalEngine(cfg, params)
    res = BenchResult()
    res.lines.append(kv_line(
        "meta", kind="bench", mode=cfg.mode, batch=cfg.batch_size,
        fanout=cfg.fanout, layers=cfg.dims.layers, aggregator=cfg.aggregator,
        rebuild=cfg.rebuild, seed=cfg.seed, edges=len(stream)))
    ratios = []
    for batch in stream_batches(stream, cfg, cfg.dims.d_e):
        t0 = time.perf_counter()
        incr.process_batch(batch.edges)
        rep = incr.last_report
        res.batches += 1
        n = max(incr.node_count, 1)
        ratios.append(rep.affected / n)
        if rep.rebuild != "none":
            res.rebuild_count += 1
            res.rebuild_batches.append(rep.index)
        counters = {k: int(incr.counters.get(k)) for k in _BATCH_COUNTER_KEYS}
        res.lines.append(kv_line(
            "batch", index=rep.index, edges=rep.edges, t_batch=rep.t_batch,
            s_max=batch.s_max, direct=rep.direct, affected=rep.affected,
            ratio=rep.affected / n, speedup=n / max(rep.affected, 1),
            cache_hit_rate=_hit_rate(counters),
            rebuild=rep.rebuild, rebuild_nodes=rep.rebuild_nodes, **counters))
        res.times.append(kv_line("time.batch", index=rep.index,
                                 seconds=time.perf_counter() - t0))
        res.reports.append(rep)
    res.mean_affected_ratio = float(np.mean(ratios)) if ratios else 0.0
    mean_affected = float(np.mean([r.affected for r in res.reports])) if res.reports else 0.0
    res.counter_speedup = (incr.node_count / mean_affected) if mean_affected else 0.0
    res.total_refresh = int(incr.counters.total("embed_refresh"))
    res.lines.append(kv_line(
        "summary", batches=res.batches, nodes=incr.node_count,
        mean_affected_ratio=res.mean_affected_ratio,
        counter_speedup=res.counter_speedup,
        total_embed_refresh=res.total_refresh,
        rebuilds=res.rebuild_count))
    return res
