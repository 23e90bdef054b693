"""Incremental engine: affected-set detection, neighbor/embedding/attention
caches, delta updates, and the per-batch orchestrator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .config import RunConfig
from .drift import DriftScheduler, fixed_schedule_decide
from .engine_base import EngineCore, PendingEdge
from .graph_store import MonotonicityError, NeighborEntry, TemporalEdge
from .params import ModelParameters
from .state import AffectedSet, AttentionCache, AttnState, ChangeRecord, NeighborCache


@dataclass
class DeltaEvent:
    """One delta-mode embedding update, kept for bound verification."""

    node: int
    embedding: np.ndarray
    bound: float
    dn: int
    nv: int
    max_v: float
    z_dev: float


@dataclass
class BatchReport:
    index: int
    edges: int
    t_batch: float
    direct: int
    affected: int
    rebuild: str = "none"
    rebuild_nodes: int = 0


def delta_embed(state: AttnState, added, expired, updated, params: ModelParameters):
    """Apply a change record to a cached attention state (single layer).

    added: [(edge_id, nbr, t_e, kin_row)]; expired: [edge_id];
    updated: [(edge_id, kin_row)]. Scores live in the max-scaled frame and
    are rescaled when a new logit exceeds the stored max; Z and the
    weighted value sum are maintained so insert/expire renormalization is
    exact. Mutates state in place.

    Returns (embedding, z_dev, max_v) where z_dev = max over heads of
    |1 - Z_old/Z_new| and max_v the largest stored value norm, the
    measured quantities of the per-node error bound.
    """
    dims = params.dims
    H = dims.heads
    if not added and not expired and not updated:
        return _state_output(state, params), 0.0, _max_value_norm(state)

    log_z_old = _log_z(state)
    inv_sqrt = 1.0 / np.sqrt(dims.d_k)
    expired_set = set(expired)

    for eid, nbr, t_e, row in added:
        for h in range(H):
            k = row @ params.w_k[0, h]
            vv = row @ params.w_v[0, h]
            logit = float(state.q[h] @ k) * inv_sqrt
            _rescale(state, h, logit)
            s = np.exp(logit - state.max_logit[h])
            state.scores[h] = np.append(state.scores[h], s)
            state.values[h] = np.vstack([state.values[h], vv[None, :]]) \
                if state.values[h].size else vv[None, :]
            state.z[h] += s
            state.vsum[h] += s * vv
        state.edge_ids.append(eid)
        state.nbrs.append(nbr)
        state.timestamps.append(t_e)

    for eid, row in updated:
        if eid in expired_set or eid not in state.edge_ids:
            continue
        i = state.edge_ids.index(eid)
        for h in range(H):
            k = row @ params.w_k[0, h]
            vv = row @ params.w_v[0, h]
            logit = float(state.q[h] @ k) * inv_sqrt
            _rescale(state, h, logit)
            s_new = np.exp(logit - state.max_logit[h])
            s_old = state.scores[h][i]
            v_old = state.values[h][i].copy()
            state.z[h] += s_new - s_old
            state.vsum[h] += s_new * vv - s_old * v_old
            state.scores[h][i] = s_new
            state.values[h][i] = vv

    for eid in expired:
        if eid not in state.edge_ids:
            continue
        i = state.edge_ids.index(eid)
        for h in range(H):
            s = state.scores[h][i]
            state.z[h] -= s
            state.vsum[h] -= s * state.values[h][i]
            state.scores[h] = np.delete(state.scores[h], i)
            state.values[h] = np.delete(state.values[h], i, axis=0)
        state.edge_ids.pop(i)
        state.nbrs.pop(i)
        state.timestamps.pop(i)

    log_z_new = _log_z(state)
    z_dev = 0.0
    for h in range(H):
        if np.isfinite(log_z_new[h]):
            ratio = np.exp(log_z_old[h] - log_z_new[h]) if np.isfinite(log_z_old[h]) else 0.0
            z_dev = max(z_dev, abs(1.0 - ratio))
    return _state_output(state, params), z_dev, _max_value_norm(state)


def _rescale(state: AttnState, h: int, logit: float) -> None:
    if logit > state.max_logit[h]:
        if np.isfinite(state.max_logit[h]):
            c = np.exp(state.max_logit[h] - logit)
            state.scores[h] = state.scores[h] * c
            state.z[h] *= c
            state.vsum[h] = state.vsum[h] * c
        state.max_logit[h] = logit


def _log_z(state: AttnState) -> np.ndarray:
    out = np.empty(len(state.z))
    for h in range(len(state.z)):
        out[h] = (np.log(state.z[h]) + state.max_logit[h]) if state.z[h] > 0 else -np.inf
    return out


def _max_value_norm(state: AttnState) -> float:
    best = 0.0
    for vals in state.values:
        if vals.size:
            best = max(best, float(np.max(np.linalg.norm(vals, axis=1))))
    return best


def _state_output(state: AttnState, params: ModelParameters) -> np.ndarray:
    dims = params.dims
    concat = np.zeros(dims.heads * dims.d_k)
    if state.edge_ids:
        for h in range(dims.heads):
            concat[h * dims.d_k:(h + 1) * dims.d_k] = state.vsum[h] / state.z[h]
    return concat @ params.w_o[0]


class IncrementalEngine(EngineCore):
    def __init__(self, cfg: RunConfig, params: ModelParameters):
        super().__init__(cfg, params)
        self.nbr_cache = NeighborCache(cfg.fanout)
        self.attn_cache = AttentionCache()
        self.scheduler = DriftScheduler(cfg.gamma, cfg.delta_max, cfg.alpha)
        self.delta_events: list[DeltaEvent] = []
        self.last_pred_embeddings: dict[int, np.ndarray] = {}
        self.last_report: BatchReport | None = None
        self.last_affected: AffectedSet | None = None
        self.max_value_norm_seen = 0.0
        self._t_batch = 0.0

    # -- affected set ------------------------------------------------------

    def _group_batch(self, pending: list[PendingEdge]) -> dict[int, list[NeighborEntry]]:
        """Per-endpoint new entries, newest first (reverse batch order).
        Self-loops contribute one entry, matching store insertion."""
        by_node: dict[int, list[NeighborEntry]] = {}
        for pe in reversed(pending):
            by_node.setdefault(pe.src, []).append(
                NeighborEntry(nbr=pe.dst, t=pe.t, edge_id=pe.edge_id))
            if pe.dst != pe.src:
                by_node.setdefault(pe.dst, []).append(
                    NeighborEntry(nbr=pe.src, t=pe.t, edge_id=pe.edge_id))
        return by_node

    def _sampled_ids(self, w: int, by_node: dict[int, list[NeighborEntry]]) -> list[int]:
        """Distinct neighbor ids in w's post-insertion truncated list."""
        new = by_node.get(w, [])
        base = self.nbr_cache.get(w)
        if base is None:
            base = self.store.recent_upto(w, self.cfg.fanout)
        seen: list[int] = []
        got = set()
        for e in (new + base)[:self.cfg.fanout]:
            if e.nbr not in got:
                got.add(e.nbr)
                seen.append(e.nbr)
        return seen

    def detect_affected(self, pending: list[PendingEdge]) -> AffectedSet:
        """Direct endpoints plus their K-hop closure under the L-truncated
        sampled-neighbor relation, evaluated on post-insertion lists."""
        by_node = self._group_batch(pending)
        direct = set(by_node)
        allset = set(direct)
        frontier = sorted(direct)
        for _ in range(self.params.dims.layers):
            nxt = []
            for w in frontier:
                for u in self._sampled_ids(w, by_node):
                    if u not in allset:
                        allset.add(u)
                        nxt.append(u)
            frontier = nxt
        records = {v: ChangeRecord() for v in allset}
        return AffectedSet(direct=direct, all=allset, records=records)

    # -- stage 1: neighbor cache --------------------------------------------

    def update_neighbor_cache(self, v: int, new_entries: list[NeighborEntry],
                              direct: set[int], t_now: float) -> ChangeRecord:
        """Prepend new entries, evict beyond L, expire outside the window.
        Returns the node's ChangeRecord (added / expired / updated)."""
        L = self.cfg.fanout
        rec = ChangeRecord()
        cached = self.nbr_cache.get(v)
        if cached is None:
            self.counters.add("nbr_miss")
            cached = self.store.recent_upto(v, L)
            rec.added = list(new_entries)
            merged = list(new_entries) + cached
            rec.expired = []  # nothing was cached, nothing gets evicted
        else:
            self.counters.add("nbr_hit")
            rec.added = list(new_entries)
            merged = list(new_entries) + cached
            rec.expired = merged[L:]
        kept = merged[:L]
        n_new_kept = min(len(new_entries), len(kept))
        if np.isfinite(self.cfg.window):
            cutoff = t_now - self.cfg.window
            rec.expired = rec.expired + [e for e in kept if e.t < cutoff]
            kept = [e for e in kept if e.t >= cutoff]
            n_new_kept = min(n_new_kept, len(kept))
        rec.updated = {e.nbr for e in kept[n_new_kept:] if e.nbr in direct}
        self.nbr_cache.put(v, kept)
        return rec

    # -- stage 4: embeddings ---------------------------------------------------

    def _build_attn_state(self, v: int, entries: list[NeighborEntry], i: int,
                          offsets, scores, values, maxlog, zsum, qvecs) -> None:
        if self.params.dims.layers != 1:
            return
        dims = self.params.dims
        lo, hi = int(offsets[i]), int(offsets[i + 1])
        sc = [scores[lo:hi, 0, h].copy() for h in range(dims.heads)]
        vv = [values[lo:hi, 0, h].copy() for h in range(dims.heads)]
        vsum = np.stack([sc[h] @ vv[h] if hi > lo else np.zeros(dims.d_k)
                         for h in range(dims.heads)])
        if hi > lo:
            for h in range(dims.heads):
                self.max_value_norm_seen = max(
                    self.max_value_norm_seen,
                    float(np.max(np.linalg.norm(vv[h], axis=1))))
        self.attn_cache.put(v, AttnState(
            edge_ids=[e.edge_id for e in entries],
            nbrs=[e.nbr for e in entries],
            timestamps=[e.t for e in entries],
            t_ref=entries[0].t if entries else 0.0,
            mem_version=int(self.memory.version[v]),
            q=qvecs[i, 0].copy(),
            max_logit=maxlog[i, 0].copy(),
            scores=sc,
            values=vv,
            z=zsum[i, 0].copy(),
            vsum=vsum,
        ))

    def _compute_exact(self, ids: list[int], keep_states: bool, valid_at: float) -> np.ndarray:
        """Exact pipeline over the given nodes; refreshes cache entries."""
        entries = [self.nbr_cache.get(v) or [] for v in ids]
        out, scores, values, maxlog, zsum, qvecs, offsets = self.run_pipeline(
            ids, entries, self.memory.states, count_as=None)
        for i, v in enumerate(ids):
            self.cache.h[v] = out[i]
            self.cache.valid[v] = True
            self.cache.valid_at[v] = valid_at
            if keep_states:
                self._build_attn_state(v, entries[i], i, offsets, scores,
                                       values, maxlog, zsum, qvecs)
        return out

    def generate_embeddings(self, aff: AffectedSet) -> dict[int, np.ndarray]:
        """Stage 4: refresh every affected node (exact mode), or apply delta
        updates where the cached attention state is still valid."""
        dims = self.params.dims
        ids_sorted = sorted(aff.all)
        result: dict[int, np.ndarray] = {}
        delta_mode = self.cfg.mode == "delta"
        exact_ids: list[int] = []
        computed: set[int] = set()
        for v in ids_sorted:
            rec = aff.records[v]
            if not delta_mode:
                exact_ids.append(v)
                continue
            if v not in aff.direct and rec.empty and self.cache.valid[v]:
                self.counters.add("embed_skip")
                result[v] = self.cache.h[v, dims.layers - 1, :]
                continue
            st = self.attn_cache.get(v)
            entries = self.nbr_cache.get(v) or []
            t_ref = entries[0].t if entries else 0.0
            if (dims.layers == 1 and st is not None and self.cache.valid[v]
                    and st.mem_version == int(self.memory.version[v])
                    and st.t_ref == t_ref):
                result[v] = self._apply_delta(v, rec, st, t_ref)
                computed.add(v)
                self.counters.add("attn_hit")
            else:
                exact_ids.append(v)
                self.counters.add("attn_miss")
        if exact_ids:
            out = self._compute_exact(exact_ids, keep_states=delta_mode,
                                      valid_at=self._t_batch)
            for i, v in enumerate(exact_ids):
                result[v] = out[i, dims.layers - 1, :]
            computed.update(exact_ids)
        for v in ids_sorted:
            if v in aff.direct:
                self.counters.add("embed_predict")
            elif v in computed:
                self.counters.add("embed_refresh")
        return result

    def _apply_delta(self, v: int, rec: ChangeRecord, st: AttnState, t_ref: float) -> np.ndarray:
        added = [(e.edge_id, e.nbr, e.t, self.kin_row(e, v, 0, t_ref)) for e in rec.added]
        expired = [e.edge_id for e in rec.expired]
        expired_set = set(expired)
        updated = []
        for j, eid in enumerate(st.edge_ids):
            if st.nbrs[j] in rec.updated and eid not in expired_set:
                entry = NeighborEntry(st.nbrs[j], st.timestamps[j], eid)
                updated.append((eid, self.kin_row(entry, v, 0, t_ref)))
        h, z_dev, max_v = delta_embed(st, added, expired, updated, self.params)
        dims = self.params.dims
        self.cache.h[v, dims.layers - 1, :] = h
        self.cache.valid[v] = True
        self.cache.valid_at[v] = self._t_batch
        nv = max(len(st.edge_ids), 1)
        bound = (rec.size / nv) * max_v * z_dev
        self.max_value_norm_seen = max(self.max_value_norm_seen, max_v)
        self.delta_events.append(DeltaEvent(
            node=v, embedding=h.copy(), bound=bound, dn=rec.size, nv=nv,
            max_v=max_v, z_dev=z_dev))
        return h

    # -- stage 5: commit -------------------------------------------------------

    def commit_updates(self, pending: list[PendingEdge], aff: AffectedSet) -> None:
        """Insert edges, apply messages + GRU to direct nodes, refresh their
        cache entries from post-batch memory, record drift."""
        self.commit_pending()
        direct = self.memory_step(pending)
        if direct:
            self._compute_exact(direct, keep_states=self.cfg.mode == "delta",
                                valid_at=self._t_batch)
            self.counters.add("embed_refresh", len(direct))
        changes = {}
        for v, rec in aff.records.items():
            lst = self.nbr_cache.get(v)
            if rec.size > 0 and lst:
                changes[v] = (rec.size, len(lst))
        self.scheduler.record_batch_changes(changes)
        self.scheduler.note_affected(aff.all)

    def full_reference(self) -> np.ndarray:
        """Read-only full recomputation over the current state: the
        drift-bound reference h_full. Does not touch any cache."""
        ids = list(range(self.node_count))
        entries = [self.nbr_cache.get(v) if self.nbr_cache.get(v) is not None
                   else self.store.recent_upto(v, self.cfg.fanout) for v in ids]
        out, *_ = self.run_pipeline(ids, entries, self.memory.states, count_as=None)
        return out[:, self.params.dims.layers - 1, :]

    # -- rebuilds ----------------------------------------------------------------

    def rebuild_nodes(self, nodes: list[int] | None) -> int:
        """Exact recompute of the given nodes (None = all); returns count."""
        ids = sorted(nodes) if nodes is not None else list(range(self.node_count))
        if not ids:
            return 0
        for v in ids:
            if self.nbr_cache.get(v) is None:
                self.nbr_cache.put(v, self.store.recent_upto(v, self.cfg.fanout))
        self._compute_exact(ids, keep_states=self.cfg.mode == "delta",
                            valid_at=self.store.t_now if self.store.m else 0.0)
        self.counters.add("rebuild_pipelines", len(ids))
        return len(ids)

    # -- orchestrator --------------------------------------------------------------

    def process_batch(self, batch: list[TemporalEdge]) -> list[float]:
        """detect -> stage 1 -> stages 2-4 -> predict -> stage 5 -> drift."""
        self.counters.start_batch()
        self.delta_events = []
        self.last_pred_embeddings = {}
        if not batch:
            self.last_report = BatchReport(self.batch_index, 0, self.store.t_now, 0, 0)
            return []
        prev = self.store.t_now
        for e in batch:
            if e.t < prev:
                raise MonotonicityError(
                    f"batch edge at t={e.t} precedes committed history t={prev}")
            prev = e.t
        self.batch_index += 1
        self._t_batch = batch[-1].t
        pending = self.stage_batch(batch)
        aff = self.detect_affected(pending)
        self.last_affected = aff
        by_node = self._group_batch(pending)
        for v in sorted(aff.all):
            aff.records[v] = self.update_neighbor_cache(
                v, by_node.get(v, []), aff.direct, self._t_batch)

        embeddings = self.generate_embeddings(aff)
        preds = [kernels.predict_link(embeddings[pe.src], embeddings[pe.dst], self.params)
                 for pe in pending]
        self.last_pred_embeddings = {v: embeddings[v].copy() for v in aff.direct}

        self.commit_updates(pending, aff)

        rebuild_kind, rebuilt = self._run_rebuild_policy()
        self.counters.add("direct", len(aff.direct))
        self.counters.add("affected", len(aff.all))
        self.last_report = BatchReport(
            index=self.batch_index, edges=len(batch), t_batch=self._t_batch,
            direct=len(aff.direct), affected=len(aff.all),
            rebuild=rebuild_kind, rebuild_nodes=rebuilt)
        return preds

    def _run_rebuild_policy(self) -> tuple[str, int]:
        cfg = self.cfg
        if cfg.rebuild == "never":
            return "none", 0
        if cfg.rebuild == "fixed":
            decision = fixed_schedule_decide(self.batch_index, cfg.rebuild_interval)
        else:
            decision = self.scheduler.decide_rebuild(self.node_count)
        if decision is None:
            return "none", 0
        kind, _ = decision
        rebuilt = self.scheduler.execute_rebuild(decision, self)
        self.counters.add("rebuilds")
        return kind, rebuilt
