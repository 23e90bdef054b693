"""Machinery shared by the oracle and incremental engines.

Both engines own a store + memory + frozen-payload store + layer cache
and process batches with identical numeric conventions: predictions use
pre-batch memory, every edge freezes its endpoints' pre-batch state as
its key/value payload, and the GRU applies one step per directly
involved node per batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .config import RunConfig
from .graph_store import NeighborEntry, TemporalAdjacencyList, TemporalEdge
from .params import ModelParameters
from .state import (
    Counters,
    EdgePayloadStore,
    LayerCache,
    NodeMemoryTable,
    mac_gru,
    mac_message,
)


class InputError(ValueError):
    pass


def gather_sorted(ids, table: np.ndarray):
    """Gather table rows: sort ids, contiguous gather, inverse permute.

    Returns (rows in original id order, sort permutation, inverse).
    Duplicates are preserved; out-of-bounds ids are rejected.
    """
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise InputError("node id out of table bounds")
    order = np.argsort(ids, kind="stable")
    gathered = table[ids[order]]
    inv = np.empty_like(order)
    inv[order] = np.arange(order.size)
    return gathered[inv], order, inv


@dataclass
class PendingEdge:
    edge_id: int
    src: int
    dst: int
    t: float
    feat: np.ndarray
    stack_src: np.ndarray  # (K, d) frozen pre-batch state of src
    stack_dst: np.ndarray


class EngineCore:
    def __init__(self, cfg: RunConfig, params: ModelParameters):
        cfg.validate()
        self.cfg = cfg
        self.params = params
        dims = params.dims
        self.store = TemporalAdjacencyList(dims.d_e)
        self.memory = NodeMemoryTable(dims.d_s, cfg.nodes)
        self.payloads = EdgePayloadStore(dims)
        self.cache = LayerCache(dims, cfg.nodes)
        self.counters = Counters()
        self.batch_index = 0
        self.phi0 = kernels.time_encode(0.0, params)
        self._pending: dict[int, PendingEdge] = {}

    # -- node bookkeeping ------------------------------------------------

    @property
    def node_count(self) -> int:
        return max(self.store.n, self.memory.n, self.cfg.nodes)

    def ensure_nodes(self, n: int) -> None:
        self.memory.ensure(n)
        self.cache.ensure(n)

    # -- pending batch edges ----------------------------------------------

    def stage_batch(self, batch: list[TemporalEdge]) -> list[PendingEdge]:
        """Assign edge ids and freeze payload snapshots from pre-batch state."""
        dims = self.params.dims
        self.ensure_nodes(max((max(e.src, e.dst) + 1 for e in batch), default=0))
        pending = []
        next_id = self.store.m
        for i, edge in enumerate(batch):
            pe = PendingEdge(
                edge_id=next_id + i,
                src=edge.src,
                dst=edge.dst,
                t=edge.t,
                feat=np.asarray(edge.feat, dtype=np.float64),
                stack_src=self.cache.layer0_stack(edge.src, self.memory, dims.d_x),
                stack_dst=self.cache.layer0_stack(edge.dst, self.memory, dims.d_x),
            )
            self._pending[pe.edge_id] = pe
            pending.append(pe)
        return pending

    def commit_pending(self) -> None:
        """Insert staged edges into the store and payload table, id order."""
        for eid in sorted(self._pending):
            pe = self._pending[eid]
            got = self.store.insert_edge(TemporalEdge(pe.src, pe.dst, pe.t, pe.feat))
            assert got == eid
            pid = self.payloads.append(pe.src, pe.stack_src, pe.stack_dst)
            assert pid == eid
        self._pending.clear()

    def entry_feat(self, eid: int) -> np.ndarray:
        pe = self._pending.get(eid)
        if pe is not None:
            return pe.feat
        return self.store.edge_feature(eid)

    def entry_stack(self, eid: int, viewer: int) -> np.ndarray:
        """(K, d) frozen payload of the endpoint opposite `viewer`."""
        pe = self._pending.get(eid)
        if pe is not None:
            return pe.stack_dst if viewer == pe.src else pe.stack_src
        return self.payloads.neighbor_stack(eid, viewer)

    def kin_row(self, entry: NeighborEntry, viewer: int, layer: int, t_ref: float) -> np.ndarray:
        """[payload_layer || feat || phi(t_ref - t_e)] for one entry."""
        stack = self.entry_stack(entry.edge_id, viewer)
        phi = kernels.time_encode(t_ref - entry.t, self.params)
        return np.concatenate([stack[layer], self.entry_feat(entry.edge_id), phi])

    # -- batched pipeline --------------------------------------------------

    def run_pipeline(self, node_ids: list[int], entries_per_node: list[list[NeighborEntry]],
                     mem_states: np.ndarray, count_as: str | None):
        """K-layer attention for the given nodes.

        mem_states: the memory matrix to read query rows from (pre- or
        post-batch). Returns (out, scores, values, maxlog, zsum, qvecs,
        offsets) aligned with node_ids / flattened entries.
        """
        dims = self.params.dims
        p = self.params
        N = len(node_ids)
        offsets = np.zeros(N + 1, dtype=np.int64)
        for i, entries in enumerate(entries_per_node):
            offsets[i + 1] = offsets[i] + len(entries)
        E_total = int(offsets[-1])
        rows, _, _ = gather_sorted(node_ids, mem_states)
        self.counters.add("rows_gathered", N)
        qbase = np.zeros((N, dims.d))
        qbase[:, :dims.d_s] = rows

        eids = np.empty(E_total, dtype=np.int64)
        viewers = np.empty(E_total, dtype=np.int64)
        dt = np.empty(E_total)
        pos = 0
        for v, entries in zip(node_ids, entries_per_node):
            t_ref = entries[0].t if entries else 0.0
            for e in entries:
                eids[pos] = e.edge_id
                viewers[pos] = v
                dt[pos] = t_ref - e.t
                pos += 1
        payload = np.zeros((E_total, dims.layers, dims.d))
        feat = np.zeros((E_total, dims.d_e))
        committed = eids < self.payloads.m
        if committed.any():
            ec = eids[committed]
            sides = (self.payloads.src_table()[ec] == viewers[committed]).astype(np.int64)
            payload[committed] = self.payloads.stack_table()[ec, sides]
            feat[committed] = self.store.feature_table()[ec]
        if not committed.all():
            for j in np.nonzero(~committed)[0]:
                payload[j] = self.entry_stack(int(eids[j]), int(viewers[j]))
                feat[j] = self.entry_feat(int(eids[j]))

        self.counters.add("macs_attention",
                          _mac_attention_total(N, E_total, dims))
        out = kernels.pipeline_many(qbase, offsets, payload, feat, dt,
                                    p.omega, self.phi0, p.w_q, p.w_k, p.w_v, p.w_o)
        if count_as is not None:
            self.counters.add(count_as, N)
        return out + (offsets,)

    # -- memory update -----------------------------------------------------

    def memory_step(self, pending: list[PendingEdge]) -> list[int]:
        """Messages from pre-batch state, per-node aggregation, one GRU
        step per direct node. Returns the sorted direct node list."""
        if not pending:
            return []
        dims = self.params.dims
        p = self.params
        B = len(pending)
        M = 2 * B
        srcs = np.fromiter((pe.src for pe in pending), dtype=np.int64, count=B)
        dsts = np.fromiter((pe.dst for pe in pending), dtype=np.int64, count=B)
        ts = np.fromiter((pe.t for pe in pending), dtype=np.float64, count=B)
        feats = np.stack([pe.feat for pe in pending])
        mem = self.memory.states
        last = self.memory.last_interaction

        owners = np.empty(M, dtype=np.int64)
        owners[0::2] = srcs
        owners[1::2] = dsts
        others = np.empty(M, dtype=np.int64)
        others[0::2] = dsts
        others[1::2] = srcs
        times = np.repeat(ts, 2)
        rows = np.empty((M, dims.msg_in))
        rows[:, :dims.d_s] = mem[owners]
        rows[:, dims.d_s:2 * dims.d_s] = mem[others]
        rows[:, 2 * dims.d_s:2 * dims.d_s + dims.d_e] = np.repeat(feats, 2, axis=0)
        rows[:, 2 * dims.d_s + dims.d_e:] = _phi_rows(times - last[owners], p.omega, dims.d_t)
        msgs_src = rows @ p.w_msg_src.T + p.b_msg_src
        msgs_dst = rows @ p.w_msg_dst.T + p.b_msg_dst
        is_src = np.zeros(M, dtype=bool)
        is_src[0::2] = True
        msgs = np.where(is_src[:, None], msgs_src, msgs_dst)
        self.counters.add("messages", M)
        self.counters.add("macs_gru", M * mac_message(dims))

        by_node: dict[int, list[tuple[np.ndarray, float]]] = {}
        for i in range(M):
            by_node.setdefault(int(owners[i]), []).append((msgs[i], float(times[i])))
        direct = sorted(by_node)
        agg = np.zeros((len(direct), dims.d_m))
        for j, v in enumerate(direct):
            agg[j] = kernels.aggregate_messages(by_node[v], self.cfg.aggregator)

        prev = mem[direct]
        z = _sigmoid(agg @ p.w_z.T + prev @ p.u_z.T + p.b_z)
        r = _sigmoid(agg @ p.w_r.T + prev @ p.u_r.T + p.b_r)
        cand = np.tanh(agg @ p.w_h.T + (r * prev) @ p.u_h.T + p.b_h)
        self.memory.states[direct] = (1.0 - z) * cand + z * prev
        self.memory.version[direct] = self.batch_index
        for v in direct:
            self.memory.last_interaction[v] = max(t for _, t in by_node[v])
        self.counters.add("gru_steps", len(direct))
        self.counters.add("macs_gru", len(direct) * mac_gru(dims))
        return direct


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _phi_rows(dt: np.ndarray, omega: np.ndarray, d_t: int) -> np.ndarray:
    """Row-wise time encodings; elementwise-identical to time_encode."""
    ang = np.outer(dt, omega)
    out = np.empty((dt.shape[0], d_t))
    out[:, 0::2] = np.cos(ang)
    out[:, 1::2] = np.sin(ang)
    out *= np.sqrt(1.0 / d_t)
    return out


def _mac_attention_total(n_nodes: int, n_entries: int, dims) -> int:
    per_node = dims.heads * dims.query_in * dims.d_k + dims.heads * dims.d_k * dims.d
    per_entry = dims.heads * (2 * dims.key_in * dims.d_k + 2 * dims.d_k)
    return dims.layers * (n_nodes * per_node + n_entries * per_entry)
