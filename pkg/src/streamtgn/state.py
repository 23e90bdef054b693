"""Persistent engine state: node memory, per-edge frozen payloads,
embedding/layer caches, neighbor cache entries, and work counters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import Dims
from .graph_store import NeighborEntry


def _grow(arr: np.ndarray, need: int) -> np.ndarray:
    if need <= arr.shape[0]:
        return arr
    cap = max(need, arr.shape[0] * 2, 16)
    out = np.zeros((cap,) + arr.shape[1:], dtype=arr.dtype)
    out[:arr.shape[0]] = arr
    return out


class NodeMemoryTable:
    """Per-node GRU state s_v (zero-initialized), last interaction time,
    and a version stamp (batch index of the last write)."""

    def __init__(self, d_s: int, n_hint: int = 0):
        self.d_s = d_s
        cap = max(n_hint, 16)
        self.states = np.zeros((cap, d_s))
        self.last_interaction = np.zeros(cap)
        self.version = np.zeros(cap, dtype=np.int64)
        self.n = n_hint

    def ensure(self, n: int) -> None:
        if n > self.states.shape[0]:
            self.states = _grow(self.states, n)
            self.last_interaction = _grow(self.last_interaction, n)
            self.version = _grow(self.version, n)
        self.n = max(self.n, n)

    def copy(self) -> "NodeMemoryTable":
        out = NodeMemoryTable(self.d_s, 0)
        out.states = self.states.copy()
        out.last_interaction = self.last_interaction.copy()
        out.version = self.version.copy()
        out.n = self.n
        return out


class EdgePayloadStore:
    """Frozen key/value inputs, recorded at insertion from pre-batch state.

    stack[eid, 0] describes the src endpoint, stack[eid, 1] the dst;
    index j = 0 holds [s || x], j >= 1 holds the layer-j embedding. A node
    attending over an edge reads the *other* endpoint's stack.
    """

    def __init__(self, dims: Dims):
        self.dims = dims
        self._stack = np.zeros((0, 2, dims.layers, dims.d))
        self._src = np.zeros(0, dtype=np.int64)
        self.m = 0

    def append(self, src: int, src_stack: np.ndarray, dst_stack: np.ndarray) -> int:
        if self.m >= self._stack.shape[0]:
            self._stack = _grow(self._stack, max(16, self.m * 2))
            self._src = _grow(self._src, max(16, self.m * 2))
        self._stack[self.m, 0] = src_stack
        self._stack[self.m, 1] = dst_stack
        self._src[self.m] = src
        self.m += 1
        return self.m - 1

    def src_of(self, edge_id: int) -> int:
        return int(self._src[edge_id])

    def neighbor_stack(self, edge_id: int, viewer: int) -> np.ndarray:
        """(K, d) payload of the endpoint opposite the viewer."""
        side = 1 if self._src[edge_id] == viewer else 0
        return self._stack[edge_id, side]

    def stack_table(self) -> np.ndarray:
        """(m, 2, K, d) view over committed payload stacks."""
        return self._stack[:self.m]

    def src_table(self) -> np.ndarray:
        return self._src[:self.m]


class LayerCache:
    """Embedding cache: all K layer outputs per node, validity timestamp.

    A valid entry equals what a full recomputation with the current
    memory and adjacency would produce for that node.
    """

    def __init__(self, dims: Dims, n_hint: int = 0):
        self.dims = dims
        cap = max(n_hint, 16)
        self.h = np.zeros((cap, dims.layers, dims.d))
        self.valid_at = np.full(cap, -np.inf)
        self.valid = np.zeros(cap, dtype=bool)
        self.n = n_hint

    def ensure(self, n: int) -> None:
        if n > self.h.shape[0]:
            self.h = _grow(self.h, n)
            self.valid_at = _grow(self.valid_at, n)
            self.valid = _grow(self.valid, n)
        self.n = max(self.n, n)

    def embeddings(self, n: int) -> np.ndarray:
        """Final-layer embeddings for nodes 0..n-1 (zeros when never set)."""
        self.ensure(n)
        return self.h[:n, self.dims.layers - 1, :]

    def layer0_stack(self, v: int, memory: NodeMemoryTable, d_x: int) -> np.ndarray:
        """(K, d) stack for payload snapshots: [s_v || x_v] then cached
        layer embeddings 1..K-1 (node features are zero-filled)."""
        dims = self.dims
        stack = np.zeros((dims.layers, dims.d))
        stack[0, :dims.d_s] = memory.states[v]
        # x_v is a zero vector of width d_x; nothing to copy
        for j in range(1, dims.layers):
            stack[j] = self.h[v, j - 1]
        return stack


@dataclass
class ChangeRecord:
    """Per-node neighborhood delta for one batch."""

    added: list[NeighborEntry] = field(default_factory=list)
    expired: list[NeighborEntry] = field(default_factory=list)
    updated: set[int] = field(default_factory=set)

    @property
    def size(self) -> int:
        return len(self.added) + len(self.expired) + len(self.updated)

    @property
    def empty(self) -> bool:
        return self.size == 0


@dataclass
class AffectedSet:
    direct: set[int]
    all: set[int]
    records: dict[int, ChangeRecord]


class NeighborCache:
    """Per-node list of the <= L most recent entries, newest first."""

    def __init__(self, fanout: int):
        self.fanout = fanout
        self._lists: dict[int, list[NeighborEntry]] = {}

    def __contains__(self, v: int) -> bool:
        return v in self._lists

    def get(self, v: int) -> list[NeighborEntry] | None:
        return self._lists.get(v)

    def put(self, v: int, entries: list[NeighborEntry]) -> None:
        self._lists[v] = entries

    def drop(self, v: int) -> None:
        self._lists.pop(v, None)


@dataclass
class AttnState:
    """Cached attention scores for one node (single layer, all heads),
    in the max-scaled frame: scores[h][i] = exp(logit - max_logit[h])."""

    edge_ids: list[int]
    nbrs: list[int]
    timestamps: list[float]
    t_ref: float
    mem_version: int
    q: np.ndarray         # (H, d_k)
    max_logit: np.ndarray  # (H,)
    scores: list[np.ndarray]   # per head, (E,)
    values: list[np.ndarray]   # per head, (E, d_k)
    z: np.ndarray          # (H,)
    vsum: np.ndarray       # (H, d_k)


class AttentionCache:
    def __init__(self):
        self._states: dict[int, AttnState] = {}

    def get(self, v: int) -> AttnState | None:
        return self._states.get(v)

    def put(self, v: int, state: AttnState) -> None:
        self._states[v] = state

    def drop(self, v: int) -> None:
        self._states.pop(v, None)

    def clear(self) -> None:
        self._states.clear()


class Counters:
    """Cumulative and per-batch work tallies."""

    def __init__(self):
        self.totals: dict[str, float] = {}
        self.batch: dict[str, float] = {}

    def start_batch(self) -> None:
        self.batch = {}

    def add(self, key: str, amount: float = 1) -> None:
        self.batch[key] = self.batch.get(key, 0) + amount
        self.totals[key] = self.totals.get(key, 0) + amount

    def get(self, key: str) -> float:
        return self.batch.get(key, 0)

    def total(self, key: str) -> float:
        return self.totals.get(key, 0)


def mac_attention(entries: int, dims: Dims) -> int:
    """Multiply-accumulate tally for one node's K-layer pipeline."""
    per_layer = dims.heads * (dims.query_in * dims.d_k)            # queries
    per_layer += entries * dims.heads * (2 * dims.key_in * dims.d_k)  # k and v
    per_layer += entries * dims.heads * 2 * dims.d_k               # score + weighted sum
    per_layer += dims.heads * dims.d_k * dims.d                    # output projection
    return dims.layers * per_layer


def mac_message(dims: Dims) -> int:
    return dims.d_m * dims.msg_in


def mac_gru(dims: Dims) -> int:
    return 3 * (dims.d_s * dims.d_m + dims.d_s * dims.d_s)
