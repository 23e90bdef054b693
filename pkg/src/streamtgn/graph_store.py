"""Edge queue and temporal adjacency list: all topology state.

The adjacency list is append-only. Per-node lists are kept in arrival
order and walked backwards for queries, which yields descending
timestamps with ties broken by later insertion first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class FeatureDimError(ValueError):
    """Edge feature vector does not match the configured d_e."""


class MonotonicityError(ValueError):
    """Edge timestamp is older than an already-inserted one."""


@dataclass(frozen=True)
class TemporalEdge:
    src: int
    dst: int
    t: float
    feat: np.ndarray

    def __post_init__(self):
        if self.src < 0 or self.dst < 0:
            raise ValueError("node ids must be non-negative")


class NeighborEntry(NamedTuple):
    """One adjacency entry as seen from a node: the other endpoint, the
    edge timestamp, and a reference (edge id) to the stored features."""

    nbr: int
    t: float
    edge_id: int


class EdgeQueue:
    """Fixed-capacity FIFO ring buffer with reject-on-full backpressure."""

    def __init__(self, capacity: int, d_e: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.d_e = d_e
        self._buf: list[TemporalEdge | None] = [None] * capacity
        self._head = 0  # next slot to read
        self._size = 0

    def __len__(self) -> int:
        return self._size

    @property
    def occupancy(self) -> int:
        return self._size

    def enqueue(self, edge: TemporalEdge) -> bool:
        """Append one edge. False (state unchanged) when full; a feature
        length mismatch is an error, never a silent drop."""
        if len(edge.feat) != self.d_e:
            raise FeatureDimError(
                f"edge feature has length {len(edge.feat)}, expected {self.d_e}")
        if self._size == self.capacity:
            return False
        self._buf[(self._head + self._size) % self.capacity] = edge
        self._size += 1
        return True

    def flush_batch(self, max_count: int, before: float | None = None) -> list[TemporalEdge]:
        """Remove and return up to max_count oldest edges in enqueue order.

        `before` is the optional time-window filter: only edges with
        t < before are flushed (flushing stops at the first newer edge so
        FIFO order is preserved).
        """
        out: list[TemporalEdge] = []
        while self._size and len(out) < max_count:
            edge = self._buf[self._head]
            if before is not None and edge.t >= before:
                break
            out.append(edge)
            self._buf[self._head] = None
            self._head = (self._head + 1) % self.capacity
            self._size -= 1
        return out


@dataclass
class _NodeList:
    nbrs: list[int] = field(default_factory=list)
    ts: list[float] = field(default_factory=list)
    eids: list[int] = field(default_factory=list)


class TemporalAdjacencyList:
    """Undirected multigraph adjacency with O(1) amortized insertion.

    Every edge appears under both endpoints. Insertion enforces stream
    monotonicity (non-decreasing timestamps).
    """

    def __init__(self, d_e: int):
        self.d_e = d_e
        self._nodes: dict[int, _NodeList] = {}
        self._feats = np.zeros((16, d_e))
        self.m = 0
        self.n = 0
        self.t_now = -np.inf

    def edge_feature(self, edge_id: int) -> np.ndarray:
        if edge_id >= self.m:
            raise IndexError(f"edge id {edge_id} out of range")
        return self._feats[edge_id]

    def feature_table(self) -> np.ndarray:
        """(m, d_e) view of all committed edge features."""
        return self._feats[:self.m]

    def insert_edge(self, edge: TemporalEdge) -> int:
        """Insert one edge under both endpoints; returns its edge id."""
        if len(edge.feat) != self.d_e:
            raise FeatureDimError(
                f"edge feature has length {len(edge.feat)}, expected {self.d_e}")
        if edge.t < self.t_now:
            raise MonotonicityError(
                f"edge at t={edge.t} arrived after t={self.t_now}")
        eid = self.m
        if eid >= self._feats.shape[0]:
            grown = np.zeros((max(16, eid * 2), self.d_e))
            grown[:eid] = self._feats[:eid]
            self._feats = grown
        self._feats[eid] = np.asarray(edge.feat, dtype=np.float64)
        for node, other in ((edge.src, edge.dst), (edge.dst, edge.src)):
            lst = self._nodes.get(node)
            if lst is None:
                lst = self._nodes[node] = _NodeList()
            lst.nbrs.append(other)
            lst.ts.append(edge.t)
            lst.eids.append(eid)
            if edge.src == edge.dst:
                break  # self-loop: one entry
        self.m += 1
        self.t_now = edge.t
        self.n = max(self.n, edge.src + 1, edge.dst + 1)
        return eid

    def degree(self, v: int) -> int:
        lst = self._nodes.get(v)
        return len(lst.ts) if lst else 0

    def get_temporal_neighbors(self, v: int, t_start: float, t_end: float) -> list[NeighborEntry]:
        """Entries with t_start <= t <= t_end, newest first."""
        if t_start > t_end:
            raise ValueError("t_start must be <= t_end")
        lst = self._nodes.get(v)
        if lst is None:
            return []
        out = []
        for i in range(len(lst.ts) - 1, -1, -1):
            t = lst.ts[i]
            if t > t_end:
                continue
            if t < t_start:
                break  # lists are time-ordered; nothing older qualifies
            out.append(NeighborEntry(lst.nbrs[i], t, lst.eids[i]))
        return out

    def get_recent_neighbors(self, v: int, limit: int, before: float) -> list[NeighborEntry]:
        """The `limit` most recent entries with t strictly < before."""
        lst = self._nodes.get(v)
        if lst is None:
            return []
        out = []
        for i in range(len(lst.ts) - 1, -1, -1):
            if lst.ts[i] >= before:
                continue
            out.append(NeighborEntry(lst.nbrs[i], lst.ts[i], lst.eids[i]))
            if len(out) == limit:
                break
        return out

    def recent_upto(self, v: int, limit: int) -> list[NeighborEntry]:
        """The `limit` most recent entries with t <= t_now (inclusive
        sampling used by the engines' caches)."""
        lst = self._nodes.get(v)
        if lst is None:
            return []
        start = len(lst.ts) - 1
        stop = max(-1, start - limit)
        return [NeighborEntry(lst.nbrs[i], lst.ts[i], lst.eids[i])
                for i in range(start, stop, -1)]
