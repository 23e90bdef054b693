"""Decayed drift estimators and the adaptive/fixed rebuild policies."""

from __future__ import annotations

import numpy as np


class DriftContractError(ValueError):
    pass


# Decisions are None (no rebuild), ("partial", node_set) or ("full", None).
Decision = tuple[str, set | None] | None


def fixed_schedule_decide(batch_index: int, interval: int | None) -> Decision:
    """Periodic baseline: full rebuild every `interval` batches.
    interval None (or < 1) means never."""
    if interval is None or interval < 1:
        return None
    if batch_index % interval == 0:
        return ("full", None)
    return None


class DriftScheduler:
    """Per-node decayed change accumulators with lazy decay.

    The estimator update per batch is acc <- gamma * acc + |dN_v|/|N_v|;
    nodes untouched in a batch decay implicitly (gamma^elapsed applied at
    the next touch or read), so per-batch cost stays O(|affected|).
    """

    def __init__(self, gamma: float, delta_max: float, alpha: float):
        self.gamma = gamma
        self.delta_max = delta_max
        self.alpha = alpha
        self.tau = 0
        self._acc: dict[int, float] = {}
        self._touched: dict[int, int] = {}
        self._cum_affected: set[int] = set()

    def _decayed(self, v: int) -> float:
        acc = self._acc.get(v, 0.0)
        if acc == 0.0:
            return 0.0
        return acc * self.gamma ** (self.tau - self._touched[v])

    def estimator(self, v: int) -> float:
        return self._decayed(v)

    def record_batch_changes(self, changes: dict[int, tuple[int, int]]) -> None:
        """One call per batch: changes maps node -> (|dN_v|, |N_v|)."""
        self.tau += 1
        for v, (dn, nv) in changes.items():
            if nv <= 0:
                raise DriftContractError(f"node {v}: |N_v| must be positive")
            self._acc[v] = self._decayed(v) + dn / nv
            self._touched[v] = self.tau

    def note_affected(self, nodes) -> None:
        self._cum_affected.update(nodes)

    def global_drift(self) -> float:
        """Mean estimator over the cumulative affected set since the last
        rebuild; zero when that set is empty."""
        if not self._cum_affected:
            return 0.0
        total = sum(self._decayed(v) for v in self._cum_affected)
        return total / len(self._cum_affected)

    def decide_rebuild(self, n: int) -> Decision:
        if self.global_drift() <= self.delta_max:
            return None
        drifted = {v for v in self._cum_affected if self._decayed(v) > self.delta_max}
        if len(drifted) < self.alpha * n:
            return ("partial", drifted)
        return ("full", None)

    def execute_rebuild(self, decision: Decision, engine) -> int:
        """Run the rebuild on the engine, then reset all estimators."""
        if decision is None:
            raise DriftContractError("execute_rebuild needs a non-None decision")
        kind, nodes = decision
        if kind == "partial":
            count = engine.rebuild_nodes(sorted(nodes))
        else:
            count = engine.rebuild_nodes(None)
        self.reset()
        return count

    def reset(self) -> None:
        self.tau = 0
        self._acc.clear()
        self._touched.clear()
        self._cum_affected.clear()
