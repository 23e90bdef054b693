"""Closed-form cost and speedup calculators, validated against measured
work counters by the test suite."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class CostModel:
    n: int
    batch_size: int
    fanout: int
    layers: int
    d: int
    d_m: int
    mean_degree: float = 10.0
    r_overhead: float = 1.0   # c_kernel / c_batch

    def validate(self) -> None:
        for name in ("n", "batch_size", "fanout", "layers", "d", "d_m"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.mean_degree <= 0 or self.r_overhead <= 0:
            raise ValueError("mean_degree and r_overhead must be positive")


def full_cost(model: CostModel) -> float:
    """Abstract ops for recomputing all n nodes: n*L*K*d^2 + n*d_m^2."""
    model.validate()
    return (model.n * model.fanout * model.layers * model.d ** 2
            + model.n * model.d_m ** 2)


def detection_cost(model: CostModel) -> float:
    return model.batch_size * model.fanout ** model.layers


def incremental_cost(model: CostModel, affected_size: int) -> float:
    """|A|*L*K*d^2 + |A|*d_m^2 plus the detection term B*L^K."""
    model.validate()
    if affected_size < 0:
        raise ValueError("affected_size must be non-negative")
    if affected_size > model.n:
        raise ValueError("affected_size cannot exceed n")
    return (affected_size * model.fanout * model.layers * model.d ** 2
            + affected_size * model.d_m ** 2
            + detection_cost(model))


def theoretical_speedup(n: int, batch_size: int, fanout: int, layers: int) -> tuple[int, float]:
    """Affected-set bound 2*B*L^K and the resulting speedup floor n/bound."""
    if min(n, batch_size, fanout, layers) < 1:
        raise ValueError("all inputs must be positive")
    bound = 2 * batch_size * fanout ** layers
    return bound, n / bound


def optimality_threshold(model: CostModel) -> float:
    """Affected-ratio threshold below which incremental wins.

    General form: c_batch/c_kernel - c_detect/(n*dbar*K*d^2*c_kernel),
    with c_batch = 1 and c_kernel = r_overhead. For large n this tends to
    1/r_overhead.
    """
    model.validate()
    c_batch = 1.0
    c_kernel = model.r_overhead * c_batch
    correction = detection_cost(model) / (
        model.n * model.mean_degree * model.layers * model.d ** 2 * c_kernel)
    return c_batch / c_kernel - correction


def lower_bound_ops(affected_edges: int, layers: int, d: int) -> int:
    """Information floor: every affected edge costs at least K*d work."""
    if affected_edges < 0 or layers < 1 or d < 1:
        raise ValueError("affected_edges must be >= 0; layers, d >= 1")
    return affected_edges * layers * d


SPEEDUP_TABLE_ROWS = (
    (10**6, 200, 10, 1),
    (10**6, 200, 10, 2),
    (10**6, 200, 20, 1),
    (10**7, 200, 10, 1),
)


def speedup_table(extra_rows=()) -> str:
    """The reference parameter-regime table plus any user rows."""
    lines = ["n B L K bound speedup"]
    for n, b, l, k in tuple(SPEEDUP_TABLE_ROWS) + tuple(extra_rows):
        bound, s = theoretical_speedup(n, b, l, k)
        s_txt = f"{int(round(s))}x" if abs(s - round(s)) < 1e-9 else f"{s:.2f}x"
        lines.append(f"{n} {b} {l} {k} {bound} {s_txt}")
    return "\n".join(lines) + "\n"
