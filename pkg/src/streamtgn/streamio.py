"""Edge-stream file format and the synthetic stream generator.

Format: header line `# streamtgn-edges v1 d_e=<k>`, then CSV rows
`src,dst,timestamp,f1,...,f_k`. Timestamps must be non-decreasing.
Floats are serialized with shortest round-trip repr so that
generate -> parse -> re-serialize is byte-identical.
"""

from __future__ import annotations

import numpy as np

from .graph_store import TemporalEdge

HEADER_PREFIX = "# streamtgn-edges v1 d_e="


class StreamParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def write_stream(edges: list[TemporalEdge], d_e: int, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_stream(edges, d_e))


def serialize_stream(edges: list[TemporalEdge], d_e: int) -> str:
    lines = [f"{HEADER_PREFIX}{d_e}"]
    for e in edges:
        fields = [str(e.src), str(e.dst), repr(float(e.t))]
        fields.extend(repr(float(x)) for x in e.feat)
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"


def read_stream(path: str, sort: bool = False) -> tuple[list[TemporalEdge], int]:
    """Parse a stream file; errors carry the offending line number.

    Out-of-order timestamps are a hard error unless sort=True, which
    stably re-sorts by timestamp (the --sort rescue).
    """
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith(HEADER_PREFIX):
            raise StreamParseError(1, f"bad header {header!r}")
        try:
            d_e = int(header[len(HEADER_PREFIX):])
        except ValueError:
            raise StreamParseError(1, "d_e is not an integer") from None
        edges: list[TemporalEdge] = []
        prev_t = -np.inf
        ordered = True
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3 + d_e:
                raise StreamParseError(line_no, f"expected {3 + d_e} fields, got {len(parts)}")
            try:
                src, dst = int(parts[0]), int(parts[1])
                t = float(parts[2])
                feat = np.array([float(x) for x in parts[3:]], dtype=np.float64)
            except ValueError as exc:
                raise StreamParseError(line_no, str(exc)) from None
            if src < 0 or dst < 0:
                raise StreamParseError(line_no, "negative node id")
            if t < prev_t:
                if not sort:
                    raise StreamParseError(
                        line_no, f"timestamp {t} decreases (previous {prev_t}); use --sort")
                ordered = False
            prev_t = max(prev_t, t)
            edges.append(TemporalEdge(src, dst, t, feat))
    if sort and not ordered:
        edges.sort(key=lambda e: e.t)  # stable: arrival order kept within ties
    return edges, d_e


EPOCH_TICKS = 50
HOT_FRACTION = 0.1


def generate_stream(seed: int, n: int, m: int, attachment: str = "uniform",
                    burstiness: float = 1.0, d_e: int = 4) -> list[TemporalEdge]:
    """Deterministic synthetic stream with integer-tick timestamps.

    Rates alternate between equal-duration epochs with edge-count ratio
    `burstiness`; during high-rate epochs endpoints concentrate on a hot
    subset (10% of nodes) so churn actually clusters. `preferential`
    biases partner choice by current degree.
    """
    if n < 2:
        raise ValueError("need at least 2 nodes")
    if m < 1:
        raise ValueError("need at least 1 edge")
    if attachment not in ("uniform", "preferential"):
        raise ValueError(f"unknown attachment {attachment!r}")
    if burstiness < 1.0:
        raise ValueError("burstiness must be >= 1")
    rng = np.random.default_rng(seed)
    base_rate = 2.0
    r_hi = 2.0 * burstiness / (burstiness + 1.0) * base_rate
    r_lo = 2.0 / (burstiness + 1.0) * base_rate
    hot = max(2, int(n * HOT_FRACTION))
    endpoint_pool: list[int] = []   # one entry per incident edge, for degree bias

    def draw_node(hot_epoch: bool) -> int:
        if hot_epoch and burstiness > 1.0:
            return int(rng.integers(0, hot))
        return int(rng.integers(0, n))

    def draw_pair(hot_epoch: bool) -> tuple[int, int]:
        src = draw_node(hot_epoch)
        if attachment == "preferential" and endpoint_pool and rng.random() < 0.8:
            dst = endpoint_pool[int(rng.integers(0, len(endpoint_pool)))]
        else:
            dst = draw_node(hot_epoch)
        tries = 0
        while dst == src and tries < 8:
            dst = draw_node(hot_epoch)
            tries += 1
        return src, dst

    edges: list[TemporalEdge] = []
    tick = 0
    acc = 0.0
    while len(edges) < m:
        epoch = tick // EPOCH_TICKS
        hot_epoch = epoch % 2 == 1
        acc += r_hi if hot_epoch else r_lo
        count = int(acc)
        acc -= count
        for _ in range(count):
            if len(edges) >= m:
                break
            src, dst = draw_pair(hot_epoch)
            feat = rng.standard_normal(d_e)
            edges.append(TemporalEdge(src, dst, float(tick), feat))
            endpoint_pool.append(src)
            endpoint_pool.append(dst)
        tick += 1
    return edges
