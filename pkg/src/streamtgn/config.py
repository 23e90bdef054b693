"""Run configuration and model dimension bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, field, replace


AGGREGATORS = ("mean", "last", "sum")
MODES = ("exact", "delta")
REBUILD_POLICIES = ("adaptive", "fixed", "never")


@dataclass(frozen=True)
class Dims:
    """Model dimensions.

    The embedding width d equals d_s + d_x: attention inputs are
    [s_v || x_v || phi] at layer 1 and [h_v || phi] above it, so the
    projection shapes only line up when d = d_s + d_x.
    """

    d_s: int = 8    # node memory
    d_e: int = 4    # edge features
    d_t: int = 8    # time encoding (even)
    d_x: int = 0    # static node features (zero-filled)
    d_m: int = 8    # message
    d_k: int = 4    # per-head key/query
    heads: int = 2
    layers: int = 1

    @property
    def d(self) -> int:
        return self.d_s + self.d_x

    @property
    def query_in(self) -> int:
        return self.d + self.d_t

    @property
    def key_in(self) -> int:
        return self.d + self.d_e + self.d_t

    @property
    def msg_in(self) -> int:
        return 2 * self.d_s + self.d_e + self.d_t

    def validate(self) -> None:
        for name in ("d_s", "d_e", "d_t", "d_x", "d_m", "d_k", "heads", "layers"):
            v = getattr(self, name)
            if v < 0 or (v == 0 and name not in ("d_e", "d_x")):
                raise ConfigError(f"{name} must be positive (got {v})")
        if self.d_t % 2 != 0:
            raise ConfigError(f"d_t must be even (got {self.d_t})")
        if self.d == 0:
            raise ConfigError("d_s + d_x must be positive")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    dims: Dims = field(default_factory=Dims)
    batch_size: int = 200
    fanout: int = 10            # L, sampled neighbors per node per layer
    mode: str = "exact"
    aggregator: str = "last"
    rebuild: str = "never"      # adaptive | fixed | never
    rebuild_interval: int = 0   # R for the fixed policy
    gamma: float = 0.9
    delta_max: float = 0.5
    alpha: float = 0.1
    seed: int = 0
    queue_capacity: int = 1 << 16
    nodes: int = 0              # node universe size; 0 = infer from stream
    window: float = float("inf")  # neighbor-cache temporal window T_w

    def validate(self) -> None:
        self.dims.validate()
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.fanout < 1:
            raise ConfigError("fanout must be >= 1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.aggregator not in AGGREGATORS:
            raise ConfigError(f"aggregator must be one of {AGGREGATORS}")
        if self.rebuild not in REBUILD_POLICIES:
            raise ConfigError(f"rebuild must be one of {REBUILD_POLICIES}")
        if self.rebuild == "fixed" and self.rebuild_interval < 1:
            raise ConfigError("fixed rebuild policy needs rebuild_interval >= 1")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError("gamma must be in [0, 1)")
        if self.delta_max <= 0.0:
            raise ConfigError("delta_max must be > 0")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError("alpha must be in (0, 1]")
        if self.queue_capacity < 1:
            raise ConfigError("queue_capacity must be >= 1")

    def with_(self, **kw) -> "RunConfig":
        return replace(self, **kw)
