"""Model parameter container, deterministic initialization, and text I/O."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .config import Dims


@dataclass
class ModelParameters:
    """Every learnable tensor, double precision throughout.

    Attention projections are stacked per layer and head:
    w_q: (K, H, d + d_t, d_k), w_k/w_v: (K, H, d + d_e + d_t, d_k),
    w_o: (K, H * d_k, d). Message matrices act on
    [s_self || s_other || e || phi(dt)].
    """

    dims: Dims
    omega: np.ndarray            # (d_t // 2,)
    w_msg_src: np.ndarray        # (d_m, 2*d_s + d_e + d_t)
    b_msg_src: np.ndarray        # (d_m,)
    w_msg_dst: np.ndarray
    b_msg_dst: np.ndarray
    w_z: np.ndarray              # (d_s, d_m)
    u_z: np.ndarray              # (d_s, d_s)
    b_z: np.ndarray              # (d_s,)
    w_r: np.ndarray
    u_r: np.ndarray
    b_r: np.ndarray
    w_h: np.ndarray
    u_h: np.ndarray
    b_h: np.ndarray
    w_q: np.ndarray              # (K, H, d + d_t, d_k)
    w_k: np.ndarray              # (K, H, d + d_e + d_t, d_k)
    w_v: np.ndarray              # (K, H, d + d_e + d_t, d_k)
    w_o: np.ndarray              # (K, H * d_k, d)
    w_pred: np.ndarray           # (2 * d,)
    b_pred: float

    def tensors(self) -> dict[str, np.ndarray]:
        out = {}
        for f in fields(self):
            if f.name in ("dims", "b_pred"):
                continue
            out[f.name] = getattr(self, f.name)
        out["b_pred"] = np.array([self.b_pred])
        return out


def frequency_ladder(d_t: int) -> np.ndarray:
    """Geometric frequencies spanning [1e-4, 1]; a single frequency is 1."""
    half = d_t // 2
    if half == 1:
        return np.ones(1)
    step = 4.0 / (half - 1)
    return 10.0 ** (-step * np.arange(half, dtype=np.float64))


def _glorot(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape)


def init_params(seed: int, dims: Dims) -> ModelParameters:
    """Deterministic: identical seed + dims give bit-identical tensors."""
    dims.validate()
    rng = np.random.default_rng(seed)
    d_s, d_e, d_t, d_m = dims.d_s, dims.d_e, dims.d_t, dims.d_m
    d, d_k, H, K = dims.d, dims.d_k, dims.heads, dims.layers
    msg_in = dims.msg_in

    omega = frequency_ladder(d_t)
    w_msg_src = _glorot(rng, (d_m, msg_in), msg_in, d_m)
    w_msg_dst = _glorot(rng, (d_m, msg_in), msg_in, d_m)
    gru_w = [_glorot(rng, (d_s, d_m), d_m, d_s) for _ in range(3)]
    gru_u = [_glorot(rng, (d_s, d_s), d_s, d_s) for _ in range(3)]
    w_q = np.empty((K, H, dims.query_in, d_k))
    w_k = np.empty((K, H, dims.key_in, d_k))
    w_v = np.empty((K, H, dims.key_in, d_k))
    w_o = np.empty((K, H * d_k, d))
    for l in range(K):
        for h in range(H):
            w_q[l, h] = _glorot(rng, (dims.query_in, d_k), dims.query_in, d_k)
            w_k[l, h] = _glorot(rng, (dims.key_in, d_k), dims.key_in, d_k)
            w_v[l, h] = _glorot(rng, (dims.key_in, d_k), dims.key_in, d_k)
        w_o[l] = _glorot(rng, (H * d_k, d), H * d_k, d)
    w_pred = _glorot(rng, (2 * d,), 2 * d, 1)

    return ModelParameters(
        dims=dims,
        omega=omega,
        w_msg_src=w_msg_src,
        b_msg_src=np.zeros(d_m),
        w_msg_dst=w_msg_dst,
        b_msg_dst=np.zeros(d_m),
        w_z=gru_w[0], u_z=gru_u[0], b_z=np.zeros(d_s),
        w_r=gru_w[1], u_r=gru_u[1], b_r=np.zeros(d_s),
        w_h=gru_w[2], u_h=gru_u[2], b_h=np.zeros(d_s),
        w_q=w_q, w_k=w_k, w_v=w_v, w_o=w_o,
        w_pred=w_pred,
        b_pred=0.0,
    )


def zeros_params(dims: Dims) -> ModelParameters:
    """All-zero parameters; handy for closed-form kernel tests."""
    p = init_params(0, dims)
    for name, t in p.tensors().items():
        if name == "omega":
            continue
        t[...] = 0.0
    p.b_pred = 0.0
    return p


_DIM_FIELDS = ("d_s", "d_e", "d_t", "d_x", "d_m", "d_k", "heads", "layers")


def save_params(params: ModelParameters, path: str) -> None:
    """Text format: one `tensor <name> <shape>` header then row-major values,
    printed with 17 significant digits so doubles round-trip exactly."""
    with open(path, "w") as fh:
        fh.write("# streamtgn-params v1\n")
        fh.write("dims " + " ".join(f"{k}={getattr(params.dims, k)}" for k in _DIM_FIELDS) + "\n")
        for name, t in params.tensors().items():
            shape = ",".join(str(s) for s in t.shape)
            fh.write(f"tensor {name} {shape}\n")
            flat = np.asarray(t, dtype=np.float64).ravel()
            for i in range(0, flat.size, 8):
                fh.write(" ".join(f"{v:.17g}" for v in flat[i:i + 8]) + "\n")


def load_params(path: str) -> ModelParameters:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "# streamtgn-params v1":
            raise ValueError(f"unrecognized parameter file header: {header!r}")
        dim_line = fh.readline().split()
        if dim_line[0] != "dims":
            raise ValueError("missing dims line")
        kv = dict(item.split("=") for item in dim_line[1:])
        dims = Dims(**{k: int(kv[k]) for k in _DIM_FIELDS})
        tensors: dict[str, np.ndarray] = {}
        name, shape, buf = None, None, []
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "tensor":
                if name is not None:
                    tensors[name] = np.array(buf, dtype=np.float64).reshape(shape)
                name = parts[1]
                shape = tuple(int(s) for s in parts[2].split(","))
                buf = []
            else:
                buf.extend(float(v) for v in parts)
        if name is not None:
            tensors[name] = np.array(buf, dtype=np.float64).reshape(shape)

    b_pred = float(tensors.pop("b_pred")[0])
    return ModelParameters(dims=dims, b_pred=b_pred, **tensors)
