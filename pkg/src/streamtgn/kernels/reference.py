"""Single-call reference implementations of the neural operations.

These are the contract surface: plain numpy, one node or one message at
a time. The batched pipeline backends must agree with these on random
inputs (tests enforce it against independent scalar-loop oracles too).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..params import ModelParameters


class KernelInputError(ValueError):
    """Raised on dimension mismatches and contract violations."""


def time_encode(delta_t: float, params: ModelParameters) -> np.ndarray:
    """phi(dt): interleaved (cos, sin) pairs scaled by sqrt(1/d_t)."""
    d_t = params.dims.d_t
    out = np.empty(d_t)
    ang = params.omega * delta_t
    out[0::2] = np.cos(ang)
    out[1::2] = np.sin(ang)
    out *= np.sqrt(1.0 / d_t)
    return out


def compute_message(
    s_self: np.ndarray,
    s_other: np.ndarray,
    feat: np.ndarray,
    delta_t: float,
    side: str,
    params: ModelParameters,
) -> np.ndarray:
    """W_side @ [s_self || s_other || feat || phi(dt)] + b_side."""
    dims = params.dims
    if s_self.shape != (dims.d_s,) or s_other.shape != (dims.d_s,):
        raise KernelInputError("memory vector has wrong dimension")
    if feat.shape != (dims.d_e,):
        raise KernelInputError(f"edge feature must have length {dims.d_e}")
    if side == "source":
        w, b = params.w_msg_src, params.b_msg_src
    elif side == "destination":
        w, b = params.w_msg_dst, params.b_msg_dst
    else:
        raise KernelInputError(f"side must be source|destination, got {side!r}")
    x = np.concatenate([s_self, s_other, feat, time_encode(delta_t, params)])
    return w @ x + b


def aggregate_messages(msgs: list[tuple[np.ndarray, float]], mode: str) -> np.ndarray:
    """Combine same-node messages: mean, last (latest t, ties -> latest
    arrival), or elementwise sum. Empty input is a contract violation."""
    if not msgs:
        raise KernelInputError("cannot aggregate an empty message list")
    if mode == "mean":
        return sum(m for m, _ in msgs) / len(msgs)
    if mode == "sum":
        total = np.zeros_like(msgs[0][0])
        for m, _ in msgs:
            total = total + m
        return total
    if mode == "last":
        best = msgs[0]
        for cand in msgs[1:]:
            if cand[1] >= best[1]:
                best = cand
        return best[0]
    raise KernelInputError(f"unknown aggregation mode {mode!r}")


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def gru_update(msg: np.ndarray, s_prev: np.ndarray, params: ModelParameters) -> np.ndarray:
    dims = params.dims
    if msg.shape != (dims.d_m,):
        raise KernelInputError(f"message must have length {dims.d_m}")
    if s_prev.shape != (dims.d_s,):
        raise KernelInputError(f"memory must have length {dims.d_s}")
    z = _sigmoid(params.w_z @ msg + params.u_z @ s_prev + params.b_z)
    r = _sigmoid(params.w_r @ msg + params.u_r @ s_prev + params.b_r)
    cand = np.tanh(params.w_h @ msg + params.u_h @ (r * s_prev) + params.b_h)
    return (1.0 - z) * cand + z * s_prev


@dataclass
class HeadState:
    """Per-head attention state in the max-scaled frame.

    scores[i] = exp(logit_i - max_logit); z = sum(scores);
    vsum = sum(scores[i] * values[i]). The normalized output is vsum / z.
    """

    query: np.ndarray        # (d_k,)
    max_logit: float
    scores: np.ndarray       # (E,)
    values: np.ndarray       # (E, d_k)
    z: float
    vsum: np.ndarray         # (d_k,)

    def weights(self) -> np.ndarray:
        return self.scores / self.z


@dataclass
class AttentionState:
    """All heads of one layer for one node, plus entry timestamps."""

    timestamps: np.ndarray   # (E,)
    heads: list[HeadState]


def attention_state(
    query_input: np.ndarray,
    neighbor_inputs: list[tuple[np.ndarray, float]],
    layer: int,
    params: ModelParameters,
) -> AttentionState:
    """Score a neighborhood: per-head queries, max-scaled exponent scores,
    value vectors, running normalizer."""
    dims = params.dims
    if query_input.shape != (dims.query_in,):
        raise KernelInputError(f"query input must have length {dims.query_in}")
    for kin, _ in neighbor_inputs:
        if kin.shape != (dims.key_in,):
            raise KernelInputError(f"key/value input must have length {dims.key_in}")
    ts = np.array([t for _, t in neighbor_inputs], dtype=np.float64)
    heads = []
    inv_sqrt = 1.0 / np.sqrt(dims.d_k)
    for h in range(dims.heads):
        q = query_input @ params.w_q[layer, h]
        E = len(neighbor_inputs)
        values = np.empty((E, dims.d_k))
        logits = np.empty(E)
        for i, (kin, _) in enumerate(neighbor_inputs):
            k = kin @ params.w_k[layer, h]
            values[i] = kin @ params.w_v[layer, h]
            logits[i] = (q @ k) * inv_sqrt
        if E:
            m = float(np.max(logits))
            scores = np.exp(logits - m)
            z = float(np.sum(scores))
            vsum = scores @ values
        else:
            m, scores, z, vsum = -np.inf, np.empty(0), 0.0, np.zeros(dims.d_k)
        heads.append(HeadState(query=q, max_logit=m, scores=scores, values=values, z=z, vsum=vsum))
    return AttentionState(timestamps=ts, heads=heads)


def attention_output(state: AttentionState, layer: int, params: ModelParameters) -> np.ndarray:
    """Concatenate normalized head outputs and project by W_O."""
    dims = params.dims
    concat = np.zeros(dims.heads * dims.d_k)
    if state.timestamps.size:
        for h, hs in enumerate(state.heads):
            concat[h * dims.d_k:(h + 1) * dims.d_k] = hs.vsum / hs.z
    return concat @ params.w_o[layer]


def temporal_attention(
    query_input: np.ndarray,
    neighbor_inputs: list[tuple[np.ndarray, float]],
    t_query: float,
    layer: int,
    params: ModelParameters,
) -> tuple[np.ndarray, AttentionState]:
    """One attention layer over a (possibly empty) neighborhood.

    Returns the projected output (zero vector when the neighborhood is
    empty) and the per-head score/value records the attention cache keeps.
    """
    state = attention_state(query_input, neighbor_inputs, layer, params)
    return attention_output(state, layer, params), state


def predict_link(h_u: np.ndarray, h_v: np.ndarray, params: ModelParameters) -> float:
    """sigmoid(w_p . [h_u || h_v] + b_p), always in (0, 1)."""
    x = np.concatenate([h_u, h_v])
    return float(_sigmoid(params.w_pred @ x + params.b_pred))
