"""Pure-numpy batched node pipeline: the fallback twin of the numba kernel.

Loops node by node so each node's floating-point path is independent of
the node set it is batched with (matches the numba kernel's guarantee).
"""

from __future__ import annotations

import numpy as np


def _phi(dt: np.ndarray, omega: np.ndarray, d_t: int) -> np.ndarray:
    ang = np.outer(dt, omega)
    out = np.empty((dt.shape[0], d_t))
    out[:, 0::2] = np.cos(ang)
    out[:, 1::2] = np.sin(ang)
    out *= np.sqrt(1.0 / d_t)
    return out


def pipeline_many(qbase, offsets, payload, feat, dt, omega, phi0, wq, wk, wv, wo):
    """K-layer multi-head attention for N nodes over flat entry arrays.

    qbase: (N, d) layer-1 query bases [s || x]
    offsets: (N+1,) entry slice per node
    payload: (E, K, d) frozen neighbor inputs per layer
    feat: (E, d_e); dt: (E,) per-entry time deltas
    Returns (out, scores, values, maxlog, zsum, qvecs); scores live in the
    max-scaled frame (exp(logit - maxlog)).
    """
    N = qbase.shape[0]
    K, H, _, d_k = wq.shape
    d = qbase.shape[1]
    d_t = phi0.shape[0]
    E_total = payload.shape[0]

    out = np.zeros((N, K, d))
    scores = np.zeros((E_total, K, H))
    values = np.zeros((E_total, K, H, d_k))
    maxlog = np.full((N, K, H), -np.inf)
    zsum = np.zeros((N, K, H))
    qvecs = np.zeros((N, K, H, d_k))
    inv_sqrt = 1.0 / np.sqrt(d_k)

    for i in range(N):
        lo, hi = int(offsets[i]), int(offsets[i + 1])
        E = hi - lo
        phi_e = _phi(dt[lo:hi], omega, d_t) if E else None
        qcur = qbase[i]
        for l in range(K):
            qin = np.concatenate([qcur, phi0])
            concat = np.zeros(H * d_k)
            for h in range(H):
                q = qin @ wq[l, h]
                qvecs[i, l, h] = q
                if E == 0:
                    continue
                kin = np.concatenate([payload[lo:hi, l], feat[lo:hi], phi_e], axis=1)
                k = kin @ wk[l, h]
                v = kin @ wv[l, h]
                logits = (k @ q) * inv_sqrt
                m = float(np.max(logits))
                sc = np.exp(logits - m)
                z = float(np.sum(sc))
                maxlog[i, l, h] = m
                zsum[i, l, h] = z
                scores[lo:hi, l, h] = sc
                values[lo:hi, l, h] = v
                concat[h * d_k:(h + 1) * d_k] = (sc @ v) / z
            out[i, l] = concat @ wo[l]
            qcur = out[i, l]
    return out, scores, values, maxlog, zsum, qvecs
