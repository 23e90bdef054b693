"""Acceptance suite: one test per criterion, printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines; the
whole module targets well under ten minutes on the numba backend.
"""

import math

import numpy as np
import pytest

from streamtgn import kernels
from streamtgn.batcher import batches_of, compare_sequential_vs_batched
from streamtgn.config import Dims, RunConfig
from streamtgn.engine import IncrementalEngine, delta_embed
from streamtgn.graph_store import TemporalEdge
from streamtgn.oracle import OracleEngine, replay_sequential
from streamtgn.params import init_params
from streamtgn.runner import brute_force_affected, run_bench, run_verify
from streamtgn.speedup import theoretical_speedup
from streamtgn.state import AttnState
from streamtgn.streamio import generate_stream

from conftest import random_params


def report(num, name, ok):
    print(f"\n[ACCEPTANCE] criterion {num} ({name}): {'PASS' if ok else 'FAIL'}")
    assert ok, f"criterion {num} ({name}) failed"


def dims_for(layers, d_e=4):
    return Dims(d_s=8, d_e=d_e, d_t=8, d_x=0, d_m=8, d_k=4, heads=2, layers=layers)


# -- 1: exact-mode oracle equivalence ----------------------------------------

STREAM_MATRIX = [
    # n, m, B, K, L, aggregator, attachment
    (100, 2000, 1, 1, 5, "last", "uniform"),
    (100, 2000, 1, 2, 2, "mean", "uniform"),
    (100, 3000, 10, 1, 2, "sum", "preferential"),
    (100, 3000, 200, 2, 10, "mean", "uniform"),
    (100, 3000, 600, 1, 10, "last", "preferential"),
    (100, 2000, 10, 1, 10, "mean", "uniform"),
    (1000, 2000, 1, 1, 2, "sum", "uniform"),
    (1000, 8000, 10, 1, 5, "mean", "uniform"),
    (1000, 8000, 10, 2, 2, "last", "preferential"),
    (1000, 10000, 200, 1, 10, "sum", "uniform"),
    (1000, 10000, 200, 2, 5, "mean", "preferential"),
    (1000, 8000, 200, 1, 5, "last", "preferential"),
    (1000, 10000, 600, 1, 2, "last", "uniform"),
    (1000, 10000, 600, 2, 10, "sum", "uniform"),
    (1000, 12000, 600, 1, 10, "mean", "preferential"),
    (10000, 20000, 200, 1, 10, "mean", "uniform"),
    (10000, 30000, 200, 2, 5, "mean", "uniform"),
    (10000, 20000, 600, 1, 5, "last", "preferential"),
    (10000, 30000, 600, 2, 10, "last", "uniform"),
    (10000, 50000, 600, 1, 10, "sum", "uniform"),
]


def test_criterion_01_exact_oracle_equivalence():
    worst_embed = worst_pred = 0.0
    for i, (n, m, B, K, L, agg, attach) in enumerate(STREAM_MATRIX):
        dims = dims_for(K)
        cfg = RunConfig(dims=dims, batch_size=B, fanout=L, mode="exact",
                        aggregator=agg, nodes=n, seed=i)
        stream = generate_stream(seed=1000 + i, n=n, m=m, attachment=attach, d_e=4)
        res = run_verify(cfg, stream)
        worst_embed = max(worst_embed, res.max_embed_dev)
        worst_pred = max(worst_pred, res.max_pred_dev)
        assert res.bfs_mismatches == 0
    ok = worst_embed <= 1e-9 and worst_pred <= 1e-9
    print(f"\n  20 streams: max embed dev {worst_embed:.3e}, max pred dev {worst_pred:.3e}")
    report(1, "exact-mode oracle equivalence", ok)


# -- 2: affected-set brute-force equivalence -----------------------------------

def test_criterion_02_affected_set_bruteforce():
    rng = np.random.default_rng(77)
    dims_cache = {}
    mismatches = 0
    bound_violations = 0
    for trial in range(1000):
        K = int(rng.choice([1, 2]))
        L = int(rng.choice([2, 5, 10]))
        n = int(rng.integers(4, 60))
        m = int(rng.integers(2, 120))
        B = int(rng.integers(1, 9))
        dims = dims_cache.setdefault(K, dims_for(K, d_e=0))
        cfg = RunConfig(dims=dims, batch_size=max(B, 1), fanout=L, nodes=n)
        eng = IncrementalEngine(cfg, init_params(3, dims))
        hist = [TemporalEdge(int(rng.integers(0, n)), int(rng.integers(0, n)),
                             float(t), np.zeros(0)) for t in range(m)]
        eng.stage_batch(hist)
        eng.commit_pending()
        batch = [TemporalEdge(int(rng.integers(0, n)), int(rng.integers(0, n)),
                              float(m + j), np.zeros(0)) for j in range(B)]
        pending = eng.stage_batch(batch)
        aff = eng.detect_affected(pending)
        eng.commit_pending()
        brute = brute_force_affected(eng.store, batch, L, K)
        if aff.all != brute:
            mismatches += 1
        if len(aff.all) > 2 * B * L ** K:
            bound_violations += 1
    print(f"\n  1000 instances: {mismatches} mismatches, {bound_violations} bound violations")
    report(2, "affected-set brute-force equivalence", mismatches == 0 and bound_violations == 0)


# -- 3: counter-based speedup law ------------------------------------------------

def test_criterion_03_counter_speedup():
    dims = dims_for(1)
    cfg = RunConfig(dims=dims, batch_size=10, fanout=5, nodes=200)
    params = init_params(0, dims)
    inc = IncrementalEngine(cfg, params)
    orc = OracleEngine(cfg, params)
    exact_identity = True
    for batch in batches_of(generate_stream(5, 200, 1500, d_e=4), 10):
        inc.process_batch(batch.edges)
        orc.apply_batch_full(batch.edges)
        ratio = orc.counters.get("embed_refresh") / inc.counters.get("embed_refresh")
        if ratio != orc.node_count / inc.last_report.affected:
            exact_identity = False

    big = RunConfig(dims=dims, batch_size=200, fanout=10, nodes=100000)
    stream = generate_stream(seed=42, n=100000, m=50000, attachment="uniform", d_e=4)
    res = run_bench(big, stream)
    print(f"\n  identity exact: {exact_identity}; 100k-node counter speedup "
          f"{res.counter_speedup:.1f}x (floor 25x)")
    report(3, "counter-based speedup law", exact_identity and res.counter_speedup > 25.0)


# -- 4: theoretical table reproduction ---------------------------------------------

def test_criterion_04_speedup_table():
    rows = [
        ((10**6, 200, 10, 1), (4 * 10**3, 250)),
        ((10**6, 200, 10, 2), (4 * 10**4, 25)),
        ((10**6, 200, 20, 1), (8 * 10**3, 125)),
        ((10**7, 200, 10, 1), (4 * 10**3, 2500)),
    ]
    ok = True
    for args, (bound, speed) in rows:
        got_bound, got_speed = theoretical_speedup(*args)
        ok &= got_bound == bound and int(got_speed) == speed and got_speed == speed
    report(4, "theoretical table reproduction", ok)


# -- 5: delta-mode error bound --------------------------------------------------------

def _attn_state(q_in, rows, params):
    st = kernels.attention_state(q_in, [(r, t) for (_, _, t, r) in rows], 0, params)
    return AttnState(
        edge_ids=[eid for (eid, _, _, _) in rows],
        nbrs=[nbr for (_, nbr, _, _) in rows],
        timestamps=[t for (_, _, t, _) in rows],
        t_ref=max((t for (_, _, t, _) in rows), default=0.0),
        mem_version=0,
        q=np.stack([h.query for h in st.heads]),
        max_logit=np.array([h.max_logit for h in st.heads]),
        scores=[h.scores.copy() for h in st.heads],
        values=[h.values.copy() for h in st.heads],
        z=np.array([h.z for h in st.heads]),
        vsum=np.stack([h.vsum for h in st.heads]),
    )


def test_criterion_05_delta_error_bound():
    dims = dims_for(1)
    params = random_params(123, dims)
    rng = np.random.default_rng(11)
    violations = 0
    checked = 0
    next_id = 0

    def fresh_rows(k):
        nonlocal next_id
        out = []
        for _ in range(k):
            out.append((next_id, int(rng.integers(0, 1000)),
                        float(rng.uniform(0, 100)), rng.standard_normal(dims.key_in)))
            next_id += 1
        return out

    while checked < 10000:
        base = fresh_rows(int(rng.integers(1, 11)))
        q_in = rng.standard_normal(dims.query_in)
        st = _attn_state(q_in, base, params)
        current = list(base)
        for _ in range(int(rng.integers(1, 4))):
            n_add = int(rng.integers(0, 3))
            added = fresh_rows(n_add)
            n_exp = int(rng.integers(0, min(2, len(current)) + 1))
            exp_idx = sorted(rng.choice(len(current), size=n_exp, replace=False)) \
                if n_exp else []
            expired = [current[i][0] for i in exp_idx]
            survivors = [r for i, r in enumerate(current) if i not in exp_idx]
            n_upd = int(rng.integers(0, min(2, len(survivors)) + 1))
            upd_idx = sorted(rng.choice(len(survivors), size=n_upd, replace=False)) \
                if n_upd else []
            updated = []
            for i in upd_idx:
                eid, nbr, t, _ = survivors[i]
                new_row = rng.standard_normal(dims.key_in)
                survivors[i] = (eid, nbr, t, new_row)
                updated.append((eid, new_row))

            h, z_dev, max_v = delta_embed(st, added, expired, updated, params)
            current = survivors + added
            want, _ = kernels.temporal_attention(
                q_in, [(r, t) for (_, _, t, r) in current], 0.0, 0, params)
            dn = n_add + n_exp + n_upd
            nv = max(len(st.edge_ids), 1)
            bound = (dn / nv) * max_v * z_dev
            dev = float(np.linalg.norm(h - want))
            if dev > bound + 1e-12:
                violations += 1
            checked += 1
    print(f"\n  {checked} delta updates, {violations} bound violations")
    report(5, "delta-mode error bound", violations == 0)


# -- 6: drift bound under the adaptive policy --------------------------------------------

def test_criterion_06_drift_bound():
    dims = dims_for(1)
    cfg = RunConfig(dims=dims, batch_size=30, fanout=10, mode="delta",
                    rebuild="adaptive", gamma=0.9, delta_max=0.5, alpha=0.1,
                    nodes=300)
    params = init_params(6, dims)
    eng = IncrementalEngine(cfg, params)
    stream = generate_stream(seed=66, n=300, m=60000, attachment="uniform",
                             burstiness=2.0, d_e=4)
    batches = 0
    max_drift = 0.0
    rebuilds = 0
    resets_ok = True
    drift_ok = True
    for batch in batches_of(stream, 30):
        eng.process_batch(batch.edges)
        batches += 1
        if eng.last_report.rebuild != "none":
            rebuilds += 1
            if eng.scheduler.global_drift() != 0.0 or eng.scheduler.tau != 0:
                resets_ok = False
        if batches % 50 == 0:
            ref = eng.full_reference()
            n = ref.shape[0]
            drift = float(np.max(np.linalg.norm(eng.cache.embeddings(n) - ref, axis=1)))
            max_drift = max(max_drift, drift)
            bound = (cfg.delta_max / (1.0 - cfg.gamma)) * eng.max_value_norm_seen
            if drift > bound + 1e-9:
                drift_ok = False
    assert batches == 2000
    bound = (cfg.delta_max / (1.0 - cfg.gamma)) * eng.max_value_norm_seen
    print(f"\n  2000 batches, {rebuilds} rebuilds, max drift {max_drift:.3e} "
          f"vs bound {bound:.3e}")
    report(6, "drift bound with adaptive policy",
           drift_ok and resets_ok and rebuilds > 0)


# -- 7: staleness behavior ------------------------------------------------------------------

def test_criterion_07_staleness():
    dims = dims_for(1)
    params = init_params(7, dims)
    rng = np.random.default_rng(70)

    # B=1 batched vs sequential replay: bitwise
    cfg = RunConfig(dims=dims, batch_size=1, fanout=5, nodes=60)
    stream = generate_stream(seed=71, n=60, m=600, d_e=4)
    seq, _ = replay_sequential(stream, cfg, params)
    eng = IncrementalEngine(cfg, params)
    got = []
    for batch in batches_of(stream, 1):
        got.extend(eng.process_batch(batch.edges))
    bitwise = seq == got

    # disjoint-pair stream: zero deviation for every batch size
    pairs = [(2 * i, 2 * i + 1) for i in range(1000)]
    disjoint = []
    t = 0.0
    for _ in range(3):
        for j in rng.permutation(len(pairs)):
            u, v = pairs[j]
            disjoint.append(TemporalEdge(u, v, t, rng.standard_normal(4)))
            t += 1.0
    cfg_d = RunConfig(dims=dims, batch_size=1, fanout=5, nodes=2000)
    rep_d, _ = compare_sequential_vs_batched(disjoint, [10, 100, 1000], cfg_d, params)
    disjoint_zero = all(r.max_dev == 0.0 for r in rep_d)

    # adversarial shared-node stream: deviation non-decreasing in B
    hub = [TemporalEdge(0, 1 + i % 50, float(i), rng.standard_normal(4))
           for i in range(2000)]
    cfg_h = RunConfig(dims=dims, batch_size=1, fanout=10, nodes=51)
    rep_h, _ = compare_sequential_vs_batched(hub, [10, 100, 1000], cfg_h, params)
    devs = [r.max_dev for r in rep_h]
    monotone = devs[0] <= devs[1] <= devs[2] and devs[2] > 0

    print(f"\n  B=1 bitwise: {bitwise}; disjoint devs "
          f"{[r.max_dev for r in rep_d]}; hub devs {[f'{d:.4f}' for d in devs]}")
    report(7, "staleness behavior", bitwise and disjoint_zero and monotone)


# -- 8: adaptive vs fixed rebuilds --------------------------------------------------------------

def test_criterion_08_adaptive_vs_fixed():
    dims = dims_for(1)
    stream = generate_stream(seed=11, n=400, m=12000, attachment="uniform",
                             burstiness=3.0, d_e=4)
    adaptive_cfg = RunConfig(dims=dims, batch_size=50, fanout=10, mode="delta",
                             rebuild="adaptive", gamma=0.9, delta_max=1.5,
                             alpha=0.1, nodes=400)
    res_a = run_bench(adaptive_cfg, stream)
    gaps = np.diff([0] + res_a.rebuild_batches)
    assert len(res_a.rebuild_batches) >= 2, "need rebuilds to compare"
    worst_gap = int(gaps[1:].min()) if len(gaps) > 1 else int(gaps[0])

    fixed_cfg = adaptive_cfg.with_(rebuild="fixed", rebuild_interval=max(worst_gap, 1))
    res_f = run_bench(fixed_cfg, stream)
    ok = res_a.rebuild_count <= (2 / 3) * res_f.rebuild_count
    print(f"\n  adaptive {res_a.rebuild_count} rebuilds (worst gap {worst_gap}) "
          f"vs fixed {res_f.rebuild_count}; ratio "
          f"{res_a.rebuild_count / max(res_f.rebuild_count, 1):.2f} (need <= 0.667)")
    report(8, "adaptive vs fixed rebuilds", ok)


# -- 9: kernel oracle suite ----------------------------------------------------------------------

def test_criterion_09_kernel_oracles():
    from test_kernels import (
        oracle_attention,
        oracle_gru,
        oracle_matvec,
        oracle_sigmoid,
        oracle_time_encode,
    )
    dims = Dims(d_s=6, d_e=3, d_t=6, d_x=0, d_m=5, d_k=4, heads=2, layers=1)
    p = random_params(999, dims)
    rng = np.random.default_rng(9)
    worst = 0.0
    norm_worst = 0.0
    softmax_worst = 0.0
    for _ in range(1000):
        dt = float(rng.uniform(0, 100))
        got = kernels.time_encode(dt, p)
        worst = max(worst, float(np.max(np.abs(
            got - oracle_time_encode(dt, p.omega, dims.d_t)))))
        norm_worst = max(norm_worst, abs(float(got @ got) - 0.5))

        s1, s2 = rng.standard_normal(dims.d_s), rng.standard_normal(dims.d_s)
        feat = rng.standard_normal(dims.d_e)
        x = np.concatenate([s1, s2, feat, kernels.time_encode(dt, p)])
        want = oracle_matvec(p.w_msg_src, x, p.b_msg_src)
        got = kernels.compute_message(s1, s2, feat, dt, "source", p)
        worst = max(worst, float(np.max(np.abs(got - want))))

        msgs = [(rng.standard_normal(dims.d_m), float(i))
                for i in range(int(rng.integers(1, 5)))]
        got = kernels.aggregate_messages(msgs, "mean")
        want = [sum(m[i] for m, _ in msgs) / len(msgs) for i in range(dims.d_m)]
        worst = max(worst, float(np.max(np.abs(got - np.array(want)))))

        msg, s = rng.standard_normal(dims.d_m), rng.standard_normal(dims.d_s)
        worst = max(worst, float(np.max(np.abs(
            kernels.gru_update(msg, s, p) - oracle_gru(msg, s, p)))))

        q_in = rng.standard_normal(dims.query_in)
        rows = [rng.standard_normal(dims.key_in)
                for _ in range(int(rng.integers(0, 6)))]
        got, state = kernels.temporal_attention(
            q_in, [(r, float(i)) for i, r in enumerate(rows)], 0.0, 0, p)
        want = oracle_attention(q_in, rows, 0, p)
        worst = max(worst, float(np.max(np.abs(got - np.array(want)))))
        if rows:
            for hs in state.heads:
                softmax_worst = max(softmax_worst,
                                    abs(float(np.sum(hs.weights())) - 1.0))

        hu, hv = rng.standard_normal(dims.d), rng.standard_normal(dims.d)
        xcat = list(hu) + list(hv)
        want_p = oracle_sigmoid(sum(p.w_pred[i] * xcat[i]
                                    for i in range(2 * dims.d)) + p.b_pred)
        worst = max(worst, abs(kernels.predict_link(hu, hv, p) - want_p))

    print(f"\n  worst kernel-vs-oracle dev {worst:.3e} (<=1e-10); "
          f"phi-norm dev {norm_worst:.3e}, softmax dev {softmax_worst:.3e} (<=1e-12)")
    report(9, "kernel oracle suite",
           worst <= 1e-10 and norm_worst <= 1e-12 and softmax_worst <= 1e-12)


# -- 10: monotone ablation trends ------------------------------------------------------------------

def test_criterion_10_ablation_trends():
    dims = dims_for(1)
    stream = generate_stream(seed=101, n=2000, m=10000, attachment="preferential", d_e=4)

    ratios_b = []
    for B in (200, 400, 600, 800, 1000):
        cfg = RunConfig(dims=dims, batch_size=B, fanout=10, nodes=2000)
        ratios_b.append(run_bench(cfg, stream).mean_affected_ratio)

    ratios_l = []
    for L in (5, 10, 20, 30):
        cfg = RunConfig(dims=dims, batch_size=200, fanout=L, nodes=2000)
        ratios_l.append(run_bench(cfg, stream).mean_affected_ratio)

    mono_b = all(a <= b + 1e-12 for a, b in zip(ratios_b, ratios_b[1:]))
    mono_l = all(a <= b + 1e-12 for a, b in zip(ratios_l, ratios_l[1:]))
    print(f"\n  affected ratio vs B: {[f'{r:.3f}' for r in ratios_b]}; "
          f"vs L: {[f'{r:.3f}' for r in ratios_l]}")
    report(10, "monotone ablation trends", mono_b and mono_l)
