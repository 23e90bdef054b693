import numpy as np

from streamtgn.batcher import Batch, batches_of, compare_sequential_vs_batched, form_batch
from streamtgn.config import Dims, RunConfig
from streamtgn.graph_store import EdgeQueue, TemporalEdge
from streamtgn.streamio import generate_stream

from conftest import random_params

DIMS = Dims(d_s=6, d_e=3, d_t=6, d_m=5, d_k=4, heads=2, layers=1)


def q_with(edges):
    q = EdgeQueue(64, d_e=0)
    for e in edges:
        q.enqueue(e)
    return q


def e(src, dst, t):
    return TemporalEdge(src, dst, t, np.zeros(0))


class TestFormBatch:
    def test_logical_timestamp_and_staleness(self):
        b = form_batch(q_with([e(0, 1, 1.0), e(1, 2, 2.0), e(2, 3, 3.0)]), 3)
        assert b.t_batch == 3.0
        assert b.s_max == 2.0

    def test_single_edge_zero_staleness(self):
        b = form_batch(q_with([e(0, 1, 7.0)]), 4)
        assert b.s_max == 0.0

    def test_oversized_batch_drains_queue(self):
        edges = [e(0, 1, float(i)) for i in range(10)]
        q = q_with(edges)
        b = form_batch(q, 600)
        assert b.edges == edges
        assert q.occupancy == 0

    def test_empty_queue_gives_none(self):
        assert form_batch(q_with([]), 4) is None

    def test_batches_preserve_arrival_order(self):
        edges = [e(i % 3, (i + 1) % 3, float(i)) for i in range(10)]
        got = [b.edges for b in batches_of(edges, 4)]
        assert [len(b) for b in got] == [4, 4, 2]
        assert sum(got, []) == edges


class TestSequentialVsBatched:
    def test_b1_is_bitwise_zero(self):
        params = random_params(1, DIMS)
        cfg = RunConfig(dims=DIMS, batch_size=1, fanout=4, nodes=20)
        stream = generate_stream(3, 20, 120, d_e=3)
        reports, _ = compare_sequential_vs_batched(stream, [1], cfg, params)
        assert reports[0].max_dev == 0.0

    def test_disjoint_pairs_zero_for_all_batch_sizes(self):
        # recurring pairs, rounds aligned with every tested batch size
        params = random_params(2, DIMS)
        rng = np.random.default_rng(0)
        pairs = [(2 * i, 2 * i + 1) for i in range(60)]
        stream = []
        t = 0.0
        for _ in range(4):
            for j in rng.permutation(len(pairs)):
                u, v = pairs[j]
                stream.append(TemporalEdge(u, v, t, rng.standard_normal(3)))
                t += 1.0
        cfg = RunConfig(dims=DIMS, batch_size=1, fanout=4, nodes=120)
        reports, _ = compare_sequential_vs_batched(stream, [5, 12, 60], cfg, params)
        assert all(r.max_dev == 0.0 for r in reports)

    def test_hub_stream_deviation_grows(self):
        params = random_params(3, DIMS)
        rng = np.random.default_rng(1)
        stream = [TemporalEdge(0, 1 + i % 20, float(i), rng.standard_normal(3))
                  for i in range(600)]
        cfg = RunConfig(dims=DIMS, batch_size=1, fanout=6, nodes=21)
        reports, slope = compare_sequential_vs_batched(stream, [5, 30, 200], cfg, params)
        devs = [r.max_dev for r in reports]
        assert devs[0] <= devs[1] <= devs[2]
        assert devs[2] > 0.0
        assert slope >= 0.0
