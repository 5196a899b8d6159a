"""Show that the numpy-backed index and the pure-Python full scan agree
hit for hit, then race them on a few thousand stored vectors.

    python3 demos/search_exactness.py
"""

import time

import numpy as np

from paperchat.embed import EmbeddingVector
from paperchat.vindex import VectorIndex, add_vectors, brute_force_topk, search_topk


def unit_rows(rng, count, dimension):
    rows = rng.standard_normal((count, dimension))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def main() -> None:
    rng = np.random.default_rng(42)
    stored = unit_rows(rng, 4000, 64)
    entries = [
        (f"chunk{i:05d}", EmbeddingVector(tuple(map(float, row))))
        for i, row in enumerate(stored)
    ]
    index = VectorIndex(64)
    add_vectors(index, entries)

    queries = [
        EmbeddingVector(tuple(map(float, row))) for row in unit_rows(rng, 20, 64)
    ]

    worst = 0.0
    t0 = time.perf_counter()
    fast = [search_topk(index, q, 10) for q in queries]
    t_fast = time.perf_counter() - t0

    t0 = time.perf_counter()
    slow = [brute_force_topk(entries, q, 10) for q in queries]
    t_slow = time.perf_counter() - t0

    for got, ref in zip(fast, slow):
        assert [h.chunk_id for h in got] == [h.chunk_id for h in ref]
        worst = max(worst, max(abs(g.score - r.score) for g, r in zip(got, ref)))

    print(f"20 queries over {len(entries)} stored vectors, k=10")
    print(f"  indexed search: {t_fast * 1000:7.2f} ms")
    print(f"  full scan:      {t_slow * 1000:7.2f} ms")
    print(f"  identical ids, worst score deviation {worst:.2e}")


if __name__ == "__main__":
    main()
