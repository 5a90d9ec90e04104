"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--docs 5000] [--repeat 5]

Each kernel is run on identical inputs by both implementations; outputs are
checked for equality before timings are reported.
"""
from __future__ import annotations

import argparse
import random
import string
import timeit

import numpy as np

from mixdebate import kernels


def random_texts(n: int, rng: random.Random) -> list[str]:
    words = ["".join(rng.choice(string.ascii_lowercase) for _ in range(rng.randint(2, 10))) for _ in range(400)]
    return [" ".join(rng.choice(words) for _ in range(rng.randint(3, 120))) for _ in range(n)]


def best(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--docs", type=int, default=5000)
    ap.add_argument("--dim", type=int, default=256)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if kernels.compiled_impl is None:
        raise SystemExit("compiled extension not available; build with `pip install -e . --no-build-isolation`")
    impls = {"compiled": kernels.compiled_impl, "python": kernels.python_impl}
    rng = random.Random(args.seed)
    texts = random_texts(args.docs, rng)
    query = texts[0]

    py, cy = impls["python"], impls["compiled"]
    matrix = py.trigram_count_matrix(texts, args.dim)
    q = py.trigram_counts(query, args.dim)
    scores = py.count_cosine(q, matrix)
    assert np.array_equal(matrix, cy.trigram_count_matrix(texts, args.dim))
    assert np.array_equal(scores, cy.count_cosine(q, matrix))
    assert all(np.array_equal(a, b) for a, b in zip(py.top_k(scores, args.k), cy.top_k(scores, args.k)))

    cases = {
        "trigram_count_matrix": lambda m: m.trigram_count_matrix(texts, args.dim),
        "count_cosine": lambda m: m.count_cosine(q, matrix),
        "top_k": lambda m: m.top_k(scores, args.k),
    }
    chars = sum(len(t) for t in texts)
    print(f"{args.docs} texts, {chars} characters, dim={args.dim}, k={args.k}")
    print(f"{'kernel':<22}{'python ms':>12}{'compiled ms':>14}{'speedup':>10}")
    for name, run in cases.items():
        t_py = best(lambda: run(py), args.repeat)
        t_cy = best(lambda: run(cy), args.repeat)
        print(f"{name:<22}{t_py * 1e3:>12.2f}{t_cy * 1e3:>14.2f}{t_py / t_cy:>9.1f}x")


if __name__ == "__main__":
    main()
