"""Benchmark the oracle tree-walk kernels: compiled extension vs pure Python.

Usage: python benchmarks/bench_oracle.py [--repeats N]

Builds progressively denser abstractions and times the two walk kernels on
identical inputs; results are checked for bit-identity while timing.
"""
import argparse
import time

import numpy as np

from renego.env import GameSpec, Variant
from renego.oracle import (
    AbstractionTables,
    FiniteAbstraction,
    PolicyDescriptor,
    PreparedPolicy,
    random_table_policy,
)
from renego.oracle import core


def build_case(name, horizon, n_prices, n_msgs, support, delta_hash, seed):
    spec = GameSpec(
        variant=Variant.BUYER_SELLER, horizon=horizon, starter=1,
        production_cost=0.0, budget=float(n_prices - 1),
        price_grid=tuple(float(q) for q in range(n_prices)),
        message_alphabet=tuple("abcd"[:n_msgs]),
    )
    tables = AbstractionTables(FiniteAbstraction(spec, node_cap=100_000_000),
                               normalized=True)
    rng = np.random.default_rng(seed)
    p1 = PreparedPolicy(tables, PolicyDescriptor(
        random_table_policy(tables, rng, support)))
    true_table = random_table_policy(tables, rng, support)
    noise = random_table_policy(tables, rng, 2)
    model = PolicyDescriptor(0.8 * true_table + 0.2 * noise,
                             delta=delta_hash, hash_seed=seed, hash_k=2)
    return name, tables, p1, PreparedPolicy(tables, PolicyDescriptor(true_table)), \
        PreparedPolicy(tables, model)


def time_fn(fn, repeats):
    best = float("inf")
    out = None
    for _ in range(repeats):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if not core.HAVE_COMPILED:
        print("compiled kernel not built; run `pip install -e . --no-build-isolation`")
        return

    pure = core.use_pure()
    compiled = core._treecore
    cases = [
        build_case("small  (H=4, 4 prices, 2 msgs)", 4, 4, 2, 3, 0.1, 1),
        build_case("medium (H=6, 5 prices, 2 msgs)", 6, 5, 2, 4, 0.15, 2),
        build_case("dense  (H=6, 6 prices, 3 msgs)", 6, 6, 3, 4, 0.2, 3),
    ]
    cap = 100_000_000
    print(f"{'case':38s} {'walk':8s} {'nodes':>9s} {'pure':>9s} {'compiled':>9s} "
          f"{'speedup':>8s}")
    for name, tables, p1, p_true, p_model in cases:
        for walk_name, run in (
            ("theorem", lambda k: k.theorem_walk(tables, p1, p_true, p_model, cap)),
            ("br", lambda k: k.br_walk(tables, p_model, p_true, cap)),
        ):
            tp, rp = time_fn(lambda: run(pure), args.repeats)
            tc, rc = time_fn(lambda: run(compiled), args.repeats)
            nodes = rp[4]
            assert rp[0] == rc[0] and rp[1] == rc[1] and rp[4] == rc[4], \
                "kernel results diverged"
            print(f"{name:38s} {walk_name:8s} {nodes:9d} {tp:8.3f}s {tc:8.3f}s "
                  f"{tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
