#!/usr/bin/env python3
"""Repeat-contraction speedup from constant-intermediate caching.

Sweeps the constant-input fraction and the cache budget on a synthetic
matrix-chain network and reports executed-flop ratios, the analog of
utilized/recommended cache accounting.
"""

import argparse

import numpy as np

from duetsim.tn import (
    OptimizerConfig,
    Tensor,
    TensorNetwork,
    WorkspaceArena,
    contract,
    find_path,
    make_plan,
)


def chain_network(num_tensors, rng):
    labels = [f"b{i}" for i in range(num_tensors - 1)]
    tensors = []
    for i in range(num_tensors):
        lbls = tuple(
            l
            for l in (labels[i - 1] if i > 0 else None, labels[i] if i < num_tensors - 1 else None)
            if l
        )
        data = rng.standard_normal(tuple(2 for _ in lbls)) / np.sqrt(2) + 0j
        tensors.append(Tensor(lbls, data))
    return TensorNetwork(tensors, (), {l: 2 for l in labels})


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tensors", type=int, default=242)
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--fractions", default="0.8,0.85,0.9")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print("constant_fraction,cache_budget,used_bytes,recommended_bytes,flop_ratio,recomputes")
    for frac in (float(f) for f in args.fractions.split(",")):
        rng = np.random.default_rng(args.seed)
        tn = chain_network(args.tensors, rng)
        tn.mark_constant(range(int(args.tensors * frac)))
        plan = make_plan(tn, find_path(tn, OptimizerConfig(num_hyper_samples=2, seed=args.seed)))
        recommended = plan.recommended_cache_bytes()
        for budget in (recommended + (1 << 14), recommended // 20):
            arena = WorkspaceArena(cache_limit=budget)
            contract(plan, arena)
            first = arena.stats.flops_executed
            for _ in range(args.reps - 1):
                contract(plan, arena)
            repeat = (arena.stats.flops_executed - first) / (args.reps - 1)
            stats = arena.cache_stats()
            ratio = first / max(repeat, 1e-9)
            print(
                f"{frac},{budget},{stats['used_bytes']},{stats['recommended_bytes']},"
                f"{ratio:.2f},{stats['recomputes']}"
            )


if __name__ == "__main__":
    main()
