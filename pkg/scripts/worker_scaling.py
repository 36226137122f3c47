#!/usr/bin/env python3
"""Wall-time scaling of sliced contraction across worker threads.

BLAS pools are pinned to one thread so measured scaling comes only from the
slice-level workers.
"""

import argparse
import os
import time

import numpy as np

from duetsim.tn import (
    OptimizerResult,
    Tensor,
    TensorNetwork,
    autotune,
    contract_distributed,
    greedy_path,
    make_plan,
    to_ssa_pairs,
    tree_flops,
)


def build_network(dim, slice_extent, rng):
    def t3():
        return rng.standard_normal((dim, dim, slice_extent)) + 1j * rng.standard_normal(
            (dim, dim, slice_extent)
        )

    ext = {c: dim for c in "abcde"}
    ext.update({"s": slice_extent, "u": slice_extent})
    return TensorNetwork(
        [
            Tensor(("a", "b", "s"), t3()),
            Tensor(("b", "c", "s"), t3()),
            Tensor(("c", "d", "u"), t3()),
            Tensor(("d", "e", "u"), t3()),
        ],
        ("a", "e"),
        ext,
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dim", type=int, default=288)
    ap.add_argument("--slice-extent", type=int, default=8)
    ap.add_argument("--workers", default="1,2,4,8")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    tn = build_network(args.dim, args.slice_extent, rng)
    root = greedy_path(tn)
    sliced = {"s": args.slice_extent, "u": args.slice_extent}
    res = OptimizerResult(
        tree=root,
        ssa_pairs=to_ssa_pairs(root, tn.num_tensors),
        total_flops=tree_flops(root, tn.extents, set(sliced)),
        unsliced_flops=tree_flops(root, tn.extents),
        slices=sliced,
        overhead_factor=1.0,
    )
    plan = make_plan(tn, res)
    autotune(plan)

    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        from contextlib import nullcontext as threadpool_limits

    print(f"# cores={os.cpu_count()} slices={plan.num_slices}")
    print("workers,seconds,speedup")
    base = None
    with threadpool_limits(1):
        for w in (int(x) for x in args.workers.split(",")):
            best = None
            for _ in range(3):
                t0 = time.perf_counter()
                contract_distributed(plan, workers=w)
                dt = time.perf_counter() - t0
                best = dt if best is None else min(best, dt)
            base = base or best
            print(f"{w},{best:.3f},{base / best:.2f}")


if __name__ == "__main__":
    main()
