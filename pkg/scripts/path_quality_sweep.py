#!/usr/bin/env python3
"""Path quality vs hyper-optimizer samples on RQC-like networks.

Prints one CSV row per (depth, samples): the geometric-mean contraction cost
over a batch of random brickwork circuits, normalized by the greedy baseline.
"""

import argparse
import math

import numpy as np

from duetsim import gates as G
from duetsim.circuits import Circuit, GateOp
from duetsim.convert import ConversionTarget, circuit_to_network
from duetsim.tn import OptimizerConfig, find_path, greedy_path, tree_flops


def brickwork(n, depth, rng):
    ops = []
    for layer in range(depth):
        for q in range(layer % 2, n - 1, 2):
            ops.append(GateOp("unitary", (), (q, q + 1), (), G.random_unitary(4, rng)))
    return Circuit(n, ops)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--depths", default="4,8,12")
    ap.add_argument("--samples", default="1,4,16,64")
    ap.add_argument("--batch", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print("depth,samples,geomean_cost,vs_greedy")
    for depth in (int(d) for d in args.depths.split(",")):
        nets = []
        for b in range(args.batch):
            rng = np.random.default_rng((args.seed, depth, b))
            circuit = brickwork(args.n, depth, rng)
            nets.append(
                circuit_to_network(
                    circuit, ConversionTarget("amplitude", bitstring="0" * args.n)
                )
            )
        greedy_costs = [tree_flops(greedy_path(tn), tn.extents) for tn in nets]
        for k in (int(s) for s in args.samples.split(",")):
            costs = [
                find_path(tn, OptimizerConfig(num_hyper_samples=k, seed=args.seed)).total_flops
                for tn in nets
            ]
            geo = math.exp(sum(math.log(c) for c in costs) / len(costs))
            rel = math.exp(
                sum(math.log(c / g) for c, g in zip(costs, greedy_costs)) / len(costs)
            )
            print(f"{depth},{k},{geo:.4g},{rel:.4f}")


if __name__ == "__main__":
    main()
