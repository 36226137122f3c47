"""Contraction-path optimization.

The hyper-optimizer draws pathfinder configurations (greedy weights and
jitter, partition arity and imbalance, per-sample seeds), builds one tree
per sample, applies slice selection until the memory budget holds, and keeps
the cheapest sliced path.  The partition engine bisects the tensor hypergraph
recursively with Fiduccia-Mattheyses-style refinement, solves sub-networks
below a threshold exactly by subset dynamic programming, and re-optimizes the
hottest subtrees ("bubbling") with the same DP over bounded frontiers.

Networks are first simplified: pairwise contractions whose result is no
larger than the larger operand (scalar absorptions, full overlaps) run
eagerly and are prepended to every tree; modes dangling from a single tensor
are summed implicitly by the keep rule.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from ..core import InvalidArgumentError
from .model import TensorNetwork, Tensor, contract_pair
from .tree import (
    TreeBuilder,
    TreeNode,
    node_flops,
    node_size,
    to_ssa_pairs,
    tree_flops,
)

DP_THRESHOLD = 12


class InfeasibleContractionError(RuntimeError):
    """Memory budget cannot be met even with maximal slicing."""


@dataclass
class OptimizerConfig:
    num_hyper_samples: int = 16
    partition_arity_range: tuple[int, int] = (2, 4)
    imbalance_range: tuple[float, float] = (0.05, 0.4)
    greedy_weight_range: tuple[float, float] = (0.5, 1.5)
    memory_budget: int | None = None  # bytes of the largest per-slice intermediate
    slicing_overhead_tolerance: float = 16.0
    seed: int = 0
    dp_threshold: int = DP_THRESHOLD
    itemsize: int = 16
    workers: int = 1

    def __post_init__(self):
        if self.num_hyper_samples < 1:
            raise InvalidArgumentError("num_hyper_samples must be >= 1")


@dataclass
class OptimizerResult:
    tree: TreeNode
    ssa_pairs: list[tuple[int, int]]
    total_flops: int
    unsliced_flops: int
    slices: dict[str, int]
    overhead_factor: float

    @property
    def num_slices(self) -> int:
        c = 1
        for e in self.slices.values():
            c *= e
        return c

    def to_json_dict(self) -> dict:
        return {
            "pairs": [list(p) for p in self.ssa_pairs],
            "sliced": sorted(self.slices),
            "flops": int(self.total_flops),
            "overhead": float(self.overhead_factor),
        }


# ---------------------------------------------------------------------------
# simplification


def _sizes(labels, extents) -> int:
    s = 1
    for l in labels:
        s *= extents[l]
    return s


def _simplify_terms(terms, output, extents):
    """Eager cheap contractions.  Returns (alive ssa ids, labels per ssa id,
    prelude pair list in ssa numbering, total label counts)."""
    labels_of: dict[int, frozenset[str]] = {i: frozenset(t) for i, t in enumerate(terms)}
    alive = set(labels_of)
    counts: dict[str, int] = {}
    for t in terms:
        for l in t:
            counts[l] = counts.get(l, 0) + 1
    out_set = set(output)
    prelude: list[tuple[int, int]] = []
    next_id = len(terms)

    def drop_dangling(i: int) -> None:
        # modes on one tensor only and not in the output are summed implicitly
        kept = frozenset(l for l in labels_of[i] if counts[l] > 1 or l in out_set)
        for l in labels_of[i] - kept:
            counts[l] -= 1
        labels_of[i] = kept

    for i in list(alive):
        drop_dangling(i)

    changed = True
    while changed and len(alive) > 1:
        changed = False
        by_label: dict[str, list[int]] = {}
        for i in sorted(alive):
            for l in labels_of[i]:
                by_label.setdefault(l, []).append(i)
        scalars = [i for i in sorted(alive) if not labels_of[i]]
        seen: set[tuple[int, int]] = set()
        candidates: list[tuple[int, int]] = []
        for members in by_label.values():
            for x in range(len(members)):
                for y in range(x + 1, len(members)):
                    pair = (members[x], members[y])
                    if pair not in seen:
                        seen.add(pair)
                        candidates.append(pair)
        if scalars:
            others = sorted(alive)
            for s in scalars:
                for o in others:
                    if o != s:
                        pair = (min(s, o), max(s, o))
                        if pair not in seen:
                            seen.add(pair)
                            candidates.append(pair)
                        break
        for i, j in sorted(candidates):
            if i not in alive or j not in alive:
                continue
            la, lb = labels_of[i], labels_of[j]
            union = la | lb
            kept = frozenset(
                l
                for l in union
                if l in out_set or counts[l] - (l in la) - (l in lb) > 0
            )
            if _sizes(kept, extents) <= max(_sizes(la, extents), _sizes(lb, extents)):
                for l in union - kept:
                    counts[l] = 0
                for l in kept:
                    counts[l] -= (l in la) + (l in lb) - 1
                labels_of[next_id] = kept
                alive.discard(i)
                alive.discard(j)
                alive.add(next_id)
                prelude.append((i, j))
                next_id += 1
                changed = True
        if changed:
            for i in sorted(alive):
                drop_dangling(i)
    return sorted(alive), labels_of, prelude


def simplify(tn: TensorNetwork) -> tuple[TensorNetwork, list[tuple[int, int]]]:
    """Public simplification: returns the reduced network (data contracted
    when bound) and the recorded pre-contractions in ssa numbering."""
    from .model import project_to_output

    alive, labels_of, prelude = _simplify_terms(
        [t.labels for t in tn.tensors], tn.output_modes, tn.extents
    )
    n0 = len(tn.tensors)
    all_bound = all(t.data is not None for t in tn.tensors)
    work: dict[int, Tensor] = {i: t for i, t in enumerate(tn.tensors)}
    const: dict[int, bool] = {i: t.constant for i, t in enumerate(tn.tensors)}
    for k, (i, j) in enumerate(prelude):
        new_id = n0 + k
        keep = labels_of[new_id]
        if all_bound:
            work[new_id] = contract_pair(work[i], work[j], keep, tn.extents)
        else:
            work[new_id] = Tensor(tuple(sorted(keep)), None)
        const[new_id] = const[i] and const[j]
    tensors = []
    for i in alive:
        lbls = tuple(sorted(labels_of[i]))
        t = work[i]
        data = t.data
        if data is not None and t.labels != lbls:
            data = project_to_output(t, lbls, tn.extents).data
        tensors.append(Tensor(lbls, data, const.get(i, False)))
    extents = {l: tn.extents[l] for t in tensors for l in t.labels}
    for l in tn.output_modes:
        extents.setdefault(l, tn.extents[l])
    reduced = TensorNetwork(tensors, tn.output_modes, extents)
    return reduced, prelude


# ---------------------------------------------------------------------------
# greedy engine


def _greedy_pairs(labels_by_id, ids, output, extents, weight, rng, temperature):
    """SSA greedy contraction over the given ids.  Returns (pairs, final id).

    Candidates are ranked by (pairwise flops, size(result) - weight *
    (size(a) + size(b)), lower id pair); the cheapest contraction wins and the
    size-removed balance breaks ties.  ``temperature`` adds seeded gumbel
    jitter on the flops key for hyper-sampling diversity.
    """
    labels_of = {i: frozenset(labels_by_id[i]) for i in ids}
    counts: dict[str, int] = {}
    for i in ids:
        for l in labels_of[i]:
            counts[l] = counts.get(l, 0) + 1
    out_set = set(output)
    alive = set(ids)
    pairs: list[tuple[int, int]] = []
    next_id = max(ids) + 1 if ids else 0
    sizes = {i: _sizes(labels_of[i], extents) for i in ids}

    def kept_of(i, j):
        la, lb = labels_of[i], labels_of[j]
        return frozenset(
            l
            for l in la | lb
            if l in out_set or counts[l] - (l in la) - (l in lb) > 0
        )

    def score_entry(i, j):
        # cheapest pairwise contraction first; the size-removed balance
        # size(result) - w*(size(a)+size(b)) breaks ties.  Gumbel jitter on
        # the primary key diversifies hyper-samples.
        if j < i:
            i, j = j, i
        kept = kept_of(i, j)
        size_r = _sizes(kept, extents)
        balance = float(size_r - weight * (sizes[i] + sizes[j]))
        flops_key = float(_sizes(labels_of[i] | labels_of[j], extents))
        if temperature:
            flops_key *= math.exp(rng.gumbel(0.0, temperature))
        return (flops_key, balance, i, j)

    heap: list[tuple[float, int, int, int]] = []
    by_label: dict[str, set[int]] = {}
    for i in ids:
        for l in labels_of[i]:
            by_label.setdefault(l, set()).add(i)
    seeded: set[tuple[int, int]] = set()
    for members in by_label.values():
        ms = sorted(members)
        for x in range(len(ms)):
            for y in range(x + 1, len(ms)):
                if (ms[x], ms[y]) not in seeded:
                    seeded.add((ms[x], ms[y]))
                    heapq.heappush(heap, score_entry(ms[x], ms[y]))

    def contract(i, j):
        nonlocal next_id
        kept = kept_of(i, j)
        for l in (labels_of[i] | labels_of[j]) - kept:
            counts[l] = 0
        for l in kept:
            counts[l] -= (l in labels_of[i]) + (l in labels_of[j]) - 1
        for l in labels_of[i]:
            by_label.get(l, set()).discard(i)
        for l in labels_of[j]:
            by_label.get(l, set()).discard(j)
        new_id = next_id
        next_id += 1
        labels_of[new_id] = kept
        sizes[new_id] = _sizes(kept, extents)
        alive.discard(i)
        alive.discard(j)
        alive.add(new_id)
        pairs.append((i, j))
        neighbours = set()
        for l in kept:
            by_label.setdefault(l, set()).add(new_id)
            neighbours |= by_label[l]
        neighbours.discard(new_id)
        for o in sorted(neighbours):
            heapq.heappush(heap, score_entry(o, new_id))
        return new_id

    while len(alive) > 1:
        found = False
        while heap:
            _, _, i, j = heapq.heappop(heap)
            if i in alive and j in alive:
                contract(i, j)
                found = True
                break
        if not found:
            # disconnected remainder: outer products, smallest first
            rest = sorted(alive, key=lambda i: (sizes[i], i))
            contract(rest[0], rest[1])
    return pairs, next(iter(alive))


def greedy_path(
    tn: TensorNetwork,
    cost_weight: float = 1.0,
    seed: int = 0,
    temperature: float = 0.0,
) -> TreeNode:
    """Greedy tree over the network as given (no simplification)."""
    builder = TreeBuilder([t.labels for t in tn.tensors], tn.output_modes, tn.extents)
    if tn.num_tensors == 1:
        return builder.leaf(0)
    rng = np.random.default_rng(seed)
    pairs, _ = _greedy_pairs(
        {i: t.labels for i, t in enumerate(tn.tensors)},
        list(range(tn.num_tensors)),
        tn.output_modes,
        tn.extents,
        cost_weight,
        rng,
        temperature,
    )
    return builder.from_ssa_pairs(pairs)


# ---------------------------------------------------------------------------
# subset dynamic programming (exact for small networks)


def _dp_pairs(labels_by_id, ids, virtual_output, extents):
    """Optimal-flops contraction of the given ids by subset DP.

    Returns (pairs over ssa ids, optimal multiply-add count).  The
    ``virtual_output`` set lists labels that must survive (shared with the
    rest of the network or part of the real output).  Intermediates are
    numbered from max(ids) + 1 in pair order.
    """
    n = len(ids)
    if n > 16:
        raise InvalidArgumentError("subset DP limited to 16 tensors")
    label_list = sorted({l for i in ids for l in labels_by_id[i]})
    lid = {l: k for k, l in enumerate(label_list)}
    ext = [extents[l] for l in label_list]
    term_mask = []
    for i in ids:
        m = 0
        for l in labels_by_id[i]:
            m |= 1 << lid[l]
        term_mask.append(m)
    out_mask = 0
    for l in virtual_output:
        if l in lid:
            out_mask |= 1 << lid[l]

    full = (1 << n) - 1
    union_of = [0] * (full + 1)
    for s in range(1, full + 1):
        low = s & (-s)
        union_of[s] = union_of[s ^ low] | term_mask[low.bit_length() - 1]

    size_cache: dict[int, int] = {}

    def size_of(mask):
        v = size_cache.get(mask)
        if v is None:
            v = 1
            m, k = mask, 0
            while m:
                if m & 1:
                    v *= ext[k]
                m >>= 1
                k += 1
            size_cache[mask] = v
        return v

    kept_of = [0] * (full + 1)
    for s in range(1, full + 1):
        outside = union_of[full ^ s] | out_mask
        kept_of[s] = union_of[s] & outside

    best_cost = [0] * (full + 1)
    best_split = [0] * (full + 1)
    order = sorted(range(1, full + 1), key=lambda s: bin(s).count("1"))
    for s in order:
        if s & (s - 1) == 0:
            continue  # singleton
        best = None
        arg = 0
        sub = (s - 1) & s
        while sub:
            rest = s ^ sub
            if sub < rest:
                cost = (
                    best_cost[sub]
                    + best_cost[rest]
                    + size_of(kept_of[sub] | kept_of[rest])
                )
                if best is None or cost < best:
                    best, arg = cost, sub
            sub = (sub - 1) & s
        best_cost[s] = best
        best_split[s] = arg

    pairs: list[tuple[int, int]] = []
    next_id = [max(ids) + 1]

    def emit(s) -> int:
        if s & (s - 1) == 0:
            return ids[s.bit_length() - 1]
        a = emit(best_split[s])
        b = emit(s ^ best_split[s])
        pairs.append((a, b))
        new_id = next_id[0]
        next_id[0] += 1
        return new_id

    emit(full)
    return pairs, best_cost[full]


# ---------------------------------------------------------------------------
# recursive hypergraph partitioning with FM refinement


def _cut_weight(part_of, edge_members, weights):
    cut = 0.0
    for l, members in edge_members.items():
        sides = {part_of[v] for v in members}
        if len(sides) > 1:
            cut += weights[l]
    return cut


def _fm_bisect(vertices, labels_by_id, extents, imbalance, rng, runs=2, passes=6):
    """Balanced bisection of a tensor hypergraph minimizing cut log-weight."""
    verts = list(vertices)
    nv = len(verts)
    edge_members: dict[str, list[int]] = {}
    for v in verts:
        for l in labels_by_id[v]:
            edge_members.setdefault(l, []).append(v)
    weights = {l: math.log2(extents[l]) for l in edge_members}
    max_side = max(1, math.ceil(nv / 2 * (1 + imbalance)))
    neighbours: dict[int, set[int]] = {v: set() for v in verts}
    for members in edge_members.values():
        for u in members:
            neighbours[u].update(members)

    def gain_of(v, part_of):
        src = part_of[v]
        gain = 0.0
        for l in labels_by_id[v]:
            members = edge_members[l]
            same = sum(1 for u in members if part_of[u] == src)
            if len(members) - same == 0:
                gain -= weights[l]  # move would cut this edge
            elif same == 1:
                gain += weights[l]  # move uncuts it
        return gain

    best_parts = None
    best_cut = None
    for _ in range(max(1, runs)):
        perm = rng.permutation(nv)
        part_of = {verts[perm[k]]: int(k < nv // 2) for k in range(nv)}
        for _ in range(passes):
            locked: set[int] = set()
            trail: list[tuple[int, float]] = []
            cur_cut = _cut_weight(part_of, edge_members, weights)
            best_prefix, best_prefix_cut = 0, cur_cut
            counts = {0: sum(1 for v in verts if part_of[v] == 0)}
            counts[1] = nv - counts[0]
            gains = {v: gain_of(v, part_of) for v in verts}
            while len(locked) < nv:
                move, gain_best = None, None
                for v in verts:
                    if v in locked or counts[1 - part_of[v]] + 1 > max_side:
                        continue
                    if gain_best is None or gains[v] > gain_best:
                        gain_best, move = gains[v], v
                if move is None:
                    break
                counts[part_of[move]] -= 1
                counts[1 - part_of[move]] += 1
                part_of[move] = 1 - part_of[move]
                locked.add(move)
                cur_cut -= gain_best
                trail.append((move, cur_cut))
                if cur_cut < best_prefix_cut:
                    best_prefix, best_prefix_cut = len(trail), cur_cut
                for u in neighbours[move]:
                    if u not in locked:
                        gains[u] = gain_of(u, part_of)
            for v, _ in trail[best_prefix:]:
                counts[part_of[v]] -= 1
                counts[1 - part_of[v]] += 1
                part_of[v] = 1 - part_of[v]  # roll back past the best prefix
            if best_prefix == 0:
                break
        cut = _cut_weight(part_of, edge_members, weights)
        if best_cut is None or cut < best_cut:
            best_cut = cut
            best_parts = dict(part_of)
    a = [v for v in verts if best_parts[v] == 0]
    b = [v for v in verts if best_parts[v] == 1]
    if not a or not b:  # degenerate balance; force a split
        mid = max(1, nv // 2)
        a, b = verts[:mid], verts[mid:]
    return a, b


def _partition_pairs(labels_by_id, ids, output, extents, total_counts, arity, imbalance, rng, dp_threshold):
    """Recursive partitioning.  Returns (pairs, root ssa id)."""
    out_set = set(output)
    next_id = [max(labels_by_id) + 1]
    labels_work = dict(labels_by_id)
    # leaf-level label multiplicities per ssa id, so keep rules for part
    # roots match the global tree semantics
    counts_work: dict[int, dict[str, int]] = {
        i: {l: 1 for l in labels_work[i]} for i in labels_work
    }

    def virtual_output(members):
        inside: dict[str, int] = {}
        for i in members:
            for l, c in counts_work[i].items():
                inside[l] = inside.get(l, 0) + c
        return {
            l
            for i in members
            for l in labels_work[i]
            if l in out_set or total_counts[l] - inside[l] > 0
        }

    def solve(members) -> int:
        if len(members) == 1:
            return members[0]
        if len(members) <= dp_threshold:
            vout = virtual_output(members)
            pairs, _ = _dp_pairs(labels_work, members, vout, extents)
            return replay(pairs, members, vout)
        nparts = min(arity, len(members))
        parts = [list(members)]
        while len(parts) < nparts:
            parts.sort(key=len, reverse=True)
            big = parts.pop(0)
            if len(big) < 2:
                parts.append(big)
                break
            a, b = _fm_bisect(big, labels_work, extents, imbalance, rng)
            parts.extend([a, b])
        roots = [solve(p) for p in parts if p]
        if len(roots) == 1:
            return roots[0]
        vout = virtual_output(roots)
        pairs, _ = _dp_pairs(labels_work, roots, vout, extents)
        return replay(pairs, roots, vout)

    all_pairs: list[tuple[int, int]] = []

    def replay(pairs, members, vout) -> int:
        """Renumber DP-local intermediate ids into the global ssa space and
        record the pairs, updating label bookkeeping."""
        counts: dict[str, int] = {}
        for i in members:
            for l in labels_work[i]:
                counts[l] = counts.get(l, 0) + 1
        base = max(members) + 1  # _dp_pairs numbers intermediates from here
        remap: dict[int, int] = {}
        last = members[0]
        for k, (a, b) in enumerate(pairs):
            ga = remap[a] if a >= base else a
            gb = remap[b] if b >= base else b
            la, lb = labels_work[ga], labels_work[gb]
            kept = frozenset(
                l
                for l in la | lb
                if l in vout or counts[l] - (l in la) - (l in lb) > 0
            )
            for l in kept:
                counts[l] -= (l in la) + (l in lb) - 1
            for l in (la | lb) - kept:
                counts[l] = 0
            new_id = next_id[0]
            next_id[0] += 1
            remap[base + k] = new_id
            labels_work[new_id] = kept
            merged = dict(counts_work[ga])
            for l, c in counts_work[gb].items():
                merged[l] = merged.get(l, 0) + c
            counts_work[new_id] = merged
            all_pairs.append((ga, gb))
            last = new_id
        return last

    root = solve(list(ids))
    return all_pairs, root


def partition_path(
    tn: TensorNetwork,
    arity: int = 2,
    imbalance: float = 0.1,
    seed: int = 0,
    dp_threshold: int = DP_THRESHOLD,
) -> TreeNode:
    """Tree built by recursive hypergraph bisection with DP leaves."""
    if tn.num_tensors < 1:
        raise InvalidArgumentError("empty network")
    builder = TreeBuilder([t.labels for t in tn.tensors], tn.output_modes, tn.extents)
    if tn.num_tensors == 1:
        return builder.leaf(0)
    labels_by_id = {i: frozenset(t.labels) for i, t in enumerate(tn.tensors)}
    total_counts: dict[str, int] = {}
    for t in tn.tensors:
        for l in t.labels:
            total_counts[l] = total_counts.get(l, 0) + 1
    rng = np.random.default_rng(seed)
    pairs, _ = _partition_pairs(
        labels_by_id,
        list(range(tn.num_tensors)),
        tn.output_modes,
        tn.extents,
        total_counts,
        arity,
        imbalance,
        rng,
        dp_threshold,
    )
    tree = builder.from_ssa_pairs(pairs)
    return bubble_reoptimize(builder, tree, tn.extents, dp_threshold)


# ---------------------------------------------------------------------------
# bubbling: re-optimize the hottest subtrees with the DP engine


def bubble_reoptimize(
    builder: TreeBuilder,
    root: TreeNode,
    extents,
    dp_threshold: int = DP_THRESHOLD,
    top_k: int = 5,
    sweeps: int = 2,
) -> TreeNode:
    for _ in range(sweeps):
        improved = False
        hot = sorted(
            (v for v in root.iter_internal() if not (v.left.is_leaf and v.right.is_leaf)),
            key=lambda v: node_flops(v, extents),
            reverse=True,
        )[:top_k]
        for target in hot:
            new_sub = _reoptimize_subtree(builder, target, extents, dp_threshold)
            if new_sub is not None:
                root = builder.replace(root, target, new_sub)
                improved = True
                break  # hot list is stale after a replacement
        if not improved:
            break
    return root


def _subtree_cost(node: TreeNode, frontier_ids, extents) -> int:
    if id(node) in frontier_ids or node.is_leaf:
        return 0
    return (
        node_flops(node, extents)
        + _subtree_cost(node.left, frontier_ids, extents)
        + _subtree_cost(node.right, frontier_ids, extents)
    )


def _reoptimize_subtree(builder, target: TreeNode, extents, dp_threshold):
    # grow a frontier of sub-roots below the target; capped below the DP
    # threshold to keep the exact solver cheap inside the bubbling loop
    cap = min(dp_threshold, 8)
    frontier = [target]
    while True:
        expandable = [v for v in frontier if not v.is_leaf]
        if not expandable:
            break
        victim = max(expandable, key=lambda v: node_flops(v, extents))
        if len(frontier) + 1 > cap:
            break
        frontier.remove(victim)
        frontier.extend([victim.left, victim.right])
    if len(frontier) < 3:
        return None
    frontier_ids = {id(v) for v in frontier}
    old_cost = _subtree_cost(target, frontier_ids, extents)
    labels_by_id = {k: frozenset(v.labels) for k, v in enumerate(frontier)}
    vout = set(target.labels)
    pairs, new_cost = _dp_pairs(labels_by_id, list(range(len(frontier))), vout, extents)
    if new_cost >= old_cost:
        return None
    nodes = list(frontier)
    for a, b in pairs:
        nodes.append(builder.join(nodes[a], nodes[b]))
    return nodes[-1]


# ---------------------------------------------------------------------------
# slicing


def select_slices(
    root: TreeNode,
    memory_budget: int | None,
    extents,
    itemsize: int = 16,
    candidate_pool: int = 3,
) -> tuple[dict[str, int], float]:
    """Greedy slice selection until the largest per-slice intermediate fits.

    Candidates come from the labels of the ``candidate_pool`` largest
    intermediates; each step slices the label with the best peak reduction
    per added flop.  Returns ({label: extent}, overhead factor).
    """
    base_flops = tree_flops(root, extents)
    if memory_budget is None:
        return {}, 1.0
    sliced: set[str] = set()
    cur_flops = base_flops

    def size_vector(trial):
        return tuple(
            sorted((node_size(v, extents, trial) for v in root.iter_internal()), reverse=True)
        )

    while True:
        internals = list(root.iter_internal())
        if not internals:
            break
        sizes = sorted(
            ((node_size(v, extents, sliced), v) for v in internals),
            key=lambda t: t[0],
            reverse=True,
        )
        peak = sizes[0][0]
        if peak * itemsize <= memory_budget:
            break
        # candidate labels come from the largest intermediates; when the peak
        # is attained by several nodes, all of them contribute candidates
        pool = max(candidate_pool, sum(1 for s, _ in sizes if s == peak))
        candidates: list[str] = []
        for _, v in sizes[:pool]:
            for l in v.labels:
                if l not in sliced and l not in candidates and extents[l] > 1:
                    candidates.append(l)
        cur_vector = size_vector(sliced)
        best = None
        for l in candidates:
            trial = sliced | {l}
            new_vector = size_vector(trial)
            if new_vector >= cur_vector:
                continue
            new_peak = new_vector[0]
            new_flops = tree_flops(root, extents, trial)
            density = (peak - new_peak) / max(new_flops - cur_flops, 1)
            key = (density, peak - new_peak, l)
            if best is None or key > best[0]:
                best = (key, l, new_flops)
        if best is None:
            raise InfeasibleContractionError(
                f"budget {memory_budget} bytes unreachable; peak is "
                f"{peak * itemsize} bytes with {sorted(sliced)} sliced"
            )
        sliced.add(best[1])
        cur_flops = best[2]
    overhead = cur_flops / base_flops if base_flops else 1.0
    return {l: extents[l] for l in sorted(sliced)}, float(overhead)


# ---------------------------------------------------------------------------
# hyper-optimizer


def find_path(tn: TensorNetwork, cfg: OptimizerConfig | None = None) -> OptimizerResult:
    """Hyper-optimized contraction path with slice selection.

    Sample 0 is always the canonical greedy tree; later samples alternate
    seeded greedy and partition configurations.  For small networks the
    unsimplified exact DP tree joins the candidate set.  Deterministic for a
    fixed seed; the winner is the minimum by (sliced flops, tree signature).
    """
    cfg = cfg or OptimizerConfig()
    alive_ids, labels_of, prelude = _simplify_terms(
        [t.labels for t in tn.tensors], tn.output_modes, tn.extents
    )
    reduced_labels = [tuple(sorted(labels_of[i])) for i in alive_ids]
    reduced = TensorNetwork(
        [Tensor(lbls) for lbls in reduced_labels],
        tn.output_modes,
        {**{l: tn.extents[l] for lbls in reduced_labels for l in lbls},
         **{l: tn.extents[l] for l in tn.output_modes}},
    )
    builder = TreeBuilder([t.labels for t in tn.tensors], tn.output_modes, tn.extents)

    def assemble(reduced_tree: TreeNode) -> tuple[TreeNode, list[tuple[int, int]]]:
        reduced_pairs = to_ssa_pairs(reduced_tree, reduced.num_tensors)
        nred = reduced.num_tensors
        offset = len(tn.tensors) + len(prelude)
        pairs = list(prelude)
        for a, b in reduced_pairs:
            ga = alive_ids[a] if a < nred else a - nred + offset
            gb = alive_ids[b] if b < nred else b - nred + offset
            pairs.append((ga, gb))
        return builder.from_ssa_pairs(pairs), pairs

    candidates: list[tuple[TreeNode, list[tuple[int, int]]]] = []

    def make_sample(i: int) -> TreeNode:
        rng = np.random.default_rng((cfg.seed, i))
        if i == 0:
            return greedy_path(reduced, cost_weight=1.0, seed=cfg.seed, temperature=0.0)
        if i % 2 == 1:
            lo, hi = cfg.partition_arity_range
            arity = int(rng.integers(lo, hi + 1))
            imbalance = float(rng.uniform(*cfg.imbalance_range))
            return partition_path(
                reduced, arity=arity, imbalance=imbalance,
                seed=int(rng.integers(0, 2**31)), dp_threshold=cfg.dp_threshold,
            )
        weight = float(rng.uniform(*cfg.greedy_weight_range))
        temperature = float(rng.choice([0.0, 0.02, 0.05, 0.1]))
        return greedy_path(
            reduced, cost_weight=weight, seed=int(rng.integers(0, 2**31)),
            temperature=temperature,
        )

    sample_ids = list(range(cfg.num_hyper_samples))
    if cfg.workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(cfg.workers) as pool:
            reduced_trees = list(pool.map(make_sample, sample_ids))
    else:
        reduced_trees = [make_sample(i) for i in sample_ids]
    for rt in reduced_trees:
        candidates.append(assemble(rt))
    if tn.num_tensors > 1:
        # canonical greedy on the unsimplified network: guarantees the
        # returned cost never exceeds greedy_path regardless of how the
        # simplification prelude interacts with this particular network
        plain = greedy_path(tn, cost_weight=1.0, seed=cfg.seed, temperature=0.0)
        candidates.append((plain, to_ssa_pairs(plain, tn.num_tensors)))
    if tn.num_tensors <= cfg.dp_threshold and tn.num_tensors > 1:
        pairs, _ = _dp_pairs(
            {i: frozenset(t.labels) for i, t in enumerate(tn.tensors)},
            list(range(tn.num_tensors)),
            set(tn.output_modes),
            tn.extents,
        )
        candidates.append((builder.from_ssa_pairs(pairs), pairs))
    if tn.num_tensors == 1:
        leaf = builder.leaf(0)
        candidates.append((leaf, []))

    best = None
    infeasible: Exception | None = None
    for tree, pairs in candidates:
        try:
            slices, overhead = select_slices(
                tree, cfg.memory_budget, tn.extents, cfg.itemsize
            )
        except InfeasibleContractionError as exc:
            infeasible = exc
            continue
        unsliced = tree_flops(tree, tn.extents)
        sliced_flops = tree_flops(tree, tn.extents, set(slices))
        degraded = overhead > cfg.slicing_overhead_tolerance
        key = (degraded, sliced_flops, tree.signature())
        if best is None or key < best[0]:
            best = (key, tree, pairs, slices, overhead, sliced_flops, unsliced)
    if best is None:
        raise infeasible or InfeasibleContractionError("no feasible contraction path")
    _, tree, pairs, slices, overhead, sliced_flops, unsliced = best
    return OptimizerResult(
        tree=tree,
        ssa_pairs=pairs,
        total_flops=int(sliced_flops),
        unsliced_flops=int(unsliced),
        slices=slices,
        overhead_factor=float(overhead),
    )
