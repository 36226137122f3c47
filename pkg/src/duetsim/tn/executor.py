"""Contraction execution: planning, workspace arenas, sliced and
distributed evaluation, constant-intermediate caching.

A plan fixes the evaluation order (minimum-workspace depth-first) and, after
autotuning, the kernel variant per node.  Scratch allocations are tracked by
a per-call arena whose high-water mark must stay within the plan's reported
minimum workspace.  Intermediates whose leaves are all constant are served
from the arena's cache across repeated contractions; eviction is greedy by
flops-saved per byte.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

import numpy as np

from ..core import InvalidArgumentError
from .model import TensorNetwork, Tensor
from .pathfinder import OptimizerResult
from .tree import TreeNode, node_flops, node_size, plan_workspace

KERNELS = ("direct", "blas")


class WorkspaceExceededError(RuntimeError):
    """Scratch arena exceeded its configured limit."""


@dataclass
class SliceRange:
    begin: int
    end: int
    accumulate: bool = False


@dataclass
class CacheEntry:
    data: np.ndarray
    flops_saved: int
    nbytes: int

    @property
    def density(self) -> float:
        return self.flops_saved / max(self.nbytes, 1)


@dataclass
class ExecStats:
    flops_executed: int = 0
    nodes_computed: int = 0
    cache_hits: int = 0
    cache_recomputes: int = 0


class WorkspaceArena:
    """Scratch accounting plus the constant-intermediate cache."""

    def __init__(self, scratch_limit: int | None = None, cache_limit: int = 0):
        self.scratch_limit = scratch_limit
        self.cache_limit = cache_limit
        self.scratch_used = 0
        self.scratch_high_water = 0
        self.cache: dict[tuple, CacheEntry] = {}
        self.cache_used = 0
        self.recommended_cache = 0
        self.stats = ExecStats()
        self._computed_once: set[tuple] = set()
        self._lock = threading.Lock()

    # -- scratch ------------------------------------------------------------

    def allocate(self, shape, dtype) -> np.ndarray:
        arr = np.empty(shape, dtype=dtype)
        with self._lock:
            self.scratch_used += arr.nbytes
            self.scratch_high_water = max(self.scratch_high_water, self.scratch_used)
            if self.scratch_limit is not None and self.scratch_used > self.scratch_limit:
                raise WorkspaceExceededError(
                    f"scratch use {self.scratch_used} exceeds limit {self.scratch_limit}"
                )
        return arr

    def release(self, arr: np.ndarray) -> None:
        with self._lock:
            self.scratch_used -= arr.nbytes

    def reset_scratch(self) -> None:
        self.scratch_used = 0
        self.scratch_high_water = 0

    # -- cache ---------------------------------------------------------------

    def cache_get(self, key) -> np.ndarray | None:
        entry = self.cache.get(key)
        if entry is not None:
            self.stats.cache_hits += 1
            return entry.data
        return None

    def cache_put(self, key, data: np.ndarray, flops_saved: int) -> None:
        if self.cache_limit <= 0 or data.nbytes > self.cache_limit:
            return
        entry = CacheEntry(data, flops_saved, data.nbytes)
        while self.cache_used + entry.nbytes > self.cache_limit:
            victim_key, victim = min(
                self.cache.items(), key=lambda kv: (kv[1].density, kv[0])
            )
            if victim.density >= entry.density:
                return  # everything resident is at least as valuable
            del self.cache[victim_key]
            self.cache_used -= victim.nbytes
        self.cache[key] = entry
        self.cache_used += entry.nbytes

    def note_compute(self, key) -> None:
        if key in self._computed_once:
            self.stats.cache_recomputes += 1
        else:
            self._computed_once.add(key)

    def invalidate_cache(self) -> None:
        self.cache.clear()
        self.cache_used = 0
        self._computed_once.clear()

    def cache_stats(self) -> dict:
        return {
            "used_bytes": self.cache_used,
            "recommended_bytes": self.recommended_cache,
            "hits": self.stats.cache_hits,
            "recomputes": self.stats.cache_recomputes,
        }


@dataclass
class ContractionPlan:
    tn: TensorNetwork
    tree: TreeNode
    order: list[TreeNode]
    first_child: dict[int, str]
    slices: dict[str, int]
    workspace: dict[str, int]
    constant_nodes: set[int]
    kernels: dict[int, str] = field(default_factory=dict)
    autotuned: bool = False
    dtype: np.dtype = np.dtype(np.complex128)

    @property
    def num_slices(self) -> int:
        c = 1
        for e in self.slices.values():
            c *= e
        return c

    def recommended_cache_bytes(self) -> int:
        total = 0
        for v in self.order:
            if id(v) in self.constant_nodes and v is not self.tree:
                total += node_size(v, self.tn.extents, set(self.slices)) * self.dtype.itemsize
        return total


def make_plan(tn: TensorNetwork, result: OptimizerResult, dtype=np.complex128) -> ContractionPlan:
    """Fix the evaluation order and workspace figures for a found path."""
    dtype = np.dtype(dtype)
    sliced = set(result.slices)
    ws = plan_workspace(result.tree, tn.extents, dtype.itemsize, sliced)
    constant_nodes: set[int] = set()

    def mark_const(node: TreeNode) -> bool:
        if node.is_leaf:
            return tn.tensors[node.leaf].constant
        const = mark_const(node.left) & mark_const(node.right)
        if const:
            constant_nodes.add(id(node))
        return const

    mark_const(result.tree)
    return ContractionPlan(
        tn=tn,
        tree=result.tree,
        order=ws.order,
        first_child=ws.first_child,
        slices=dict(result.slices),
        workspace={
            "min_bytes": ws.min_bytes,
            "recommended_bytes": ws.recommended_bytes,
            "max_bytes": ws.max_bytes,
        },
        constant_nodes=constant_nodes,
        dtype=dtype,
    )


# ---------------------------------------------------------------------------
# kernels


def _contract_kernel(kind: str, a: Tensor, b: Tensor, keep, extents, out=None) -> np.ndarray:
    union = sorted(set(a.labels) | set(b.labels))
    ids = {l: i for i, l in enumerate(union)}
    result_labels = tuple(sorted((set(a.labels) | set(b.labels)) & set(keep)))
    operands = (
        a.data,
        [ids[l] for l in a.labels],
        b.data,
        [ids[l] for l in b.labels],
        [ids[l] for l in result_labels],
    )
    kwargs = {"optimize": kind == "blas"}
    if out is not None:
        return np.einsum(*operands, out=out, **kwargs)
    return np.einsum(*operands, **kwargs)


def _slice_leaf(tensor: Tensor, assignment: dict[str, int]) -> Tensor:
    """Fix sliced-mode positions on a leaf tensor (view, no copy)."""
    if tensor.data is None:
        raise InvalidArgumentError("tensor data not bound")
    idx = []
    labels = []
    for l in tensor.labels:
        if l in assignment:
            idx.append(assignment[l])
        else:
            idx.append(slice(None))
            labels.append(l)
    return Tensor(tuple(labels), tensor.data[tuple(idx)])


def _ordinal_assignment(plan: ContractionPlan, ordinal: int) -> dict[str, int]:
    assignment = {}
    rem = ordinal
    for label in sorted(plan.slices):
        ext = plan.slices[label]
        assignment[label] = rem % ext
        rem //= ext
    return assignment


def _subtree_slice_key(node: TreeNode, assignment: dict[str, int]):
    touched = tuple(
        (l, assignment[l]) for l in sorted(assignment) if node.counts.get(l, 0) > 0
    )
    return touched


def _execute_slice(plan: ContractionPlan, arena: WorkspaceArena, assignment: dict[str, int]):
    """Evaluate the tree for one slice assignment.

    Depth-first in the planned child order; children buffers are released as
    soon as the parent is computed, so the arena high-water mark realizes the
    planned minimum workspace.  Returns (result tensor, owned root buffer).
    """
    tn = plan.tn
    extents = tn.extents
    sliced = set(plan.slices)

    def ev(node: TreeNode) -> tuple[Tensor, np.ndarray | None]:
        if node.is_leaf:
            return _slice_leaf(tn.tensors[node.leaf], assignment), None
        cacheable = id(node) in plan.constant_nodes and node is not plan.tree
        key = (id(node), _subtree_slice_key(node, assignment)) if cacheable else None
        if cacheable:
            hit = arena.cache_get(key)
            if hit is not None:
                return Tensor(tuple(sorted(set(node.labels) - sliced)), hit), None
        if plan.first_child.get(id(node), "left") == "left":
            first, second = node.left, node.right
        else:
            first, second = node.right, node.left
        t_first, buf_first = ev(first)
        t_second, buf_second = ev(second)
        ta, tb = (t_first, t_second) if first is node.left else (t_second, t_first)
        keep = set(node.labels) - sliced
        kind = plan.kernels.get(id(node), "direct")
        shape = tuple(extents[l] for l in sorted(keep))
        buf = arena.allocate(shape, plan.dtype)
        _contract_kernel(kind, ta, tb, keep, extents, out=buf)
        arena.stats.nodes_computed += 1
        arena.stats.flops_executed += node_flops(node, extents, sliced)
        if cacheable:
            arena.note_compute(key)
            flops_saved = sum(node_flops(v, extents, sliced) for v in node.iter_internal())
            arena.cache_put(key, buf.copy(), flops_saved)
        for b in (buf_first, buf_second):
            if b is not None:
                arena.release(b)
        return Tensor(tuple(sorted(keep)), buf), buf

    return ev(plan.tree)


def _output_slot(plan: ContractionPlan, assignment: dict[str, int]):
    """Index tuple selecting this slice's region of the output array."""
    idx = []
    for l in plan.tn.output_modes:
        if l in assignment:
            idx.append(assignment[l])
        else:
            idx.append(slice(None))
    return tuple(idx)


def contract(
    plan: ContractionPlan,
    arena: WorkspaceArena | None = None,
    slice_range: SliceRange | None = None,
    out: np.ndarray | None = None,
) -> Tensor:
    """Contract slices [begin, end), overwriting or accumulating into ``out``.

    The full range equals the unsliced contraction; constant intermediates
    are served from the arena cache once computed.
    """
    arena = arena or WorkspaceArena()
    tn = plan.tn
    for i, t in enumerate(tn.tensors):
        if t.data is None:
            raise InvalidArgumentError(f"tensor {i} has no data bound")
    if getattr(arena, "_generation", None) != tn.cache_generation:
        arena.invalidate_cache()
        arena._generation = tn.cache_generation
    arena.recommended_cache = plan.recommended_cache_bytes()
    total = plan.num_slices
    if slice_range is None:
        slice_range = SliceRange(0, total, accumulate=False)
    if not (0 <= slice_range.begin < slice_range.end <= total):
        raise InvalidArgumentError(f"slice range [{slice_range.begin}, {slice_range.end}) invalid")
    out_shape = tuple(tn.extents[l] for l in tn.output_modes)
    if out is None:
        out = np.zeros(out_shape, dtype=plan.dtype)
        if slice_range.accumulate:
            raise InvalidArgumentError("accumulate=True requires an output buffer")
    elif out.shape != out_shape:
        raise InvalidArgumentError(f"output shape {out.shape} != {out_shape}")
    if not slice_range.accumulate:
        out[...] = 0
    for ordinal in range(slice_range.begin, slice_range.end):
        assignment = _ordinal_assignment(plan, ordinal)
        val, buf = _execute_slice(plan, arena, assignment)
        slot = _output_slot(plan, assignment)
        # align the slice result's axes with the output's unsliced modes
        out_labels = [l for l in tn.output_modes if l not in assignment]
        perm = [val.labels.index(l) for l in out_labels]
        block = np.transpose(val.data, perm) if perm else val.data
        stray = [l for l in val.labels if l not in out_labels]
        if stray:
            t = Tensor(val.labels, val.data)
            from .model import project_to_output

            block = project_to_output(t, tuple(out_labels), tn.extents).data
        out[slot] += block.reshape(out[slot].shape)
        if buf is not None:
            arena.release(buf)
    return Tensor(tn.output_modes, out)


def autotune(plan: ContractionPlan, arena: WorkspaceArena | None = None, repeats: int = 3) -> None:
    """Time the kernel variants on each pairwise contraction and fix the
    fastest.  Semantics are unchanged; the choice persists on the plan."""
    arena = arena or WorkspaceArena()
    if plan.workspace["min_bytes"] and arena.scratch_limit is not None:
        if arena.scratch_limit < plan.workspace["min_bytes"]:
            raise WorkspaceExceededError("workspace below plan minimum")
    tn = plan.tn
    sliced = set(plan.slices)
    assignment = _ordinal_assignment(plan, 0)
    values: dict[int, Tensor] = {}
    for node in plan.order:
        a = values[id(node.left)] if not node.left.is_leaf else _slice_leaf(
            tn.tensors[node.left.leaf], assignment
        )
        b = values[id(node.right)] if not node.right.is_leaf else _slice_leaf(
            tn.tensors[node.right.leaf], assignment
        )
        keep = set(node.labels) - sliced
        timings = {}
        result = None
        for kind in KERNELS:
            t0 = time.perf_counter()
            for _ in range(repeats):
                result = _contract_kernel(kind, a, b, keep, tn.extents)
            timings[kind] = time.perf_counter() - t0
        plan.kernels[id(node)] = min(timings, key=timings.get)
        values[id(node)] = Tensor(tuple(sorted(keep)), result)
    plan.autotuned = True


def contract_distributed(
    plan: ContractionPlan,
    workers: int = 1,
    arenas: list[WorkspaceArena] | None = None,
    slice_range: SliceRange | None = None,
    out: np.ndarray | None = None,
) -> Tensor:
    """Contract slices across worker threads, round-robin by ordinal.

    Per-slice partial outputs are reduced in ascending ordinal order, so the
    value is identical for every worker count.
    """
    if workers < 1:
        raise InvalidArgumentError("workers must be >= 1")
    tn = plan.tn
    total = plan.num_slices
    if slice_range is None:
        slice_range = SliceRange(0, total)
    if not (0 <= slice_range.begin < slice_range.end <= total):
        raise InvalidArgumentError(f"slice range [{slice_range.begin}, {slice_range.end}) invalid")
    if arenas is None:
        arenas = [WorkspaceArena() for _ in range(workers)]
    if len(arenas) != workers:
        raise InvalidArgumentError("need one arena per worker")
    if workers == 1 or slice_range.end - slice_range.begin == 1:
        return contract(plan, arenas[0], slice_range, out=out)
    results: dict[int, tuple[dict, np.ndarray]] = {}
    out_shape = tuple(tn.extents[l] for l in tn.output_modes)

    def run_worker(w: int) -> None:
        arena = arenas[w]
        arena.recommended_cache = plan.recommended_cache_bytes()
        for ordinal in range(slice_range.begin + w, slice_range.end, workers):
            assignment = _ordinal_assignment(plan, ordinal)
            val, buf = _execute_slice(plan, arena, assignment)
            out_labels = [l for l in tn.output_modes if l not in assignment]
            perm = [val.labels.index(l) for l in out_labels]
            block = np.transpose(val.data, perm) if perm else val.data
            results[ordinal] = (assignment, np.ascontiguousarray(block))
            if buf is not None:
                arena.release(buf)

    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_worker, w) for w in range(workers)]
        for f in futures:
            f.result()
    if out is None:
        out = np.zeros(out_shape, dtype=plan.dtype)
    elif not slice_range.accumulate:
        out[...] = 0
    for ordinal in range(slice_range.begin, slice_range.end):
        assignment, block = results[ordinal]
        slot = _output_slot(plan, assignment)
        out[slot] += block.reshape(out[slot].shape)
    return Tensor(tn.output_modes, out)


def mark_constant(tn: TensorNetwork, tensor_ids, constant: bool = True) -> None:
    tn.mark_constant(tensor_ids, constant)


def cache_stats(arena: WorkspaceArena) -> dict:
    return arena.cache_stats()
