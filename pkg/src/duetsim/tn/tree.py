"""Binary contraction trees: cost annotation, slicing-aware accounting,
and the minimum-workspace evaluation order.

A node's result modes follow einsum semantics: a label survives a pairwise
contraction while some tensor outside the subtree (or the network output)
still carries it.  Slicing a label fixes its value per slice, so sliced
labels drop out of sizes and per-slice flop counts; the slice count is the
product of the sliced extents.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from ..core import InvalidArgumentError


class TreeNode:
    __slots__ = ("leaf", "left", "right", "labels", "union_labels", "counts", "leaf_count")

    def __init__(self, leaf, left, right, labels, union_labels, counts, leaf_count):
        self.leaf = leaf
        self.left = left
        self.right = right
        self.labels = labels  # kept result modes, sorted
        self.union_labels = union_labels  # operand-union modes (internal only)
        self.counts = counts  # per-label leaf multiplicity within the subtree
        self.leaf_count = leaf_count

    @property
    def is_leaf(self) -> bool:
        return self.leaf is not None

    def signature(self) -> str:
        if self.is_leaf:
            return str(self.leaf)
        a, b = self.left.signature(), self.right.signature()
        if a > b:
            a, b = b, a
        return f"({a},{b})"

    def iter_internal(self):
        if self.is_leaf:
            return
        yield from self.left.iter_internal()
        yield from self.right.iter_internal()
        yield self

    def iter_leaves(self):
        if self.is_leaf:
            yield self
        else:
            yield from self.left.iter_leaves()
            yield from self.right.iter_leaves()


class TreeBuilder:
    """Constructs nodes with the global keep rule baked in."""

    def __init__(self, leaf_labels: list[tuple[str, ...]], output_modes, extents):
        self.leaf_labels = [tuple(t) for t in leaf_labels]
        self.output = set(output_modes)
        self.extents = dict(extents)
        self.total = Counter()
        for t in self.leaf_labels:
            self.total.update(t)

    def leaf(self, i: int) -> TreeNode:
        labels = self.leaf_labels[i]
        return TreeNode(i, None, None, labels, labels, Counter(labels), 1)

    def join(self, a: TreeNode, b: TreeNode) -> TreeNode:
        counts = a.counts + b.counts
        union = set(a.labels) | set(b.labels)
        kept = tuple(
            sorted(
                l
                for l in union
                if l in self.output or self.total[l] - counts[l] > 0
            )
        )
        return TreeNode(None, a, b, kept, tuple(sorted(union)), counts, a.leaf_count + b.leaf_count)

    def from_ssa_pairs(self, pairs) -> TreeNode:
        nodes = [self.leaf(i) for i in range(len(self.leaf_labels))]
        for i, j in pairs:
            nodes.append(self.join(nodes[i], nodes[j]))
        if len(pairs) != len(self.leaf_labels) - 1:
            raise InvalidArgumentError("pair list does not reduce to a single tree")
        return nodes[-1]

    def replace(self, root: TreeNode, old: TreeNode, new: TreeNode) -> TreeNode:
        if root is old:
            return new
        if root.is_leaf:
            return root
        left = self.replace(root.left, old, new)
        right = self.replace(root.right, old, new)
        if left is root.left and right is root.right:
            return root
        return self.join(left, right)


def to_ssa_pairs(root: TreeNode, num_leaves: int) -> list[tuple[int, int]]:
    ids: dict[int, int] = {}
    pairs: list[tuple[int, int]] = []
    next_id = num_leaves

    def walk(node: TreeNode) -> int:
        nonlocal next_id
        if node.is_leaf:
            return node.leaf
        a = walk(node.left)
        b = walk(node.right)
        pairs.append((a, b))
        ids[id(node)] = next_id
        next_id += 1
        return next_id - 1

    walk(root)
    return pairs


# ---------------------------------------------------------------------------
# cost accounting


def _size(labels, extents, sliced) -> int:
    s = 1
    for l in labels:
        if l not in sliced:
            s *= extents[l]
    return s


def node_flops(node: TreeNode, extents, sliced=frozenset()) -> int:
    """Multiply-add count of one pairwise contraction (per slice)."""
    return _size(node.union_labels, extents, sliced)


def node_size(node: TreeNode, extents, sliced=frozenset()) -> int:
    return _size(node.labels, extents, sliced)


def slice_count(sliced, extents) -> int:
    c = 1
    for l in sliced:
        c *= extents[l]
    return c


def tree_flops(root: TreeNode, extents, sliced=frozenset()) -> int:
    """Total multiply-adds: per-slice sum times the slice count."""
    per_slice = sum(node_flops(v, extents, sliced) for v in root.iter_internal())
    return per_slice * slice_count(sliced, extents)


def largest_intermediate(root: TreeNode, extents, sliced=frozenset()) -> int:
    sizes = [node_size(v, extents, sliced) for v in root.iter_internal()]
    return max(sizes, default=0)


@dataclass
class WorkspaceInfo:
    min_bytes: int
    recommended_bytes: int
    max_bytes: int
    order: list[TreeNode]  # internal nodes in evaluation order
    first_child: dict[int, str]  # node id -> "left"/"right" evaluated first


def plan_workspace(root: TreeNode, extents, itemsize: int, sliced=frozenset()) -> WorkspaceInfo:
    """Minimum-workspace evaluation order via exact two-order choice per node.

    Workspace counts intermediate results only (inputs are caller-owned);
    the root result counts.  Ties prefer evaluating the larger-peak child
    first.
    """
    order: list[TreeNode] = []
    first_child: dict[int, str] = {}
    peaks: dict[int, int] = {0: 0}
    sizes: dict[int, int] = {0: 0}
    total = 0
    largest = 0

    def visit(node: TreeNode) -> tuple[int, int]:
        """Returns (peak workspace, held result bytes) of the subtree."""
        nonlocal total, largest
        if node.is_leaf:
            return 0, 0
        pa, sa = visit(node.left)
        pb, sb = visit(node.right)
        s_v = node_size(node, extents, sliced) * itemsize
        both = sa + sb + s_v
        left_first = max(pa, sa + pb, both)
        right_first = max(pb, sb + pa, both)
        if left_first < right_first or (left_first == right_first and pa >= pb):
            choice, peak = "left", left_first
        else:
            choice, peak = "right", right_first
        peaks[id(node)] = peak
        first_child[id(node)] = choice
        total += s_v
        largest = max(largest, s_v)
        return peak, s_v

    # build evaluation order by re-walking with chosen child order
    def emit(node: TreeNode) -> None:
        if node.is_leaf:
            return
        first = node.left if first_child[id(node)] == "left" else node.right
        second = node.right if first is node.left else node.left
        emit(first)
        emit(second)
        order.append(node)

    if root.is_leaf:
        return WorkspaceInfo(0, 0, 0, [], {})
    visit(root)
    emit(root)
    min_bytes = peaks[id(root)]
    # recommended adds staging headroom for mode reordering of the largest
    # intermediate, capped by the sum of all intermediates
    recommended = min(min_bytes + largest, total)
    return WorkspaceInfo(min_bytes, recommended, total, order, first_child)
