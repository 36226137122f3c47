"""Tensor-network engine: model, pathfinding, execution."""

from .model import (
    Mode,
    PairwiseCost,
    Tensor,
    TensorNetwork,
    contract_pair,
    format_expression,
    network_from_arrays,
    pairwise_cost,
    parse_einsum,
)
from .pathfinder import (
    InfeasibleContractionError,
    OptimizerConfig,
    OptimizerResult,
    find_path,
    greedy_path,
    partition_path,
    select_slices,
    simplify,
)
from .executor import (
    ContractionPlan,
    SliceRange,
    WorkspaceArena,
    WorkspaceExceededError,
    autotune,
    cache_stats,
    contract,
    contract_distributed,
    make_plan,
    mark_constant,
)
from .tree import TreeBuilder, TreeNode, plan_workspace, to_ssa_pairs, tree_flops


def path_cost(tn: TensorNetwork, root: TreeNode) -> dict:
    """Cost report for a tree: total multiply-adds, the peak live-intermediate
    element count under the minimum-workspace evaluation order, and the
    largest single intermediate."""
    from .tree import largest_intermediate

    ws = plan_workspace(root, tn.extents, itemsize=1)
    return {
        "total_flops": tree_flops(root, tn.extents),
        "peak_intermediate_size": ws.min_bytes,
        "largest_intermediate": largest_intermediate(root, tn.extents),
    }


__all__ = [
    "Mode",
    "PairwiseCost",
    "Tensor",
    "TensorNetwork",
    "contract_pair",
    "format_expression",
    "network_from_arrays",
    "pairwise_cost",
    "parse_einsum",
    "InfeasibleContractionError",
    "OptimizerConfig",
    "OptimizerResult",
    "find_path",
    "greedy_path",
    "partition_path",
    "select_slices",
    "simplify",
    "TreeBuilder",
    "TreeNode",
    "plan_workspace",
    "to_ssa_pairs",
    "tree_flops",
    "path_cost",
    "ContractionPlan",
    "SliceRange",
    "WorkspaceArena",
    "WorkspaceExceededError",
    "autotune",
    "cache_stats",
    "contract",
    "contract_distributed",
    "make_plan",
    "mark_constant",
]
