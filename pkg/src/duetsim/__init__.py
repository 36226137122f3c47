"""duetsim: dual-engine quantum circuit simulation.

Exact state-vector simulation (with gate fusion and a segmented, multi-worker
execution mode) next to tensor-network contraction (hyper-optimized path
finding, slicing, caching) and approximate MPS simulation.
"""

from .approx import SvdPolicy, gate_split, tensor_qr, tensor_svd
from .core import InvalidArgumentError, bit_permute, norm_squared
from .distsim import SegmentedStateVector
from .fusion import FusionConfig, fuse, fused_matrix
from .gates import DenseGate, PauliString, PermutationGate
from .mps import MPSState, run_circuit_mps
from .statevec import StateVector, run_circuit_sv

__all__ = [
    "InvalidArgumentError",
    "bit_permute",
    "norm_squared",
    "DenseGate",
    "PermutationGate",
    "PauliString",
    "StateVector",
    "run_circuit_sv",
    "SegmentedStateVector",
    "FusionConfig",
    "fuse",
    "fused_matrix",
    "SvdPolicy",
    "tensor_qr",
    "tensor_svd",
    "gate_split",
    "MPSState",
    "run_circuit_mps",
]

__version__ = "0.1.0"
