"""Dense and diagonal gate fusion.

Greedy windowed pass: gates are scanned in time order and attached to the
earliest compatible open window that does not violate per-qubit ordering.
A window is compatible when it is of the same kind (dense / diagonal), the
union qubit set stays within the configured size, and no later window touches
the incoming gate's qubits.  Diagonal gates sitting inside a dense window's
qubit set are absorbed into it; otherwise diagonal runs fuse separately into
generalized-permutation diagonals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from collections.abc import Sequence

import numpy as np

from .core import InvalidArgumentError
from .gates import DenseGate, Gate, PermutationGate

_MAX_FUSED_QUBITS = 10


@dataclass
class FusionConfig:
    max_fused_gate_size: int = 4
    max_fused_diagonal_gate_size: int = 6

    def __post_init__(self):
        if self.max_fused_gate_size < 1 or self.max_fused_diagonal_gate_size < 1:
            raise InvalidArgumentError("fusion sizes must be >= 1")


@dataclass
class FusedCircuit:
    gates: list[Gate]
    provenance: list[list[int]]

    def __len__(self) -> int:
        return len(self.gates)


@dataclass
class _Window:
    kind: str  # "dense" | "diag"
    qubits: set[int]
    members: list[int] = field(default_factory=list)
    oversized: bool = False


def _gate_kind(g: Gate) -> str:
    if isinstance(g, PermutationGate) and g.is_diagonal:
        return "diag"
    return "dense"


def expand_gate(g: Gate, union_targets: Sequence[int]) -> np.ndarray:
    """Expand a gate to the 2^m space of ``union_targets``.

    Controls are folded in projector form: columns with unsatisfied controls
    are identity.  Bit m of the expanded index is union_targets[m].
    """
    union = list(union_targets)
    m = len(union)
    if m > _MAX_FUSED_QUBITS:
        raise InvalidArgumentError(f"fused matrix over {m} qubits exceeds limit {_MAX_FUSED_QUBITS}")
    pos = {q: i for i, q in enumerate(union)}
    for q in (*g.targets, *(q for q, _ in g.controls)):
        if q not in pos:
            raise InvalidArgumentError(f"gate qubit {q} not in union targets {union}")
    matrix = g.matrix if isinstance(g, DenseGate) else g.to_matrix()
    k = len(g.targets)
    dim = 1 << m
    cols = np.arange(dim)
    sat = np.ones(dim, dtype=bool)
    for q, v in g.controls:
        sat &= ((cols >> pos[q]) & 1) == v
    out = np.zeros((dim, dim), dtype=np.complex128)
    unsat = cols[~sat]
    out[unsat, unsat] = 1.0
    cs = cols[sat]
    jin = np.zeros_like(cs)
    tmask = 0
    for mbit, q in enumerate(g.targets):
        jin |= ((cs >> pos[q]) & 1) << mbit
        tmask |= 1 << pos[q]
    base = cs & ~tmask
    for jout in range(1 << k):
        rows = base.copy()
        for mbit, q in enumerate(g.targets):
            rows |= ((jout >> mbit) & 1) << pos[q]
        out[rows, cs] = matrix[jout, jin]
    return out


def fused_matrix(gates: Sequence[Gate], union_targets: Sequence[int]) -> DenseGate:
    """Ordered product of the gates expanded onto ``union_targets``."""
    acc = np.eye(1 << len(union_targets), dtype=np.complex128)
    for g in gates:
        acc = expand_gate(g, union_targets) @ acc
    all_unitary = all(not isinstance(g, DenseGate) or g.unitary for g in gates)
    return DenseGate(acc, tuple(union_targets), unitary=all_unitary)


def _fused_diagonal(gates: Sequence[PermutationGate], union_targets: Sequence[int]) -> PermutationGate:
    union = list(union_targets)
    pos = {q: i for i, q in enumerate(union)}
    dim = 1 << len(union)
    cols = np.arange(dim)
    diag = np.ones(dim, dtype=np.complex128)
    for g in gates:
        sat = np.ones(dim, dtype=bool)
        for q, v in g.controls:
            sat &= ((cols >> pos[q]) & 1) == v
        jin = np.zeros(dim, dtype=np.int64)
        for mbit, q in enumerate(g.targets):
            jin |= ((cols >> pos[q]) & 1) << mbit
        factor = np.where(sat, g.diagonal[jin], 1.0)
        diag *= factor
    return PermutationGate(np.arange(dim), diag, tuple(union))


def fuse(circuit: Sequence[Gate], cfg: FusionConfig | None = None) -> FusedCircuit:
    """Compile a gate list into fused dense windows and diagonal runs."""
    cfg = cfg or FusionConfig()
    windows: list[_Window] = []
    last_touch: dict[int, int] = {}

    for idx, g in enumerate(circuit):
        qubits = set(g.qubits)
        kind = _gate_kind(g)
        limit = cfg.max_fused_diagonal_gate_size if kind == "diag" else cfg.max_fused_gate_size
        w_star = max((last_touch.get(q, -1) for q in qubits), default=-1)

        chosen: int | None = None
        if len(qubits) > limit:
            windows.append(_Window(kind, qubits, [idx], oversized=True))
            chosen = len(windows) - 1
        else:
            if (
                kind == "diag"
                and w_star >= 0
                and windows[w_star].kind == "dense"
                and not windows[w_star].oversized
                and qubits <= windows[w_star].qubits
            ):
                chosen = w_star
            if chosen is None:
                for i in range(max(w_star, 0), len(windows)):
                    w = windows[i]
                    if w.oversized or w.kind != kind:
                        continue
                    if len(w.qubits | qubits) <= limit:
                        chosen = i
                        break
            if chosen is None:
                windows.append(_Window(kind, qubits, [idx]))
                chosen = len(windows) - 1
            else:
                windows[chosen].qubits |= qubits
                windows[chosen].members.append(idx)
        for q in qubits:
            last_touch[q] = chosen

    gates_out: list[Gate] = []
    provenance: list[list[int]] = []
    for w in windows:
        if len(w.members) == 1:
            gates_out.append(circuit[w.members[0]])
        else:
            union = sorted(w.qubits)
            members = [circuit[i] for i in w.members]
            if w.kind == "diag":
                gates_out.append(_fused_diagonal(members, union))
            else:
                gates_out.append(fused_matrix(members, union))
        provenance.append(list(w.members))
    return FusedCircuit(gates_out, provenance)
