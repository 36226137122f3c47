"""Circuit IR, benchmark circuit generators, and JSON (de)serialization.

Gate ops are stored by name with parameters, targets, and (qubit, value)
controls; a dense-matrix escape hatch ("unitary") covers custom gates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import gates as G
from .core import InvalidArgumentError
from .gates import DenseGate, Gate, PermutationGate

CIRCUIT_SCHEMA_VERSION = 1


@dataclass
class GateOp:
    name: str
    params: tuple[float, ...] = ()
    targets: tuple[int, ...] = ()
    controls: tuple[tuple[int, int], ...] = ()
    matrix: np.ndarray | None = None

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets + tuple(q for q, _ in self.controls)


@dataclass
class Circuit:
    num_qubits: int
    ops: list[GateOp] = field(default_factory=list)

    def __post_init__(self):
        for op in self.ops:
            for q in op.qubits:
                if not 0 <= q < self.num_qubits:
                    raise InvalidArgumentError(f"qubit {q} out of range in {op.name}")

    def __len__(self) -> int:
        return len(self.ops)

    def to_json_dict(self) -> dict:
        ops = []
        for op in self.ops:
            entry = {
                "name": op.name,
                "params": list(op.params),
                "targets": list(op.targets),
                "controls": [list(c) for c in op.controls],
            }
            if op.matrix is not None:
                flat = np.asarray(op.matrix, dtype=np.complex128).reshape(-1)
                entry["matrix"] = [x for z in flat for x in (z.real, z.imag)]
            ops.append(entry)
        return {"version": CIRCUIT_SCHEMA_VERSION, "n": self.num_qubits, "ops": ops}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Circuit":
        ops = []
        for entry in doc["ops"]:
            matrix = None
            if entry.get("matrix") is not None:
                raw = np.asarray(entry["matrix"], dtype=float)
                flat = raw[0::2] + 1j * raw[1::2]
                dim = int(math.isqrt(flat.size))
                matrix = flat.reshape(dim, dim)
            ops.append(
                GateOp(
                    entry["name"],
                    tuple(entry.get("params", ())),
                    tuple(entry.get("targets", ())),
                    tuple((int(q), int(v)) for q, v in entry.get("controls", ())),
                    matrix,
                )
            )
        return cls(int(doc["n"]), ops)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)

    @classmethod
    def load(cls, path) -> "Circuit":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


_SIMPLE = {
    "h": G.h,
    "x": G.x,
    "y": G.y,
    "z": G.z,
    "s": G.s,
    "sdg": G.sdg,
    "t": G.t,
    "tdg": G.tdg,
}
_PARAM1 = {"rx": G.rx, "ry": G.ry, "rz": G.rz, "p": G.p}


def op_to_gate(op: GateOp) -> Gate:
    if op.name == "unitary":
        if op.matrix is None:
            raise InvalidArgumentError("unitary op requires a matrix")
        return DenseGate(op.matrix, op.targets, op.controls)
    if op.name == "swap":
        base = G.swap(*op.targets)
    elif op.name == "rzz":
        base = G.rzz(op.params[0], *op.targets)
    elif op.name in _SIMPLE:
        base = _SIMPLE[op.name](*op.targets)
    elif op.name in _PARAM1:
        base = _PARAM1[op.name](op.params[0], *op.targets)
    else:
        raise InvalidArgumentError(f"unknown gate name {op.name!r}")
    if not op.controls:
        return base
    if isinstance(base, PermutationGate):
        return PermutationGate(base.permutation, base.diagonal, base.targets, op.controls)
    return DenseGate(base.matrix, base.targets, op.controls, unitary=base.unitary)


def to_gates(circuit: Circuit) -> list[Gate]:
    return [op_to_gate(op) for op in circuit.ops]


# ---------------------------------------------------------------------------
# generators


def gen_qft(n: int) -> Circuit:
    """Quantum Fourier transform: n Hadamards, n(n-1)/2 controlled phases,
    and the final floor(n/2) swap layer."""
    if n < 1:
        raise InvalidArgumentError("need n >= 1")
    ops = []
    for j in range(n - 1, -1, -1):
        ops.append(GateOp("h", (), (j,)))
        for m in range(j - 1, -1, -1):
            ops.append(GateOp("p", (math.pi / 2 ** (j - m),), (j,), ((m, 1),)))
    for q in range(n // 2):
        ops.append(GateOp("swap", (), (q, n - 1 - q)))
    return Circuit(n, ops)


def gen_qv(n: int, depth: int = 30, seed: int = 0) -> Circuit:
    """Quantum-volume model circuit: ``depth`` layers of floor(n/2)
    Haar-random two-qubit unitaries on a random qubit pairing per layer."""
    if n < 2:
        raise InvalidArgumentError("need n >= 2")
    rng = np.random.default_rng(seed)
    ops = []
    for _ in range(depth):
        perm = rng.permutation(n)
        for k in range(n // 2):
            pair = (int(perm[2 * k]), int(perm[2 * k + 1]))
            ops.append(GateOp("unitary", (), pair, (), G.random_unitary(4, rng)))
    return Circuit(n, ops)


def gen_qaoa_maxcut(
    edges, p: int = 2, params=None, seed: int = 0, num_qubits: int | None = None
) -> Circuit:
    """Standard QAOA MaxCut ansatz: Hadamard layer, then p rounds of
    per-edge ZZ cost rotations and per-qubit X mixer rotations."""
    edges = [tuple(e) for e in edges]
    if not edges:
        raise InvalidArgumentError("graph has no edges")
    for e in edges:
        if len(e) not in (2, 3) or e[0] == e[1]:
            raise InvalidArgumentError(f"bad edge {e}")
    n = num_qubits or (max(max(e[0], e[1]) for e in edges) + 1)
    if params is None:
        rng = np.random.default_rng(seed)
        gammas = rng.uniform(0, np.pi, p)
        betas = rng.uniform(0, np.pi / 2, p)
    else:
        gammas, betas = params
        if len(gammas) != p or len(betas) != p:
            raise InvalidArgumentError("params must provide p gammas and p betas")
    ops = [GateOp("h", (), (q,)) for q in range(n)]
    for layer in range(p):
        for e in edges:
            u, v = e[0], e[1]
            w = e[2] if len(e) == 3 else 1.0
            ops.append(GateOp("rzz", (float(gammas[layer] * w),), (u, v)))
        for q in range(n):
            ops.append(GateOp("rx", (float(2 * betas[layer]),), (q,)))
    return Circuit(n, ops)


GENERATORS = {"qft": gen_qft, "qv": gen_qv, "qaoa": gen_qaoa_maxcut}
