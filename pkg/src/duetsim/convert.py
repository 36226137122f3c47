"""Circuit-to-tensor-network conversion with reverse-lightcone pruning.

Every |0> input contributes a rank-1 tensor and every k-qubit gate (controls
included, in projector form) a rank-2k tensor.  Amplitude targets close the
final wires with basis projectors; reduced-density-matrix and expectation
targets build the doubled ket (x) conjugated-bra network, sharing the final
wire of every traced qubit.  With the lightcone flag, gates outside the
reverse causal cone of the observed qubits are dropped on both layers, where
they would cancel pairwise.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .circuits import Circuit, to_gates
from .core import InvalidArgumentError
from .fusion import expand_gate
from .gates import PAULI_MATS, PauliString
from .tn.model import Tensor, TensorNetwork, format_expression

_KET0 = np.array([1.0, 0.0], dtype=np.complex128)
_BASIS = (np.array([1.0, 0.0], dtype=np.complex128), np.array([0.0, 1.0], dtype=np.complex128))


@dataclass
class ConversionTarget:
    kind: str  # state_vector | amplitude | batched_amplitudes | rdm | expectation
    bitstring: str | None = None
    fixed: dict | None = None  # qubit -> bit, for batched amplitudes
    kept: tuple[int, ...] | None = None  # rdm
    projected: dict | None = None  # qubit -> bit, rdm projection
    pauli: PauliString | None = None  # expectation
    lightcone: bool = False

    def __post_init__(self):
        kinds = ("state_vector", "amplitude", "batched_amplitudes", "rdm", "expectation")
        if self.kind not in kinds:
            raise InvalidArgumentError(f"unknown target kind {self.kind!r}")
        if self.kind == "amplitude" and self.bitstring is None:
            raise InvalidArgumentError("amplitude target needs a bitstring")
        if self.kind == "batched_amplitudes" and self.fixed is None:
            raise InvalidArgumentError("batched_amplitudes target needs fixed bits")
        if self.kind == "rdm" and not self.kept:
            raise InvalidArgumentError("rdm target needs kept qubits")
        if self.kind == "expectation" and self.pauli is None:
            raise InvalidArgumentError("expectation target needs a Pauli string")


def _bit_of(bitstring: str, qubit: int) -> int:
    # character j of a bitstring refers to qubit n-1-j (sampler convention)
    return int(bitstring[len(bitstring) - 1 - qubit])


class _Layer:
    """Wire bookkeeping for one layer (ket or conjugated bra)."""

    def __init__(self, prefix: str, n: int, extents: dict):
        self.prefix = prefix
        self.segment = [0] * n
        self.extents = extents
        self.tensors: list[Tensor] = []
        for q in range(n):
            extents[self.wire(q)] = 2
            self.tensors.append(Tensor((self.wire(q),), _KET0))

    def wire(self, q: int) -> str:
        return f"{self.prefix}{q}.{self.segment[q]}"

    def add_gate(self, gate_tensor: np.ndarray, qubits: list[int], conj: bool) -> None:
        k = len(qubits)
        ins = [self.wire(q) for q in qubits]
        for q in qubits:
            self.segment[q] += 1
        outs = [self.wire(q) for q in qubits]
        for w in outs:
            self.extents[w] = 2
        data = gate_tensor.conj() if conj else gate_tensor
        # axes: (out_{k-1}..out_0, in_{k-1}..in_0), bit m of the gate index
        # addressing qubits[m]
        labels = tuple(reversed(outs)) + tuple(reversed(ins))
        self.tensors.append(Tensor(labels, data))

    def close(self, q: int, vec: np.ndarray) -> None:
        self.tensors.append(Tensor((self.wire(q),), vec))


def _cone_gates(circuit: Circuit, seed_qubits) -> list[bool]:
    active = set(seed_qubits)
    include = [False] * len(circuit.ops)
    for i in range(len(circuit.ops) - 1, -1, -1):
        qubits = set(circuit.ops[i].qubits)
        if qubits & active:
            include[i] = True
            active |= qubits
    return include


def circuit_to_network(circuit: Circuit, target: ConversionTarget) -> TensorNetwork:
    n = circuit.num_qubits
    gates = to_gates(circuit)
    if target.kind == "expectation":
        seed = [q for q, _ in target.pauli.support()]
    elif target.kind == "rdm":
        seed = list(target.kept) + sorted(target.projected or ())
    else:
        seed = list(range(n))
    if target.lightcone and target.kind not in ("rdm", "expectation"):
        raise InvalidArgumentError("lightcone applies to rdm and expectation targets")
    include = (
        _cone_gates(circuit, seed)
        if target.lightcone
        else [True] * len(circuit.ops)
    )

    extents: dict[str, int] = {}
    ket = _Layer("k", n, extents)
    doubled = target.kind in ("rdm", "expectation")
    bra = _Layer("b", n, extents) if doubled else None
    for keep, op, gate in zip(include, circuit.ops, gates):
        if not keep:
            continue
        qubits = sorted(gate.qubits)
        mat = expand_gate(gate, qubits)
        k = len(qubits)
        tens = mat.reshape((2,) * (2 * k))
        ket.add_gate(tens, qubits, conj=False)
        if doubled:
            bra.add_gate(tens, qubits, conj=True)

    tensors = list(ket.tensors)
    output: list[str] = []
    if target.kind == "state_vector":
        output = [ket.wire(q) for q in range(n - 1, -1, -1)]
    elif target.kind == "amplitude":
        if len(target.bitstring) != n:
            raise InvalidArgumentError("bitstring length mismatch")
        for q in range(n):
            ket.close(q, _BASIS[_bit_of(target.bitstring, q)])
        tensors = list(ket.tensors)
    elif target.kind == "batched_amplitudes":
        for q, bit in sorted(target.fixed.items()):
            if not 0 <= q < n:
                raise InvalidArgumentError(f"fixed qubit {q} out of range")
            ket.close(q, _BASIS[int(bit)])
        tensors = list(ket.tensors)
        output = [ket.wire(q) for q in range(n - 1, -1, -1) if q not in target.fixed]
    elif target.kind == "rdm":
        kept = tuple(target.kept)
        projected = dict(target.projected or {})
        if set(kept) & set(projected):
            raise InvalidArgumentError("kept and projected qubits overlap")
        for q in projected:
            ket.close(q, _BASIS[int(projected[q])])
            bra.close(q, _BASIS[int(projected[q])])
        # traced qubits share their final wire between ket and bra
        relabel = {}
        for q in range(n):
            if q not in kept and q not in projected:
                relabel[bra.wire(q)] = ket.wire(q)
        tensors = list(ket.tensors) + [
            Tensor(tuple(relabel.get(l, l) for l in t.labels), t.data)
            for t in bra.tensors
        ]
        output = [ket.wire(q) for q in kept] + [bra.wire(q) for q in kept]
    elif target.kind == "expectation":
        support = dict(target.pauli.support())
        for q in range(n):
            if q in support:
                # <bra| P |ket>: rows couple to the bra wire, columns to ket
                mat = PAULI_MATS[support[q]]
                tensors_extra = Tensor((bra.wire(q), ket.wire(q)), mat)
                ket.tensors.append(tensors_extra)
            else:
                # traced: share the wire
                pass
        relabel = {}
        for q in range(n):
            if q not in support:
                relabel[bra.wire(q)] = ket.wire(q)
        tensors = list(ket.tensors) + [
            Tensor(tuple(relabel.get(l, l) for l in t.labels), t.data)
            for t in bra.tensors
        ]
        coeff = complex(target.pauli.coefficient)
        if coeff != 1.0:
            tensors.append(Tensor((), np.array(coeff)))
    if target.kind == "state_vector":
        tensors = list(ket.tensors)
    return TensorNetwork(tensors, tuple(output), extents)


def apply_lightcone(
    tn: TensorNetwork, circuit: Circuit, target: ConversionTarget
) -> TensorNetwork:
    """Reverse-lightcone reduction: rebuilds the network without the gates
    that cancel outside the causal cone of the observed qubits."""
    if target.kind not in ("rdm", "expectation"):
        raise InvalidArgumentError("lightcone applies to rdm and expectation targets")
    reduced = circuit_to_network(circuit, replace(target, lightcone=True))
    if reduced.num_tensors > tn.num_tensors:
        raise AssertionError("lightcone must never increase the tensor count")
    return reduced


def network_to_einsum(tn: TensorNetwork):
    """Export as (expression, operand arrays) in the bracketed-label dialect."""
    expr = format_expression([t.labels for t in tn.tensors], tn.output_modes)
    return expr, [t.data for t in tn.tensors]
