"""Gate operators: dense matrices, generalized permutations, Pauli strings.

Matrix index convention is little-endian over the target list: bit m of a
gate-basis index holds the value of ``targets[m]``.  Controls are stored
per-gate as (qubit, value) pairs so anti-controls need no matrix inflation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .core import InvalidArgumentError

_UNITARITY_TOL = 1e-8


def _check_disjoint(targets, controls):
    qubits = list(targets) + [q for q, _ in controls]
    if len(set(qubits)) != len(qubits):
        raise InvalidArgumentError(f"targets/controls overlap: {qubits}")


@dataclass
class DenseGate:
    """A k-qubit dense matrix with optional control conditions."""

    matrix: np.ndarray
    targets: tuple[int, ...]
    controls: tuple[tuple[int, int], ...] = ()
    unitary: bool = True

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.complex128)
        self.targets = tuple(self.targets)
        self.controls = tuple((int(q), int(v)) for q, v in self.controls)
        dim = 1 << len(self.targets)
        if self.matrix.shape != (dim, dim):
            raise InvalidArgumentError(
                f"matrix shape {self.matrix.shape} does not match {len(self.targets)} targets"
            )
        _check_disjoint(self.targets, self.controls)
        if self.unitary:
            err = np.abs(self.matrix.conj().T @ self.matrix - np.eye(dim)).max()
            if err > _UNITARITY_TOL:
                raise InvalidArgumentError(
                    f"matrix is not unitary (deviation {err:.2e}); pass unitary=False for observables"
                )

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets + tuple(q for q, _ in self.controls)


@dataclass
class PermutationGate:
    """Generalized permutation operator: M[perm[j], j] = diagonal[j]."""

    permutation: np.ndarray
    diagonal: np.ndarray
    targets: tuple[int, ...]
    controls: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        self.permutation = np.asarray(self.permutation, dtype=np.int64)
        self.diagonal = np.asarray(self.diagonal, dtype=np.complex128)
        self.targets = tuple(self.targets)
        self.controls = tuple((int(q), int(v)) for q, v in self.controls)
        dim = 1 << len(self.targets)
        if self.permutation.shape != (dim,) or self.diagonal.shape != (dim,):
            raise InvalidArgumentError("permutation/diagonal length must be 2^k")
        if sorted(self.permutation.tolist()) != list(range(dim)):
            raise InvalidArgumentError("permutation table is not a bijection")
        _check_disjoint(self.targets, self.controls)

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets + tuple(q for q, _ in self.controls)

    @property
    def is_diagonal(self) -> bool:
        return bool(np.all(self.permutation == np.arange(len(self.permutation))))

    def to_matrix(self) -> np.ndarray:
        dim = len(self.permutation)
        m = np.zeros((dim, dim), dtype=np.complex128)
        m[self.permutation, np.arange(dim)] = self.diagonal
        return m

    def to_dense(self) -> DenseGate:
        return DenseGate(self.to_matrix(), self.targets, self.controls, unitary=False)


PAULI_MATS = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


@dataclass
class PauliString:
    """Product of single-qubit Paulis with a scalar coefficient."""

    factors: tuple[tuple[int, str], ...]
    coefficient: complex = 1.0

    def __post_init__(self):
        self.factors = tuple((int(q), p.upper()) for q, p in self.factors)
        qubits = [q for q, _ in self.factors]
        if len(set(qubits)) != len(qubits):
            raise InvalidArgumentError(f"duplicate qubit in Pauli string: {qubits}")
        for _, p in self.factors:
            if p not in PAULI_MATS:
                raise InvalidArgumentError(f"unknown Pauli factor {p!r}")

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.factors)

    def support(self) -> tuple[tuple[int, str], ...]:
        """Non-identity factors only."""
        return tuple((q, p) for q, p in self.factors if p != "I")


Gate = DenseGate | PermutationGate


# ---------------------------------------------------------------------------
# Standard gate constructors.

_SQ2 = 1.0 / math.sqrt(2.0)


def h(q: int) -> DenseGate:
    return DenseGate(np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]]), (q,))


def x(q: int, controls=()) -> PermutationGate:
    return PermutationGate([1, 0], [1, 1], (q,), controls)


def y(q: int, controls=()) -> PermutationGate:
    return PermutationGate([1, 0], [1j, -1j], (q,), controls)


def z(q: int, controls=()) -> PermutationGate:
    return PermutationGate([0, 1], [1, -1], (q,), controls)


def s(q: int) -> PermutationGate:
    return PermutationGate([0, 1], [1, 1j], (q,))


def sdg(q: int) -> PermutationGate:
    return PermutationGate([0, 1], [1, -1j], (q,))


def t(q: int) -> PermutationGate:
    return PermutationGate([0, 1], [1, cmath.exp(0.25j * math.pi)], (q,))


def tdg(q: int) -> PermutationGate:
    return PermutationGate([0, 1], [1, cmath.exp(-0.25j * math.pi)], (q,))


def p(theta: float, q: int, controls=()) -> PermutationGate:
    """Phase gate diag(1, e^{i theta})."""
    return PermutationGate([0, 1], [1, cmath.exp(1j * theta)], (q,), controls)


def rx(theta: float, q: int) -> DenseGate:
    c, sn = math.cos(theta / 2), math.sin(theta / 2)
    return DenseGate(np.array([[c, -1j * sn], [-1j * sn, c]]), (q,))


def ry(theta: float, q: int) -> DenseGate:
    c, sn = math.cos(theta / 2), math.sin(theta / 2)
    return DenseGate(np.array([[c, -sn], [sn, c]]), (q,))


def rz(theta: float, q: int) -> PermutationGate:
    ph = cmath.exp(0.5j * theta)
    return PermutationGate([0, 1], [1 / ph, ph], (q,))


def cx(control: int, target: int) -> PermutationGate:
    return x(target, controls=((control, 1),))


def cz(q0: int, q1: int) -> PermutationGate:
    return z(q1, controls=((q0, 1),))


def cp(theta: float, control: int, target: int) -> PermutationGate:
    return p(theta, target, controls=((control, 1),))


def swap(q0: int, q1: int) -> PermutationGate:
    # index bits: j = (q1_value << 1) | q0_value
    return PermutationGate([0, 2, 1, 3], [1, 1, 1, 1], (q0, q1))


def rzz(theta: float, q0: int, q1: int) -> PermutationGate:
    """exp(-i theta/2 Z(q0) Z(q1)) as a two-qubit diagonal."""
    ph = cmath.exp(0.5j * theta)
    return PermutationGate([0, 1, 2, 3], [1 / ph, ph, ph, 1 / ph], (q0, q1))


def unitary(matrix: np.ndarray, targets, controls=()) -> DenseGate:
    return DenseGate(matrix, tuple(targets), tuple(controls))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian with phase fix."""
    zmat = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(zmat)
    d = np.diagonal(r)
    return q * (d / np.abs(d))
