"""Single-segment state-vector engine.

All mutating kernels operate in place on the amplitude array through numpy
views, allocating scratch only for the gathered target block.  Qubit-addressed
operations resolve logical qubits to physical index bits through ``bit_map``,
which only changes under :meth:`StateVector.swap_index_bits`.
"""

from __future__ import annotations

import struct
from collections.abc import Sequence

import numpy as np

from .core import InvalidArgumentError, check_swap_pairs, norm_squared
from .gates import DenseGate, Gate, PauliString, PermutationGate

_DEGENERATE_NORM = 1e-12


# ---------------------------------------------------------------------------
# Raw kernels on amplitude arrays.  ``bits`` are physical index-bit positions.


def _controlled_subview(view: np.ndarray, n: int, control_bits: Sequence[tuple[int, int]]):
    """Slice the (2,)*n view down to the control-satisfied subcube."""
    idx: list[object] = [slice(None)] * n
    for bit, val in control_bits:
        idx[n - 1 - bit] = val
    return view[tuple(idx)]


def _gather_axes(n: int, target_bits: Sequence[int], control_bits: Sequence[tuple[int, int]]):
    """Axis positions of each target bit inside the control-reduced view."""
    ctrl = sorted(n - 1 - b for b, _ in control_bits)
    axes = []
    for bit in target_bits:
        axis = n - 1 - bit
        axes.append(axis - sum(1 for c in ctrl if c < axis))
    return axes


def apply_dense_bits(
    amps: np.ndarray,
    n: int,
    matrix: np.ndarray,
    target_bits: Sequence[int],
    control_bits: Sequence[tuple[int, int]] = (),
) -> None:
    """Multiply every control-satisfied target block by ``matrix`` in place."""
    k = len(target_bits)
    view = amps.reshape((2,) * n)
    sub = _controlled_subview(view, n, control_bits)
    axes = _gather_axes(n, target_bits, control_bits)
    # order target axes so the flattened leading index equals the gate index
    moved = np.moveaxis(sub, axes, [k - 1 - t for t in range(k)])
    rest = moved.shape[k:]
    gathered = moved.reshape(1 << k, -1)
    moved[...] = (matrix @ gathered).reshape((2,) * k + rest)


def apply_permutation_bits(
    amps: np.ndarray,
    n: int,
    permutation: np.ndarray,
    diagonal: np.ndarray,
    target_bits: Sequence[int],
    control_bits: Sequence[tuple[int, int]] = (),
) -> None:
    """Generalized-permutation application: out[perm[j]] = diag[j] * in[j]."""
    k = len(target_bits)
    view = amps.reshape((2,) * n)
    sub = _controlled_subview(view, n, control_bits)
    axes = _gather_axes(n, target_bits, control_bits)
    moved = np.moveaxis(sub, axes, [k - 1 - t for t in range(k)])
    rest = moved.shape[k:]
    gathered = moved.reshape(1 << k, -1)
    out = np.empty_like(gathered)
    out[permutation] = diagonal[:, None] * gathered
    moved[...] = out.reshape((2,) * k + rest)


def apply_pauli_product_bits(
    amps: np.ndarray, n: int, factors: Sequence[tuple[int, str]]
) -> None:
    """Apply a product of single-qubit Paulis in place (unit coefficient)."""
    view = amps.reshape((2,) * n)
    for bit, pauli in factors:
        axis = n - 1 - bit
        lo = tuple(0 if a == axis else slice(None) for a in range(n))
        hi = tuple(1 if a == axis else slice(None) for a in range(n))
        if pauli == "I":
            continue
        elif pauli == "X":
            tmp = view[lo].copy()
            view[lo] = view[hi]
            view[hi] = tmp
        elif pauli == "Y":
            tmp = view[lo].copy()
            view[lo] = -1j * view[hi]
            view[hi] = 1j * tmp
        elif pauli == "Z":
            view[hi] *= -1


def marginal_probabilities_bits(amps: np.ndarray, n: int, bits: Sequence[int]) -> np.ndarray:
    """Marginal distribution over the listed bits; entry o has bit j = bits[j]."""
    k = len(bits)
    probs = (amps.real * amps.real + amps.imag * amps.imag).reshape((2,) * n)
    axes = [n - 1 - b for b in bits]
    moved = np.moveaxis(probs, axes, [k - 1 - t for t in range(k)])
    return moved.reshape(1 << k, -1).sum(axis=1)


# ---------------------------------------------------------------------------


class StateVector:
    """Length-2^n complex amplitude array with a qubit -> index-bit map."""

    def __init__(self, num_qubits: int, dtype=np.complex128):
        if num_qubits < 1:
            raise InvalidArgumentError("need at least one qubit")
        self.num_qubits = num_qubits
        self.amplitudes = np.zeros(1 << num_qubits, dtype=dtype)
        self.amplitudes[0] = 1.0
        self.bit_map = list(range(num_qubits))

    @classmethod
    def from_amplitudes(cls, amps: np.ndarray, copy: bool = True) -> "StateVector":
        amps = np.asarray(amps)
        n = int(amps.size).bit_length() - 1
        if amps.size != 1 << n:
            raise InvalidArgumentError("amplitude length must be a power of two")
        sv = cls.__new__(cls)
        sv.num_qubits = n
        sv.amplitudes = amps.copy() if copy else amps
        sv.bit_map = list(range(n))
        return sv

    # -- helpers ----------------------------------------------------------

    def _bits(self, qubits: Sequence[int]) -> list[int]:
        for q in qubits:
            if not (0 <= q < self.num_qubits):
                raise InvalidArgumentError(f"qubit {q} out of range")
        return [self.bit_map[q] for q in qubits]

    def _control_bits(self, controls) -> list[tuple[int, int]]:
        return [(self.bit_map[q], v) for q, v in controls]

    def norm_squared(self) -> float:
        return norm_squared(self.amplitudes)

    def copy(self) -> "StateVector":
        sv = StateVector.__new__(StateVector)
        sv.num_qubits = self.num_qubits
        sv.amplitudes = self.amplitudes.copy()
        sv.bit_map = list(self.bit_map)
        return sv

    def logical_amplitudes(self) -> np.ndarray:
        """Amplitudes reordered so bit q of the index is qubit q (identity map)."""
        if self.bit_map == list(range(self.num_qubits)):
            return self.amplitudes.copy()
        return self.access(self.bit_map)

    # -- Table-style primitives -------------------------------------------

    def apply(self, g: Gate) -> None:
        if isinstance(g, PermutationGate):
            self.apply_generalized_permutation(g)
        else:
            self.apply_matrix(g)

    def apply_matrix(self, g: DenseGate) -> None:
        apply_dense_bits(
            self.amplitudes,
            self.num_qubits,
            np.asarray(g.matrix, dtype=self.amplitudes.dtype),
            self._bits(g.targets),
            self._control_bits(g.controls),
        )

    def apply_generalized_permutation(self, g: PermutationGate) -> None:
        apply_permutation_bits(
            self.amplitudes,
            self.num_qubits,
            g.permutation,
            np.asarray(g.diagonal, dtype=self.amplitudes.dtype),
            self._bits(g.targets),
            self._control_bits(g.controls),
        )

    def apply_pauli_rotation(self, theta: float, pauli: PauliString) -> None:
        """In place: sv <- cos(theta/2) sv - i sin(theta/2) (P sv)."""
        if not pauli.factors:
            raise InvalidArgumentError("empty Pauli string")
        rotated = self.amplitudes.copy()
        apply_pauli_product_bits(
            rotated, self.num_qubits, [(self.bit_map[q], p) for q, p in pauli.factors]
        )
        if pauli.coefficient != 1.0:
            rotated *= pauli.coefficient
        self.amplitudes *= np.cos(theta / 2)
        self.amplitudes -= 1j * np.sin(theta / 2) * rotated

    def probabilities(self, qubits: Sequence[int]) -> np.ndarray:
        """Marginal outcome distribution; entry o has bit j = value of qubits[j]."""
        if len(set(qubits)) != len(qubits):
            raise InvalidArgumentError("qubits must be distinct")
        return marginal_probabilities_bits(self.amplitudes, self.num_qubits, self._bits(qubits))

    def measure(self, qubits: Sequence[int], random_value: float, collapse: bool = True) -> int:
        """Inverse-CDF measurement of the listed qubits.

        Returns the outcome integer (bit j = value of qubits[j]).  With
        ``collapse`` the inconsistent amplitudes are zeroed and the vector
        renormalized.
        """
        probs = self.probabilities(qubits)
        total = probs.sum()
        if total < _DEGENERATE_NORM:
            raise InvalidArgumentError("state norm below 1e-12; cannot measure")
        cdf = np.cumsum(probs / total)
        outcome = int(np.searchsorted(cdf, random_value, side="right"))
        outcome = min(outcome, len(probs) - 1)
        if collapse:
            view = self.amplitudes.reshape((2,) * self.num_qubits)
            idx: list[object] = [slice(None)] * self.num_qubits
            for j, q in enumerate(qubits):
                axis = self.num_qubits - 1 - self.bit_map[q]
                idx[axis] = 1 - ((outcome >> j) & 1)
                view[tuple(idx)] = 0.0
                idx[axis] = slice(None)
            self.amplitudes /= np.sqrt(self.norm_squared())
        return outcome

    def expectation(self, obs: DenseGate | Sequence[PauliString]) -> complex:
        """<psi|O|psi> without modifying the state."""
        if isinstance(obs, DenseGate):
            work = self.copy()
            work.apply_matrix(obs)
            return complex(np.vdot(self.amplitudes, work.amplitudes))
        total = 0.0 + 0.0j
        for pauli in obs:
            rotated = self.amplitudes.copy()
            apply_pauli_product_bits(
                rotated, self.num_qubits, [(self.bit_map[q], p) for q, p in pauli.factors]
            )
            total += pauli.coefficient * complex(np.vdot(self.amplitudes, rotated))
        return total

    def sample(self, shots: int, qubit_order: Sequence[int] | None = None, seed: int = 0) -> list[str]:
        """Draw ``shots`` bitstrings without collapsing the state.

        Two-phase scheme: precompute the cumulative distribution once, then
        map counter-based uniform variates through the inverse CDF.  Character
        j of each returned string is the value of ``qubit_order[j]``; the
        default order is (q_{n-1}, ..., q_0).
        """
        if shots < 1:
            raise InvalidArgumentError("shots must be >= 1")
        if qubit_order is None:
            qubit_order = list(range(self.num_qubits - 1, -1, -1))
        probs = (self.amplitudes.real ** 2 + self.amplitudes.imag ** 2)
        cdf = np.cumsum(probs)
        cdf /= cdf[-1]
        rng = np.random.Generator(np.random.Philox(key=seed))
        variates = rng.random(shots)
        outcomes = np.searchsorted(cdf, variates, side="right")
        np.clip(outcomes, 0, len(probs) - 1, out=outcomes)
        bits = self._bits(qubit_order)
        rows = [(outcomes >> b) & 1 for b in bits]
        return ["".join(str(int(r[i])) for r in rows) for i in range(shots)]

    def access(self, bit_ordering: Sequence[int], begin: int = 0, end: int | None = None) -> np.ndarray:
        """Copy out amplitudes re-indexed by ``bit_ordering``.

        Output index bit b reads current index bit ``bit_ordering[b]``.
        """
        n = self.num_qubits
        if sorted(bit_ordering) != list(range(n)):
            raise InvalidArgumentError("bit_ordering must be a permutation of all index bits")
        if end is None:
            end = 1 << n
        if not (0 <= begin < end <= 1 << n):
            raise InvalidArgumentError(f"bad range [{begin}, {end})")
        view = self.amplitudes.reshape((2,) * n)
        # output axis for bit b is n-1-b and reads input axis n-1-ordering[b]
        perm = [n - 1 - bit_ordering[n - 1 - a] for a in range(n)]
        reordered = view.transpose(perm).reshape(-1)
        return reordered[begin:end].copy()

    def access_set(self, bit_ordering: Sequence[int], begin: int, values: np.ndarray) -> None:
        """Setter counterpart of :meth:`access`."""
        n = self.num_qubits
        if sorted(bit_ordering) != list(range(n)):
            raise InvalidArgumentError("bit_ordering must be a permutation of all index bits")
        values = np.asarray(values, dtype=self.amplitudes.dtype)
        end = begin + values.size
        if not (0 <= begin < end <= 1 << n):
            raise InvalidArgumentError("range exceeds state size")
        ordinals = np.arange(begin, end, dtype=np.int64)
        src = np.zeros_like(ordinals)
        for b in range(n):
            src |= ((ordinals >> b) & 1) << bit_ordering[b]
        self.amplitudes[src] = values

    def swap_index_bits(self, pairs: Sequence[tuple[int, int]]) -> None:
        """Physically exchange index-bit pairs; updates bit_map so the
        represented logical state is unchanged."""
        check_swap_pairs(pairs)
        n = self.num_qubits
        for a, b in pairs:
            if a >= n or b >= n:
                raise InvalidArgumentError(f"bit pair ({a}, {b}) exceeds {n} qubits")
        perm = list(range(n))
        for a, b in pairs:
            perm[a], perm[b] = perm[b], perm[a]
        axes = [n - 1 - perm[n - 1 - i] for i in range(n)]
        view = self.amplitudes.reshape((2,) * n)
        self.amplitudes = np.ascontiguousarray(view.transpose(axes)).reshape(-1)
        swapped = dict()
        for a, b in pairs:
            swapped[a], swapped[b] = b, a
        self.bit_map = [swapped.get(bit, bit) for bit in self.bit_map]

    # -- serialization ------------------------------------------------------

    def dump(self, path) -> None:
        """Raw format: 8-byte little-endian qubit count, then interleaved
        (re, im) float64 pairs in logical order."""
        data = self.logical_amplitudes().astype(np.complex128)
        with open(path, "wb") as fh:
            fh.write(struct.pack("<Q", self.num_qubits))
            interleaved = np.empty(2 * data.size, dtype="<f8")
            interleaved[0::2] = data.real
            interleaved[1::2] = data.imag
            fh.write(interleaved.tobytes())

    @classmethod
    def load(cls, path) -> "StateVector":
        with open(path, "rb") as fh:
            (n,) = struct.unpack("<Q", fh.read(8))
            raw = np.frombuffer(fh.read(), dtype="<f8")
        if raw.size != 2 << n:
            raise InvalidArgumentError("file length does not match qubit count")
        amps = raw[0::2] + 1j * raw[1::2]
        return cls.from_amplitudes(amps.astype(np.complex128), copy=False)


def run_circuit_sv(gates: Sequence[Gate], num_qubits: int, dtype=np.complex128) -> StateVector:
    """Apply a gate list to |0...0> and return the resulting state."""
    sv = StateVector(num_qubits, dtype=dtype)
    for g in gates:
        sv.apply(g)
    return sv
