"""Matrix-product-state circuit simulation built on the gate-split primitive.

Sites are rank-3 arrays (left bond, physical=2, right bond); site k holds
qubit k, boundary bonds have extent 1.  One-qubit gates contract into their
site; adjacent two-qubit gates go through :func:`duetsim.approx.gate_split`
(reduced algorithm) after the orthogonality center is moved next to them;
non-adjacent targets are routed with swap gates at D^3 cost per hop.
"""

from __future__ import annotations

import json
import struct
from dataclasses import replace

import numpy as np

from .approx import SvdPolicy, gate_split
from .core import InvalidArgumentError
from .fusion import expand_gate
from .gates import Gate
from .tn.model import Tensor

_SWAP4 = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128
)


class MPSState:
    def __init__(self, sites: list[np.ndarray], policy: SvdPolicy | None = None):
        self.sites = [np.asarray(s, dtype=np.complex128) for s in sites]
        self.policy = policy or SvdPolicy()
        self.center: int | None = None
        self._validate()

    def _validate(self):
        n = len(self.sites)
        if n < 1:
            raise InvalidArgumentError("empty MPS")
        if self.sites[0].shape[0] != 1 or self.sites[-1].shape[2] != 1:
            raise InvalidArgumentError("boundary bonds must have extent 1")
        for k in range(n - 1):
            if self.sites[k].shape[2] != self.sites[k + 1].shape[0]:
                raise InvalidArgumentError(f"bond mismatch between sites {k} and {k+1}")
            if self.sites[k].shape[1] != 2:
                raise InvalidArgumentError("physical extent must be 2")

    @classmethod
    def zero_state(cls, num_qubits: int, policy: SvdPolicy | None = None) -> "MPSState":
        site = np.zeros((1, 2, 1), dtype=np.complex128)
        site[0, 0, 0] = 1.0
        return cls([site.copy() for _ in range(num_qubits)], policy)

    @property
    def num_qubits(self) -> int:
        return len(self.sites)

    def bond_dims(self) -> list[int]:
        return [s.shape[2] for s in self.sites[:-1]]

    def norm_squared(self) -> float:
        env = np.ones((1, 1), dtype=np.complex128)
        for s in self.sites:
            env = np.einsum("ab,apc,bpd->cd", env, s.conj(), s)
        return float(env[0, 0].real)

    # -- canonicalization --------------------------------------------------

    def _qr_step_right(self, k: int) -> None:
        dl, p, dr = self.sites[k].shape
        mat = self.sites[k].reshape(dl * p, dr)
        q, r = np.linalg.qr(mat, mode="reduced")
        self.sites[k] = q.reshape(dl, p, q.shape[1])
        self.sites[k + 1] = np.einsum("rb,bpd->rpd", r, self.sites[k + 1])

    def _qr_step_left(self, k: int) -> None:
        dl, p, dr = self.sites[k].shape
        mat = self.sites[k].reshape(dl, p * dr)
        q, r = np.linalg.qr(mat.T, mode="reduced")
        self.sites[k] = q.T.reshape(q.shape[1], p, dr)
        self.sites[k - 1] = np.einsum("apb,rb->apr", self.sites[k - 1], r)

    def canonicalize_to(self, site: int) -> None:
        """QR sweeps making every site left (right) of ``site`` a left-
        (right-) isometry."""
        if not 0 <= site < self.num_qubits:
            raise InvalidArgumentError(f"site {site} out of range")
        lo = 0 if self.center is None else min(self.center, site)
        hi = self.num_qubits - 1 if self.center is None else max(self.center, site)
        for k in range(lo, site):
            self._qr_step_right(k)
        for k in range(hi, site, -1):
            self._qr_step_left(k)
        self.center = site

    # -- gate application ----------------------------------------------------

    def apply_gate(self, g: Gate, policy: SvdPolicy | None = None) -> None:
        qubits = sorted(set(g.qubits))
        if len(qubits) > 2:
            raise InvalidArgumentError("MPS gates act on at most 2 qubits (incl. controls)")
        for q in qubits:
            if not 0 <= q < self.num_qubits:
                raise InvalidArgumentError(f"qubit {q} out of range")
        if len(qubits) == 1:
            mat = expand_gate(g, qubits)
            self.sites[qubits[0]] = np.einsum(
                "qp,lpr->lqr", mat, self.sites[qubits[0]]
            )
            return
        q_lo, q_hi = qubits
        mat = expand_gate(g, [q_lo, q_hi])
        pol = policy or self.policy
        for k in range(q_hi, q_lo + 1, -1):
            self._apply_two_site(k - 1, _SWAP4, pol)
        self._apply_two_site(q_lo, mat, pol)
        for k in range(q_lo + 1, q_hi):
            self._apply_two_site(k, _SWAP4, pol)

    def _apply_two_site(self, i: int, mat4: np.ndarray, policy: SvdPolicy) -> None:
        """Apply a 4x4 matrix to sites (i, i+1); bit 0 of the matrix index is
        site i.  Moves the orthogonality center to i+1."""
        self.canonicalize_to(i)
        a = Tensor(("_l", "_pa", "_m"), self.sites[i])
        b = Tensor(("_m", "_pb", "_r"), self.sites[i + 1])
        # matrix reshape axes: (out_hi, out_lo, in_hi, in_lo)
        g4 = mat4.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2)
        gate = Tensor(("_pa'", "_pb'", "_pa", "_pb"), g4)
        pol = replace(policy, partition="to_v")
        a2, b2, _ = gate_split(a, b, gate, algorithm="reduced", policy=pol)
        self.sites[i] = _site_array(a2, "_l", "_pa", "_m")
        self.sites[i + 1] = _site_array(b2, "_m", "_pb", "_r")
        self.center = i + 1

    def run(self, gates) -> None:
        for g in gates:
            self.apply_gate(g)

    # -- readout --------------------------------------------------------------

    def amplitude(self, bits) -> complex:
        """Amplitude of a basis state; ``bits`` is an int (bit q = qubit q)
        or a sequence of per-qubit bits."""
        if isinstance(bits, (int, np.integer)):
            bits = [(int(bits) >> q) & 1 for q in range(self.num_qubits)]
        if len(bits) != self.num_qubits:
            raise InvalidArgumentError("bitstring length mismatch")
        env = np.ones((1,), dtype=np.complex128)
        for k, b in enumerate(bits):
            env = env @ self.sites[k][:, int(b), :]
        return complex(env[0])

    def to_statevector(self) -> np.ndarray:
        """Dense amplitudes, little-endian (index bit q = qubit q)."""
        acc = self.sites[0].reshape(2, -1)  # (flat bits, right bond)
        for k in range(1, self.num_qubits):
            acc = np.einsum("jD,DpE->pjE", acc, self.sites[k]).reshape(
                2 ** (k + 1), self.sites[k].shape[2]
            )
        return acc[:, 0].copy()

    def sample(self, shots: int, seed: int = 0) -> list[str]:
        """Sequential conditional sampling; character j of each string is
        qubit (n-1-j), matching the state-vector sampler's default order."""
        if shots < 1:
            raise InvalidArgumentError("shots must be >= 1")
        self.canonicalize_to(0)
        norm = np.sqrt(self.norm_squared())
        rng = np.random.Generator(np.random.Philox(key=seed))
        variates = rng.random((shots, self.num_qubits))
        results = []
        for s in range(shots):
            msg = np.ones((1,), dtype=np.complex128) / norm
            bits = []
            for k in range(self.num_qubits):
                branch0 = msg @ self.sites[k][:, 0, :]
                branch1 = msg @ self.sites[k][:, 1, :]
                p0 = float(np.vdot(branch0, branch0).real)
                p1 = float(np.vdot(branch1, branch1).real)
                total = p0 + p1
                if total < 1e-300:
                    raise InvalidArgumentError("state norm vanished during sampling")
                if variates[s, k] < p0 / total:
                    bits.append(0)
                    msg = branch0 / np.sqrt(p0)
                else:
                    bits.append(1)
                    msg = branch1 / np.sqrt(p1)
            results.append("".join(str(b) for b in reversed(bits)))
        return results

    def fidelity_with(self, amplitudes: np.ndarray) -> float:
        """|<phi|psi>|^2 / (<phi|phi><psi|psi>) against a dense state."""
        mine = self.to_statevector()
        overlap = np.vdot(amplitudes, mine)
        denom = np.vdot(amplitudes, amplitudes).real * np.vdot(mine, mine).real
        return float(abs(overlap) ** 2 / denom)

    # -- serialization ---------------------------------------------------------

    def save(self, path) -> None:
        header = json.dumps(
            {
                "version": 1,
                "num_qubits": self.num_qubits,
                "shapes": [list(s.shape) for s in self.sites],
            }
        ).encode()
        with open(path, "wb") as fh:
            fh.write(struct.pack("<Q", len(header)))
            fh.write(header)
            for s in self.sites:
                fh.write(np.ascontiguousarray(s, dtype="<c16").tobytes())

    @classmethod
    def load(cls, path) -> "MPSState":
        with open(path, "rb") as fh:
            (hlen,) = struct.unpack("<Q", fh.read(8))
            header = json.loads(fh.read(hlen))
            sites = []
            for shape in header["shapes"]:
                count = int(np.prod(shape))
                raw = np.frombuffer(fh.read(16 * count), dtype="<c16")
                sites.append(raw.reshape(shape).astype(np.complex128))
        return cls(sites)


def _site_array(t: Tensor, l: str, p: str, r: str) -> np.ndarray:
    perm = [t.labels.index(x) for x in (l, p, r)]
    return np.ascontiguousarray(np.transpose(t.data, perm))


def run_circuit_mps(
    gates, num_qubits: int, max_bond: int | None = None, policy: SvdPolicy | None = None
) -> MPSState:
    """Apply a gate list to |0...0> under an optional bond cap."""
    if policy is None:
        policy = SvdPolicy(max_extent=max_bond, renormalize=max_bond is not None)
    mps = MPSState.zero_state(num_qubits, policy)
    mps.run(gates)
    return mps
