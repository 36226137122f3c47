"""Independent brute-force oracles used to freeze expected values.

Everything here is deliberately written with a different algorithm than the
library: full 2^n x 2^n operators built from Kronecker products, explicit
loop-nest einsum, per-bit index permutation, subset-DP contraction cost.
Keep these slow and obvious.
"""

from __future__ import annotations

import itertools
from functools import reduce

import numpy as np

I2 = np.eye(2, dtype=np.complex128)

PAULIS = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def bit_permute_naive(index: int, swaps) -> int:
    """Per-bit reconstruction of the swapped index."""
    mapping = {}
    for a, b in swaps:
        mapping[a] = b
        mapping[b] = a
    out = 0
    for b in range(max(index.bit_length(), 1 + max((max(p) for p in swaps), default=0))):
        src = mapping.get(b, b)
        if (index >> src) & 1:
            out |= 1 << b
    return out


def kron_all(factors) -> np.ndarray:
    """Kronecker product, factor for the highest qubit first."""
    return reduce(np.kron, factors)


def single_qubit_operator(n: int, mat: np.ndarray, qubit: int) -> np.ndarray:
    """Expand a 1-qubit matrix to the full 2^n space (little-endian)."""
    factors = [I2] * n
    factors[n - 1 - qubit] = mat
    return kron_all(factors)


def full_operator(n: int, matrix: np.ndarray, targets, controls=()) -> np.ndarray:
    """Dense 2^n x 2^n operator for a controlled k-qubit gate.

    Built entry by entry from the definition: basis index bit q is the value
    of qubit q; rows with unsatisfied controls are identity.
    """
    dim = 1 << n
    k = len(targets)
    out = np.zeros((dim, dim), dtype=np.complex128)
    for col in range(dim):
        if any(((col >> q) & 1) != v for q, v in controls):
            out[col, col] = 1.0
            continue
        jin = 0
        for m, q in enumerate(targets):
            jin |= ((col >> q) & 1) << m
        base = col
        for m, q in enumerate(targets):
            base &= ~(1 << q)
        for jout in range(1 << k):
            row = base
            for m, q in enumerate(targets):
                row |= ((jout >> m) & 1) << q
            out[row, col] = matrix[jout, jin]
    return out


def pauli_string_operator(n: int, factors, coefficient=1.0) -> np.ndarray:
    mats = [I2] * n
    for q, p in factors:
        mats[n - 1 - q] = PAULIS[p]
    return coefficient * kron_all(mats)


def apply_full(op: np.ndarray, state: np.ndarray) -> np.ndarray:
    return op @ state


def marginal_naive(state: np.ndarray, n: int, qubits) -> np.ndarray:
    """Sum |amp|^2 over all basis indices, bucketed by the listed qubits."""
    out = np.zeros(1 << len(qubits))
    for idx in range(1 << n):
        o = 0
        for j, q in enumerate(qubits):
            o |= ((idx >> q) & 1) << j
        out[o] += abs(state[idx]) ** 2
    return out


def loop_einsum(terms: list[tuple[str, ...]], arrays, output: tuple[str, ...], extents):
    """Reference einsum: iterate every assignment of every label."""
    labels = sorted({l for t in terms for l in t} | set(output))
    shape_out = tuple(extents[l] for l in output)
    out = np.zeros(shape_out, dtype=np.complex128)
    for assignment in itertools.product(*(range(extents[l]) for l in labels)):
        env = dict(zip(labels, assignment))
        val = 1.0 + 0.0j
        for term, arr in zip(terms, arrays):
            val *= arr[tuple(env[l] for l in term)]
        out[tuple(env[l] for l in output)] += val
    return out


def pairwise_flops(labels_a, labels_b, extents) -> int:
    f = 1
    for l in set(labels_a) | set(labels_b):
        f *= extents[l]
    return f


def result_labels(labels_a, labels_b, other_terms, output):
    """Modes kept after contracting a pair, under einsum semantics."""
    alive = set(output)
    for t in other_terms:
        alive |= set(t)
    return tuple(sorted((set(labels_a) | set(labels_b)) & alive))


def optimal_contraction_flops(terms: list[tuple[str, ...]], output, extents) -> int:
    """Subset-DP minimum total multiply-add count over all binary trees."""
    nterms = len(terms)
    if nterms == 1:
        return 0
    label_ids = {}
    for t in terms:
        for l in t:
            label_ids.setdefault(l, len(label_ids))
    for l in output:
        label_ids.setdefault(l, len(label_ids))

    def to_mask(term):
        m = 0
        for l in term:
            m |= 1 << label_ids[l]
        return m

    term_masks = [to_mask(t) for t in terms]
    out_mask = to_mask(output)
    ext = [1] * len(label_ids)
    for l, i in label_ids.items():
        ext[i] = extents[l]

    def size_of(mask):
        s = 1
        i = 0
        while mask:
            if mask & 1:
                s *= ext[i]
            mask >>= 1
            i += 1
        return s

    full = (1 << nterms) - 1
    union_cache = {}

    def union_mask(subset):
        if subset in union_cache:
            return union_cache[subset]
        m = 0
        for i in range(nterms):
            if subset >> i & 1:
                m |= term_masks[i]
        union_cache[subset] = m
        return m

    def kept_mask(subset):
        outside = union_mask(full ^ subset) | out_mask
        return union_mask(subset) & outside

    best = {}
    for i in range(nterms):
        best[1 << i] = 0
    for size in range(2, nterms + 1):
        for subset in range(1, full + 1):
            if bin(subset).count("1") != size:
                continue
            cost_best = None
            sub = (subset - 1) & subset
            while sub:
                rest = subset ^ sub
                if sub < rest:  # each split once
                    a, b = sub, rest
                    flops = size_of(kept_mask(a) | kept_mask(b))
                    c = best[a] + best[b] + flops
                    if cost_best is None or c < cost_best:
                        cost_best = c
                sub = (sub - 1) & subset
            best[subset] = cost_best
    return best[full]


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return v / np.linalg.norm(v)


def random_gate_sequence(n: int, count: int, rng: np.random.Generator, max_arity: int = 3):
    """Random dense/diagonal/permutation gates for oracle comparisons."""
    from duetsim import gates as G

    seq = []
    for _ in range(count):
        arity = int(rng.integers(1, min(max_arity, n) + 1))
        targets = rng.choice(n, size=arity, replace=False).tolist()
        kind = rng.integers(0, 3)
        if kind == 0:
            seq.append(G.unitary(G.random_unitary(1 << arity, rng), targets))
        elif kind == 1:
            phases = np.exp(1j * rng.uniform(0, 2 * np.pi, 1 << arity))
            seq.append(G.PermutationGate(np.arange(1 << arity), phases, tuple(targets)))
        else:
            perm = rng.permutation(1 << arity)
            phases = np.exp(1j * rng.uniform(0, 2 * np.pi, 1 << arity))
            seq.append(G.PermutationGate(perm, phases, tuple(targets)))
    return seq


def gate_to_full(g, n: int) -> np.ndarray:
    from duetsim.gates import DenseGate

    if isinstance(g, DenseGate):
        return full_operator(n, g.matrix, g.targets, g.controls)
    return full_operator(n, g.to_matrix(), g.targets, g.controls)


def simulate_full(gates, n: int, state=None) -> np.ndarray:
    """Dense-operator circuit simulation: the 2^n x 2^n product oracle."""
    if state is None:
        state = np.zeros(1 << n, dtype=np.complex128)
        state[0] = 1.0
    for g in gates:
        state = gate_to_full(g, n) @ state
    return state


def random_network(
    rng: np.random.Generator,
    num_tensors: int = 8,
    max_rank: int = 4,
    extent_choices=(2, 3, 4),
    hyper_prob: float = 0.1,
    num_output: int = 1,
    bind: bool = True,
):
    """Random connected-ish tensor network for pathfinder/executor tests."""
    from duetsim.tn.model import Tensor, TensorNetwork

    labels_per_tensor = [[] for _ in range(num_tensors)]
    extents = {}
    output = []
    label_no = 0

    def fresh_label():
        nonlocal label_no
        label_no += 1
        return f"m{label_no}"

    # spanning chain keeps the network mostly connected
    for i in range(num_tensors - 1):
        l = fresh_label()
        extents[l] = int(rng.choice(extent_choices))
        labels_per_tensor[i].append(l)
        labels_per_tensor[i + 1].append(l)
    extra = max(0, int(num_tensors * 0.7))
    for _ in range(extra):
        k = 3 if rng.random() < hyper_prob else 2
        members = rng.choice(num_tensors, size=min(k, num_tensors), replace=False)
        if all(len(labels_per_tensor[m]) < max_rank for m in members):
            l = fresh_label()
            extents[l] = int(rng.choice(extent_choices))
            for m in members:
                labels_per_tensor[m].append(l)
    for _ in range(num_output):
        host = int(rng.integers(0, num_tensors))
        if len(labels_per_tensor[host]) < max_rank:
            l = fresh_label()
            extents[l] = int(rng.choice(extent_choices))
            labels_per_tensor[host].append(l)
            output.append(l)
    tensors = []
    for lbls in labels_per_tensor:
        shape = tuple(extents[l] for l in lbls)
        data = None
        if bind:
            data = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        tensors.append(Tensor(tuple(lbls), data))
    return TensorNetwork(tensors, tuple(output), extents)


def contract_tree_reference(tn, root):
    """Evaluate a contraction tree with contract_pair; independent of the
    executor's scheduling/caching."""
    from duetsim.tn.model import contract_pair, project_to_output

    def walk(node):
        if node.is_leaf:
            return tn.tensors[node.leaf]
        a = walk(node.left)
        b = walk(node.right)
        return contract_pair(a, b, set(node.labels), tn.extents)

    return project_to_output(walk(root), tn.output_modes, tn.extents)


def loop_contract_network(tn):
    """Full summation oracle over every index assignment."""
    terms = [t.labels for t in tn.tensors]
    arrays = [t.data for t in tn.tensors]
    return loop_einsum(terms, arrays, tn.output_modes, tn.extents)


def enumerate_all_trees(num_leaves: int):
    """All binary contraction trees as ssa pair lists."""
    def rec(items, next_id):
        if len(items) == 1:
            yield []
            return
        seen = set()
        for x in range(len(items)):
            for y in range(x + 1, len(items)):
                a, b = items[x], items[y]
                rest = [v for k, v in enumerate(items) if k not in (x, y)]
                for tail in rec(rest + [next_id], next_id + 1):
                    yield [(a, b)] + tail
    yield from rec(list(range(num_leaves)), num_leaves)
