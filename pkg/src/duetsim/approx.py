"""Tensor-level QR and truncated SVD, and the two-site gate split.

Decompositions are transpose-decompose-transpose: modes are partitioned into
a left and a right group, the tensor is matricized, factorized with LAPACK,
and the factors are reshaped back with a fresh bond mode.  Conventions fixed
for reproducibility: R (and the QR fallback inside gate split) carries a real
non-negative diagonal; each right-singular vector's leading entry is made
real non-negative.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import InvalidArgumentError
from .tn.model import Tensor, contract_pair

_DEGENERATE_RTOL = 1e-10


@dataclass
class SvdPolicy:
    max_extent: int | None = None
    abs_cutoff: float | None = None
    rel_cutoff: float | None = None
    partition: str | None = None  # to_u | to_v | split_sqrt
    renormalize: bool = False

    def __post_init__(self):
        for c in (self.abs_cutoff, self.rel_cutoff):
            if c is not None and c < 0:
                raise InvalidArgumentError("cutoffs must be >= 0")
        if self.partition not in (None, "to_u", "to_v", "split_sqrt"):
            raise InvalidArgumentError(f"unknown partition {self.partition!r}")


@dataclass
class DecompositionInfo:
    full_extent: int
    kept_extent: int
    discarded_weight: float  # sqrt(sum of discarded singular values squared)
    renorm_scale: float = 1.0


def _matricize(t: Tensor, left_modes, right_modes):
    left = tuple(left_modes)
    right = tuple(right_modes)
    if not left or not right:
        raise InvalidArgumentError("both sides of the mode partition must be non-empty")
    if sorted(left + right) != sorted(t.labels):
        raise InvalidArgumentError(
            f"partition {left}+{right} does not match tensor modes {t.labels}"
        )
    perm = [t.labels.index(l) for l in left + right]
    arr = np.transpose(t.data, perm)
    lshape = arr.shape[: len(left)]
    rshape = arr.shape[len(left) :]
    return arr.reshape(int(np.prod(lshape)), int(np.prod(rshape))), lshape, rshape


def _fresh_label(base: str, taken) -> str:
    if base not in taken:
        return base
    k = 0
    while f"{base}{k}" in taken:
        k += 1
    return f"{base}{k}"


def tensor_qr(
    t: Tensor, left_modes, right_modes, bond_label: str | None = None
) -> tuple[Tensor, Tensor]:
    """QR with orthonormal Q columns; R diagonal made real non-negative."""
    mat, lshape, rshape = _matricize(t, left_modes, right_modes)
    q, r = np.linalg.qr(mat, mode="reduced")
    d = np.diagonal(r)
    # unit phases of the diagonal; entries below the smallest normal float
    # keep phase 1 so the division cannot overflow or produce NaNs
    absd = np.abs(d)
    safe = absd > np.finfo(absd.dtype).tiny
    phase = np.ones(len(d), dtype=np.complex128)
    np.divide(d, absd, out=phase, where=safe)
    q = q * phase
    r = phase.conjugate()[:, None] * r
    bond = bond_label or _fresh_label("_qr", set(t.labels))
    k = q.shape[1]
    q_t = Tensor(tuple(left_modes) + (bond,), q.reshape(lshape + (k,)))
    r_t = Tensor((bond,) + tuple(right_modes), r.reshape((k,) + rshape))
    return q_t, r_t


def _robust_svd(mat: np.ndarray):
    """SVD with driver fallbacks.

    LAPACK's divide-and-conquer driver occasionally fails to converge on
    valid inputs; retry on the adjoint, then fall back to the slower but
    unconditionally stable gesvd driver.
    """
    try:
        return np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError:
        pass
    try:
        u, s, vh = np.linalg.svd(mat.conj().T, full_matrices=False)
        return vh.conj().T, s, u.conj().T
    except np.linalg.LinAlgError:
        pass
    from scipy.linalg import svd as scipy_svd

    return scipy_svd(mat, full_matrices=False, lapack_driver="gesvd")


def _truncation_count(s: np.ndarray, policy: SvdPolicy) -> int:
    k = len(s)
    if policy.abs_cutoff is not None:
        k = min(k, int(np.sum(s >= policy.abs_cutoff)))
    rel_cut_applied = False
    if policy.rel_cutoff is not None and len(s) and s[0] > 0:
        k_rel = int(np.sum(s >= policy.rel_cutoff * s[0]))
        if k_rel < k:
            k = k_rel
            rel_cut_applied = True
    if rel_cut_applied:
        # never split a degenerate group on a relative cutoff
        while 0 < k < len(s) and abs(s[k] - s[k - 1]) <= _DEGENERATE_RTOL * max(s[0], 1e-300):
            k += 1
    if policy.max_extent is not None:
        k = min(k, policy.max_extent)
    return k


def tensor_svd(
    t: Tensor,
    left_modes,
    right_modes,
    policy: SvdPolicy | None = None,
    bond_label: str | None = None,
) -> tuple[Tensor, np.ndarray, Tensor, DecompositionInfo]:
    """Exact or truncated SVD of a mode-partitioned tensor.

    Without a partition choice, U . diag(S) . V reconstructs the input.  With
    one, S is folded into U, V, or as sqrt(S) into both, and U . V
    reconstructs it.  ``info.discarded_weight`` is the Frobenius norm of the
    dropped part (Eckart-Young).
    """
    policy = policy or SvdPolicy()
    mat, lshape, rshape = _matricize(t, left_modes, right_modes)
    u, s, vh = _robust_svd(mat)
    full_extent = len(s)
    k = _truncation_count(s, policy)
    if k == 0:
        raise InvalidArgumentError("truncation policy discards every singular value")
    discarded = float(np.sqrt(np.sum(s[k:] ** 2)))
    u, s, vh = u[:, :k], s[:k].copy(), vh[:k]
    # gauge: leading entry of each right-singular vector real non-negative
    tiny = np.finfo(np.float64).tiny
    for i in range(k):
        row = vh[i]
        scale = np.abs(row).max()
        if scale <= tiny:
            continue
        nz = np.flatnonzero(np.abs(row) > max(1e-12 * scale, tiny))
        if nz.size:
            ph = row[nz[0]] / abs(row[nz[0]])
            vh[i] *= ph.conjugate()
            u[:, i] *= ph
    scale = 1.0
    if policy.renormalize:
        norm = float(np.linalg.norm(s))
        if norm > 0:
            scale = 1.0 / norm
            s *= scale
    if policy.partition == "to_u":
        u = u * s
    elif policy.partition == "to_v":
        vh = s[:, None] * vh
    elif policy.partition == "split_sqrt":
        rt = np.sqrt(s)
        u = u * rt
        vh = rt[:, None] * vh
    bond = bond_label or _fresh_label("_svd", set(t.labels))
    u_t = Tensor(tuple(left_modes) + (bond,), u.reshape(lshape + (k,)))
    v_t = Tensor((bond,) + tuple(right_modes), vh.reshape((k,) + rshape))
    info = DecompositionInfo(full_extent, k, discarded, scale)
    return u_t, s, v_t, info


# ---------------------------------------------------------------------------
# gate split


def _extents_of(*tensors: Tensor) -> dict[str, int]:
    out: dict[str, int] = {}
    for t in tensors:
        for l, e in zip(t.labels, t.data.shape):
            if out.setdefault(l, e) != e:
                raise InvalidArgumentError(f"incompatible extents for mode {l!r}")
    return out


def gate_split(
    a: Tensor,
    b: Tensor,
    gate: Tensor,
    algorithm: str = "direct",
    policy: SvdPolicy | None = None,
) -> tuple[Tensor, Tensor, DecompositionInfo]:
    """Factorize ``gate`` applied to two bonded tensors back onto them.

    ``gate`` has modes (pa_out, pb_out, pa_in, pb_in) where pa_in / pb_in are
    the physical modes of ``a`` / ``b``.  direct contracts everything and
    splits once; reduced QR-reduces both sides first so the SVD sees a
    smaller core.  The result keeps the original mode names: the new bond
    reuses the shared bond label and outputs are renamed to the inputs.
    """
    if algorithm not in ("direct", "reduced"):
        raise InvalidArgumentError(f"unknown algorithm {algorithm!r}")
    policy = policy or SvdPolicy()
    if policy.partition is None:
        policy = replace(policy, partition="split_sqrt")
    shared = set(a.labels) & set(b.labels)
    if len(shared) != 1:
        raise InvalidArgumentError(f"tensors must share exactly one bond, got {shared}")
    bond = shared.pop()
    if len(gate.labels) != 4:
        raise InvalidArgumentError("gate must have 4 modes (pa', pb', pa, pb)")
    pa_out, pb_out, pa_in, pb_in = gate.labels
    if pa_in not in a.labels or pb_in not in b.labels:
        raise InvalidArgumentError("gate input modes must live on a and b")
    ext = _extents_of(a, b, gate)
    if ext[pa_out] != ext[pa_in] or ext[pb_out] != ext[pb_in]:
        raise InvalidArgumentError("gate output extents must match its inputs")
    a_rest = tuple(l for l in a.labels if l not in (pa_in, bond))
    b_rest = tuple(l for l in b.labels if l not in (pb_in, bond))

    def rename(t: Tensor, mapping) -> Tensor:
        return Tensor(tuple(mapping.get(l, l) for l in t.labels), t.data)

    if algorithm == "direct" or not a_rest or not b_rest:
        theta = contract_pair(a, b, (set(a.labels) | set(b.labels)) - {bond}, ext)
        keep = (set(theta.labels) - {pa_in, pb_in}) | {pa_out, pb_out}
        theta = contract_pair(theta, gate, keep, ext)
        theta = rename(theta, {pa_out: pa_in, pb_out: pb_in})
        u, s, v, info = tensor_svd(
            theta, a_rest + (pa_in,), (pb_in,) + b_rest, policy, bond_label=bond
        )
        return _order_like(u, a.labels), _order_like(v, b.labels), info

    taken = set(a.labels) | set(b.labels) | set(gate.labels)
    ra_label = _fresh_label("_ra", taken)
    rb_label = _fresh_label("_rb", taken | {ra_label})
    qa, ra = tensor_qr(a, a_rest, (pa_in, bond), bond_label=ra_label)
    qb, rb = tensor_qr(b, b_rest, (pb_in, bond), bond_label=rb_label)
    ext = _extents_of(a, b, gate, ra, rb)
    core = contract_pair(ra, rb, {ra_label, pa_in, pb_in, rb_label}, ext)
    keep = {ra_label, pa_out, pb_out, rb_label}
    core = contract_pair(core, gate, keep, ext)
    core = rename(core, {pa_out: pa_in, pb_out: pb_in})
    u, s, v, info = tensor_svd(
        core, (ra_label, pa_in), (pb_in, rb_label), policy, bond_label=bond
    )
    a2 = contract_pair(qa, u, set(a_rest) | {pa_in, bond}, ext)
    b2 = contract_pair(v, qb, {bond, pb_in} | set(b_rest), ext)
    return _order_like(a2, a.labels), _order_like(b2, b.labels), info


def _order_like(t: Tensor, reference_labels) -> Tensor:
    """Permute modes to follow the reference ordering where possible."""
    want = [l for l in reference_labels if l in t.labels]
    want += [l for l in t.labels if l not in want]
    perm = [t.labels.index(l) for l in want]
    return Tensor(tuple(want), np.transpose(t.data, perm))
