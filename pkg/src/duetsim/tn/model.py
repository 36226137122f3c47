"""Tensor network representation, einsum parsing, pairwise contraction.

Modes are labelled by strings.  Einsum expressions use single-character
labels or bracketed multi-character labels, e.g. ``"a[bond],[bond]c->ac"``.
A label may appear on more than two tensors (hyper-edge); it is summed at
the pairwise contraction where the last tensor carrying it participates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..core import InvalidArgumentError


@dataclass(frozen=True)
class Mode:
    label: str
    extent: int

    def __post_init__(self):
        if self.extent < 1:
            raise InvalidArgumentError(f"mode {self.label!r} has extent {self.extent}")


@dataclass
class Tensor:
    labels: tuple[str, ...]
    data: np.ndarray | None = None
    constant: bool = False

    def __post_init__(self):
        self.labels = tuple(self.labels)
        if len(set(self.labels)) != len(self.labels):
            raise InvalidArgumentError(f"repeated label within one tensor: {self.labels}")
        if self.data is not None:
            self.data = np.asarray(self.data)
            if self.data.ndim != len(self.labels):
                raise InvalidArgumentError(
                    f"rank {self.data.ndim} data bound to {len(self.labels)} labels"
                )

    @property
    def size(self) -> int:
        if self.data is not None:
            return int(self.data.size)
        return 0


@dataclass
class PairwiseCost:
    flops: int  # multiply-add count: product of extents over the union
    intermediate_size: int  # elements of the result


class TensorNetwork:
    def __init__(self, tensors: list[Tensor], output_modes, extents: dict[str, int]):
        self.tensors = list(tensors)
        self.output_modes = tuple(output_modes)
        self.extents = dict(extents)
        self.cache_generation = 0
        self._validate()

    def _validate(self):
        present: set[str] = set()
        for i, t in enumerate(self.tensors):
            for ax, label in enumerate(t.labels):
                if label not in self.extents:
                    raise InvalidArgumentError(f"label {label!r} has no extent")
                if t.data is not None and t.data.shape[ax] != self.extents[label]:
                    raise InvalidArgumentError(
                        f"tensor {i} axis {ax} ({label!r}): extent "
                        f"{t.data.shape[ax]} != {self.extents[label]}"
                    )
            present |= set(t.labels)
        for label in self.output_modes:
            if label not in present:
                raise InvalidArgumentError(f"output label {label!r} not on any tensor")

    @property
    def num_tensors(self) -> int:
        return len(self.tensors)

    def bind(self, index: int, data: np.ndarray) -> None:
        t = self.tensors[index]
        self.tensors[index] = Tensor(t.labels, data, t.constant)
        if t.constant:
            # constant data changed: every cached constant intermediate is stale
            self.cache_generation += 1
        self._validate()

    def mark_constant(self, tensor_ids, constant: bool = True) -> None:
        for i in tensor_ids:
            self.tensors[i].constant = constant
        self.cache_generation += 1

    def extent_of(self, label: str) -> int:
        return self.extents[label]

    def size_of(self, labels) -> int:
        s = 1
        for l in labels:
            s *= self.extents[l]
        return s

    # -- serialization -----------------------------------------------------

    def to_json_dict(self, include_data: bool = True) -> dict:
        tensors = []
        for t in self.tensors:
            entry = {
                "labels": list(t.labels),
                "extents": [self.extents[l] for l in t.labels],
                "constant": t.constant,
            }
            if include_data and t.data is not None:
                flat = np.ascontiguousarray(t.data, dtype=np.complex128).reshape(-1)
                interleaved = np.empty(2 * flat.size)
                interleaved[0::2] = flat.real
                interleaved[1::2] = flat.imag
                entry["data"] = interleaved.tolist()
            else:
                entry["data"] = None
            tensors.append(entry)
        return {"tensors": tensors, "output": list(self.output_modes)}

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)

    @classmethod
    def from_json_dict(cls, doc: dict, base_dir=None) -> "TensorNetwork":
        extents: dict[str, int] = {}
        tensors = []
        for entry in doc["tensors"]:
            labels = tuple(entry["labels"])
            for label, ext in zip(labels, entry["extents"]):
                if extents.setdefault(label, int(ext)) != int(ext):
                    raise InvalidArgumentError(f"inconsistent extent for {label!r}")
            data = entry.get("data")
            if isinstance(data, dict) and "ref" in data:
                import pathlib

                p = pathlib.Path(base_dir or ".") / data["ref"]
                raw = np.fromfile(p, dtype="<f8")
                arr = (raw[0::2] + 1j * raw[1::2]).reshape(
                    [int(e) for e in entry["extents"]]
                )
            elif data is not None:
                raw = np.asarray(data, dtype=float)
                arr = (raw[0::2] + 1j * raw[1::2]).reshape(
                    [int(e) for e in entry["extents"]]
                )
            else:
                arr = None
            tensors.append(Tensor(labels, arr, bool(entry.get("constant", False))))
        return cls(tensors, tuple(doc["output"]), extents)

    @classmethod
    def load(cls, path) -> "TensorNetwork":
        import pathlib

        p = pathlib.Path(path)
        with open(p) as fh:
            return cls.from_json_dict(json.load(fh), base_dir=p.parent)


# ---------------------------------------------------------------------------
# einsum expression handling


def parse_labels(term: str) -> tuple[str, ...]:
    labels: list[str] = []
    i = 0
    while i < len(term):
        c = term[i]
        if c == "[":
            j = term.index("]", i)
            labels.append(term[i + 1 : j])
            i = j + 1
        elif c.isspace():
            i += 1
        else:
            labels.append(c)
            i += 1
    return tuple(labels)


def format_label(label: str) -> str:
    return label if len(label) == 1 else f"[{label}]"


def format_expression(terms, output) -> str:
    lhs = ",".join("".join(format_label(l) for l in t) for t in terms)
    rhs = "".join(format_label(l) for l in output)
    return f"{lhs}->{rhs}"


def parse_einsum(expr: str, extents: dict[str, int]) -> TensorNetwork:
    """Build a network with one (unbound) tensor slot per comma-separated term."""
    if "->" not in expr:
        raise InvalidArgumentError("expression must have an explicit '->' output")
    lhs, rhs = expr.split("->")
    terms = [parse_labels(t) for t in lhs.split(",")]
    output = parse_labels(rhs)
    known = {l for t in terms for l in t}
    for l in output:
        if l not in known:
            raise InvalidArgumentError(f"unknown output label {l!r}")
    for l in known:
        if l not in extents:
            raise InvalidArgumentError(f"no extent given for label {l!r}")
    tensors = [Tensor(t) for t in terms]
    used_extents = {l: int(extents[l]) for l in known}
    return TensorNetwork(tensors, output, used_extents)


def network_from_arrays(expr: str, arrays) -> TensorNetwork:
    """Parse an expression and bind operand arrays, inferring extents."""
    if "->" not in expr:
        raise InvalidArgumentError("expression must have an explicit '->' output")
    lhs, rhs = expr.split("->")
    terms = [parse_labels(t) for t in lhs.split(",")]
    output = parse_labels(rhs)
    arrays = [np.asarray(a) for a in arrays]
    if len(arrays) != len(terms):
        raise InvalidArgumentError(f"{len(terms)} terms but {len(arrays)} operands")
    extents: dict[str, int] = {}
    for term, arr in zip(terms, arrays):
        if arr.ndim != len(term):
            raise InvalidArgumentError(f"operand rank {arr.ndim} != term {term}")
        for label, ext in zip(term, arr.shape):
            if extents.setdefault(label, ext) != ext:
                raise InvalidArgumentError(f"inconsistent extents for label {label!r}")
    tensors = [Tensor(t, a) for t, a in zip(terms, arrays)]
    return TensorNetwork(tensors, output, extents)


# ---------------------------------------------------------------------------
# pairwise contraction


def pairwise_cost(labels_a, labels_b, keep, extents: dict[str, int]) -> PairwiseCost:
    union = set(labels_a) | set(labels_b)
    flops = 1
    for l in union:
        flops *= extents[l]
    size = 1
    for l in union & set(keep):
        size *= extents[l]
    return PairwiseCost(flops, size)


def contract_pair(a: Tensor, b: Tensor, keep, extents: dict[str, int]) -> Tensor:
    """Contract two tensors, summing every mode not in ``keep``.

    The result's modes are ordered canonically (sorted by label).
    """
    if a.data is None or b.data is None:
        raise InvalidArgumentError("contract_pair requires bound tensor data")
    union = set(a.labels) | set(b.labels)
    if not set(keep) <= union:
        raise InvalidArgumentError("keep set must be within the operands' modes")
    for l in set(a.labels) & set(b.labels):
        ia = a.labels.index(l)
        ib = b.labels.index(l)
        if a.data.shape[ia] != b.data.shape[ib]:
            raise InvalidArgumentError(f"extent mismatch on shared label {l!r}")
    result_labels = tuple(sorted(union & set(keep)))
    ids = {l: i for i, l in enumerate(sorted(union))}
    out = np.einsum(
        a.data,
        [ids[l] for l in a.labels],
        b.data,
        [ids[l] for l in b.labels],
        [ids[l] for l in result_labels],
        optimize=False,
    )
    return Tensor(result_labels, out)


def project_to_output(t: Tensor, output_modes, extents: dict[str, int]) -> Tensor:
    """Sum stray modes and reorder axes to the requested output order."""
    if t.data is None:
        raise InvalidArgumentError("unbound tensor")
    stray = [l for l in t.labels if l not in output_modes]
    data = t.data
    labels = list(t.labels)
    for l in stray:
        ax = labels.index(l)
        data = data.sum(axis=ax)
        labels.pop(ax)
    perm = [labels.index(l) for l in output_modes]
    return Tensor(tuple(output_modes), np.transpose(data, perm) if perm else data)
