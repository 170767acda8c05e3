"""Directed weighted graphs in CSR form and their row-normalized transition matrices."""

from __future__ import annotations

import gzip
import io
import math
import os
from dataclasses import dataclass, field
from typing import BinaryIO

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, GraphFormatError

__all__ = [
    "EdgeListFormat",
    "SparseGraph",
    "TransitionMatrix",
    "from_edges",
    "load_edge_list",
    "write_label_map",
    "row_normalize",
    "apply_transposed",
    "apply_forward",
]

_GZIP_MAGIC = b"\x1f\x8b"


@dataclass(frozen=True)
class EdgeListFormat:
    comment: str = "#"
    default_weight: float = 1.0


@dataclass(frozen=True, eq=False)
class SparseGraph:
    """Immutable adjacency in CSR form.

    ``labels[i]`` is the external label of dense node id ``i``.
    """

    adjacency: sp.csr_matrix
    labels: tuple[str, ...]
    out_degree_weight: np.ndarray = field(init=False)
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        a = self.adjacency
        if a.shape[0] != a.shape[1] or a.shape[0] != len(self.labels):
            raise DimensionError(
                f"adjacency shape {a.shape} does not match {len(self.labels)} labels"
            )
        deg = np.asarray(a.sum(axis=1)).ravel()
        deg.setflags(write=False)
        object.__setattr__(self, "out_degree_weight", deg)
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(self.labels)})

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def m(self) -> int:
        return self.adjacency.nnz

    def node_id(self, label) -> int:
        """Dense id of an external label; raises KeyError for unknown labels."""
        try:
            return self._index[str(label)]
        except KeyError:
            raise KeyError(f"unknown node label {label!r}") from None

    def undirected_neighbors(self) -> list[np.ndarray]:
        """Sorted neighbor ids of every node on the undirected view, self excluded."""
        sym = (self.adjacency + self.adjacency.T).tocsr()
        sym.sum_duplicates()
        out = []
        for i in range(self.n):
            row = sym.indices[sym.indptr[i]:sym.indptr[i + 1]]
            out.append(row[row != i])
        return out


def from_edges(src, dst, weight=None, n=None, labels=None) -> SparseGraph:
    """Build a graph from parallel integer arrays of dense node ids.

    Duplicate (src, dst) pairs are merged by summing their weights; zero-weight
    entries are dropped.
    """
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if src.shape != dst.shape:
        raise DimensionError("src and dst must have the same length")
    if weight is None:
        weight = np.ones(src.shape[0], dtype=np.float64)
    else:
        weight = np.asarray(weight, dtype=np.float64)
        if weight.shape != src.shape:
            raise DimensionError("weight must have the same length as src")
        if np.any(weight < 0) or not np.all(np.isfinite(weight)):
            raise ValueError("edge weights must be finite and nonnegative")
    if n is None:
        n = int(max(src.max(initial=-1), dst.max(initial=-1))) + 1
    if n == 0:
        raise GraphFormatError("empty graph")
    if src.size and (src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n):
        raise DimensionError(f"node ids must lie in [0, {n})")
    adj = sp.csr_matrix((weight, (src, dst)), shape=(n, n), dtype=np.float64)
    adj.sum_duplicates()
    adj.eliminate_zeros()
    adj.sort_indices()
    if labels is None:
        labels = tuple(str(i) for i in range(n))
    return SparseGraph(adj, tuple(str(lab) for lab in labels))


def _open_binary(source) -> tuple[BinaryIO, bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, "rb"), True
    return source, False


def load_edge_list(source, fmt: EdgeListFormat | None = None) -> SparseGraph:
    """Parse a whitespace-separated ``src dst [weight]`` edge list.

    ``source`` is a path or a binary stream; gzip input is detected by its magic
    bytes.  Node ids are assigned densely in order of first appearance.
    """
    fmt = fmt or EdgeListFormat()
    stream, owned = _open_binary(source)
    try:
        raw = stream.read()
    finally:
        if owned:
            stream.close()
    if isinstance(raw, str):
        raw = raw.encode()
    if raw[:2] == _GZIP_MAGIC:
        raw = gzip.decompress(raw)

    index: dict[str, int] = {}
    labels: list[str] = []
    src, dst, wts = [], [], []

    def intern(tok):
        i = index.get(tok)
        if i is None:
            i = index[tok] = len(labels)
            labels.append(tok)
        return i

    for lineno, line in enumerate(io.TextIOWrapper(io.BytesIO(raw), encoding="utf-8"), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith(fmt.comment):
            continue
        parts = stripped.split()
        if len(parts) not in (2, 3):
            raise GraphFormatError(f"expected 'src dst [weight]', got {len(parts)} fields", lineno)
        w = fmt.default_weight
        if len(parts) == 3:
            try:
                w = float(parts[2])
            except ValueError:
                raise GraphFormatError(f"weight {parts[2]!r} is not a number", lineno) from None
            if not math.isfinite(w):
                raise GraphFormatError(f"weight {parts[2]!r} is not finite", lineno)
            if w < 0:
                raise GraphFormatError(f"negative weight {w}", lineno)
        src.append(intern(parts[0]))
        dst.append(intern(parts[1]))
        wts.append(w)

    if not labels:
        raise GraphFormatError("empty graph")
    return from_edges(src, dst, wts, n=len(labels), labels=labels)


def write_label_map(g: SparseGraph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, lab in enumerate(g.labels):
            fh.write(f"{i}\t{lab}\n")


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-normalized adjacency; rows of dangling nodes are empty.

    The transpose is kept as its own CSR matrix so both products are
    row-oriented O(m) sweeps.
    """

    normalized: sp.csr_matrix
    normalized_t: sp.csr_matrix
    dangling: np.ndarray  # bool mask

    @property
    def n(self) -> int:
        return self.normalized.shape[0]

    @property
    def m(self) -> int:
        return self.normalized.nnz

    @property
    def dangling_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.dangling)

    def dense(self) -> np.ndarray:
        return self.normalized.toarray()


def row_normalize(g: SparseGraph) -> TransitionMatrix:
    deg = g.out_degree_weight
    dangling = deg <= 0.0
    inv = np.zeros_like(deg)
    inv[~dangling] = 1.0 / deg[~dangling]
    # CSR rows are contiguous, so scale each stored value by its row's 1/deg
    a = g.adjacency
    rows = np.repeat(np.arange(g.n), np.diff(a.indptr))
    nA = sp.csr_matrix((a.data * inv[rows], a.indices.copy(), a.indptr.copy()), shape=a.shape)
    nA_t = nA.T.tocsr()
    nA_t.sort_indices()
    dangling.setflags(write=False)
    return TransitionMatrix(nA, nA_t, dangling)


def _check_vec(t: TransitionMatrix, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (t.n,):
        raise DimensionError(f"expected vector of length {t.n}, got shape {x.shape}")
    return x


def apply_transposed(t: TransitionMatrix, x, out=None) -> np.ndarray:
    """Return Ã^T x."""
    x = _check_vec(t, x)
    y = t.normalized_t @ x
    if out is None:
        return y
    out[:] = y
    return out


def apply_forward(t: TransitionMatrix, x, out=None) -> np.ndarray:
    """Return Ã x; entries at dangling rows are 0."""
    x = _check_vec(t, x)
    y = t.normalized @ x
    if out is None:
        return y
    out[:] = y
    return out
