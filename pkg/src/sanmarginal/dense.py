"""Dense ground truth for small state spaces.

Flat state indices use the mode-0-fastest convention throughout:
``index(x) = x[0] + n_0 * (x[1] + n_1 * (x[2] + ...))``. This matches
``numpy`` Fortran-order reshapes and :meth:`CpOperator.to_matrix`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import CapExceeded, EmptyModeSet, SingularSystem, TreeMismatch
from .formats.tree import DimensionTree

DEFAULT_CAP = 2 ** 20
SV_ZERO_RTOL = 1e-14


@dataclass(frozen=True, eq=False)
class DenseTensor:
    """Full tensor with data stored flat in mode-0-fastest order."""

    dims: tuple[int, ...]
    data: np.ndarray

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        data = np.asarray(self.data, dtype=float).ravel()
        if not dims or any(n < 1 for n in dims) or int(np.prod(dims)) != data.size:
            raise ValueError(f"data of length {data.size} does not fit mode sizes {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, arr) -> DenseTensor:
        arr = np.asarray(arr, dtype=float)
        return cls(arr.shape, arr.ravel(order="F"))

    @property
    def array(self) -> np.ndarray:
        return self.data.reshape(self.dims, order="F")

    @property
    def d(self) -> int:
        return len(self.dims)


@dataclass(frozen=True, eq=False)
class DenseMatrix:
    """Dense matrix with row-major flat data."""

    rows: int
    cols: int
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float).ravel()
        if self.rows < 1 or self.cols < 1 or self.rows * self.cols != data.size:
            raise ValueError(f"{data.size} entries for a {self.rows}x{self.cols} matrix")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, arr) -> DenseMatrix:
        arr = np.asarray(arr, dtype=float)
        return cls(arr.shape[0], arr.shape[1], arr.ravel())

    @property
    def array(self) -> np.ndarray:
        return self.data.reshape(self.rows, self.cols)


def _check_cap(entries: int, cap: int):
    if entries > cap:
        raise CapExceeded(f"dense object with {entries} entries exceeds the cap of {cap}")


def state_table(dims) -> np.ndarray:
    """All states as rows of an ``(|S|, d)`` integer array, in flat order."""
    return np.indices(dims).reshape(len(dims), -1, order="F").T


def dense_generator(model, cap: int = DEFAULT_CAP) -> DenseMatrix:
    """Generator ``Q`` assembled by enumerating every state and transition.

    ``cap`` bounds the number of matrix entries, ``|S|**2``.
    """
    from .san import check_model

    check_model(model)
    dims = model.sizes
    size = int(np.prod(dims))
    _check_cap(size * size, cap)
    states = state_table(dims)
    strides = np.concatenate([[1], np.cumprod(dims)[:-1]]).astype(int)
    src = np.arange(size)
    q = np.zeros((size, size))
    for nu in range(model.d):
        for (i, j), factors in zip(model.transitions[nu], model.theta[nu]):
            rate = np.ones(size)
            for mu in range(model.d):
                rate *= factors[mu][states[:, mu]]
            mask = states[:, nu] == i
            x = src[mask]
            np.add.at(q, (x + (j - i) * strides[nu], x), rate[mask])
    q[src, src] -= q.sum(axis=0)
    return DenseMatrix.from_array(q)


def dense_marginal(model, cap: int = DEFAULT_CAP) -> DenseTensor:
    """Solve ``(Id - Q) p = p0`` with a partially pivoted LU factorization."""
    q = dense_generator(model, cap).array
    size = q.shape[0]
    p0 = np.zeros(size)
    p0[int(np.ravel_multi_index(model.x0, model.sizes, order="F"))] = 1.0
    try:
        p = scipy.linalg.solve(np.eye(size) - q, p0)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystem(str(exc)) from exc
    return DenseTensor(model.sizes, p)


def matricize(t: DenseTensor, modes) -> DenseMatrix:
    """Unfolding with rows indexed by ``modes`` and columns by the rest.

    Both index groups run over their modes in ascending order, the smallest
    mode fastest.
    """
    rows = sorted({int(m) for m in modes})
    if not rows:
        raise EmptyModeSet("matricization needs at least one mode")
    if rows[0] < 0 or rows[-1] >= t.d:
        raise EmptyModeSet(f"modes {rows} outside 0..{t.d - 1}")
    cols = [m for m in range(t.d) if m not in rows]
    nrows = int(np.prod([t.dims[m] for m in rows]))
    arr = np.transpose(t.array, rows + cols).reshape(nrows, -1, order="F")
    return DenseMatrix.from_array(arr)


def unmatricize(m: DenseMatrix, dims, modes) -> DenseTensor:
    """Inverse of :func:`matricize`."""
    dims = tuple(dims)
    rows = sorted({int(x) for x in modes})
    cols = [x for x in range(len(dims)) if x not in rows]
    perm = rows + cols
    arr = m.array.reshape([dims[x] for x in perm], order="F")
    return DenseTensor.from_array(np.transpose(arr, np.argsort(perm)))


def tree_singular_values(t: DenseTensor, tree: DimensionTree, cap: int = DEFAULT_CAP) -> dict[int, np.ndarray]:
    """Descending singular values of the matricization at every non-root vertex.

    Values below ``1e-14`` times the largest are reported as exactly zero.
    """
    if tree.d != t.d or set(tree.modes[tree.root]) != set(range(t.d)):
        raise TreeMismatch(f"tree over {tree.d} modes for a tensor with {t.d}")
    _check_cap(t.data.size, cap)
    out = {}
    for v in range(tree.num_vertices):
        if v == tree.root:
            continue
        s = np.linalg.svd(matricize(t, tree.modes[v]).array, compute_uv=False)
        if s.size and s[0] > 0:
            s[s < SV_ZERO_RTOL * s[0]] = 0.0
        out[v] = s
    return out
