"""Hierarchical Tucker tensors on a binary dimension tree.

A tensor is stored as one frame matrix per leaf (``n_mu x r_leaf``) and one
transfer tensor per internal vertex (``r_t x r_left x r_right``). The root has
rank one, so its transfer tensor has shape ``(1, r_left, r_right)``. A tree with
a single mode has no transfer tensors and its only frame is ``n x 1``.

All arithmetic here is exact; only :func:`ht_truncate` discards information.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimMismatch, IndexOutOfRange, TreeMismatch
from .cp import CpOperator, CpTensor
from .tree import DimensionTree

_EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class HtTensor:
    tree: DimensionTree
    dims: tuple[int, ...]
    frames: dict[int, np.ndarray]
    transfers: dict[int, np.ndarray]

    def __post_init__(self):
        tree = self.tree
        if len(self.dims) != tree.d:
            raise DimMismatch(f"{len(self.dims)} mode sizes for a tree over {tree.d} modes")
        for v in tree.leaves:
            u = self.frames[v]
            if u.ndim != 2 or u.shape[0] != self.dims[tree.modes[v][0]] or u.shape[1] < 1:
                raise DimMismatch(f"leaf {v}: frame of shape {u.shape}")
        if tree.d == 1:
            if self.frames[tree.root].shape[1] != 1:
                raise DimMismatch("a single-mode tensor has a rank one root")
            return
        for v in tree.internal:
            b = self.transfers[v]
            left, right = tree.children[v]
            expected = (1 if v == tree.root else b.shape[0], self.rank(left), self.rank(right))
            if b.ndim != 3 or b.shape != expected or b.shape[0] < 1:
                raise DimMismatch(f"vertex {v}: transfer of shape {b.shape}, expected {expected}")

    @property
    def d(self) -> int:
        return self.tree.d

    def rank(self, v: int) -> int:
        if v == self.tree.root:
            return 1
        if self.tree.is_leaf(v):
            return self.frames[v].shape[1]
        return self.transfers[v].shape[0]

    def ranks(self) -> dict[int, int]:
        """Rank of every non-root vertex."""
        return {v: self.rank(v) for v in range(self.tree.num_vertices) if v != self.tree.root}

    def full(self) -> np.ndarray:
        """Dense array of shape ``dims``; only sensible for small state spaces."""
        tree = self.tree
        mats: dict[int, np.ndarray] = {}
        for v in tree.postorder:
            if tree.is_leaf(v):
                mats[v] = self.frames[v]
            else:
                left, right = tree.children[v]
                m = np.einsum("ai,bj,kij->abk", mats.pop(left), mats.pop(right), self.transfers[v])
                mats[v] = m.reshape(-1, m.shape[2])
        order = tree.ordered_modes[tree.root]
        arr = mats[tree.root][:, 0].reshape([self.dims[m] for m in order])
        return np.transpose(arr, np.argsort(order))

    def copy(self) -> HtTensor:
        return HtTensor(
            self.tree,
            self.dims,
            {v: u.copy() for v, u in self.frames.items()},
            {v: b.copy() for v, b in self.transfers.items()},
        )


def _check_compatible(a: HtTensor, b: HtTensor):
    if a.tree != b.tree:
        raise TreeMismatch("tensors live on different dimension trees")
    if a.dims != b.dims:
        raise TreeMismatch(f"mode sizes differ: {a.dims} vs {b.dims}")


def ht_from_cp(t: CpTensor, tree: DimensionTree) -> HtTensor:
    """Exact HT representation of a CP tensor; all ranks equal ``max(rank, 1)``."""
    if t.d != tree.d:
        raise DimMismatch(f"CP tensor has {t.d} modes, tree has {tree.d}")
    r = t.rank
    if r == 0:
        t = CpTensor(t.dims, tuple(np.zeros((n, 1)) for n in t.dims))
        r = 1
    if tree.d == 1:
        return HtTensor(tree, t.dims, {tree.root: t.factors[0].sum(axis=1, keepdims=True)}, {})
    frames = {v: t.factors[tree.modes[v][0]].copy() for v in tree.leaves}
    diag = np.zeros((r, r, r))
    diag[np.arange(r), np.arange(r), np.arange(r)] = 1.0
    transfers = {v: diag.copy() for v in tree.internal if v != tree.root}
    transfers[tree.root] = np.eye(r)[None]
    return HtTensor(tree, t.dims, frames, transfers)


def ht_add(a: HtTensor, b: HtTensor) -> HtTensor:
    """Exact sum; non-root ranks add up."""
    _check_compatible(a, b)
    tree = a.tree
    if tree.d == 1:
        return HtTensor(tree, a.dims, {0: a.frames[0] + b.frames[0]}, {})
    frames = {v: np.hstack([a.frames[v], b.frames[v]]) for v in tree.leaves}
    transfers = {}
    for v in tree.internal:
        ba, bb = a.transfers[v], b.transfers[v]
        ka, ia, ja = ba.shape
        kb, ib, jb = bb.shape
        if v == tree.root:
            out = np.zeros((1, ia + ib, ja + jb))
            out[0, :ia, :ja] = ba[0]
            out[0, ia:, ja:] = bb[0]
        else:
            out = np.zeros((ka + kb, ia + ib, ja + jb))
            out[:ka, :ia, :ja] = ba
            out[ka:, ia:, ja:] = bb
        transfers[v] = out
    return HtTensor(tree, a.dims, frames, transfers)


def ht_scale(a: HtTensor, c: float) -> HtTensor:
    out = a.copy()
    root = a.tree.root
    if a.d == 1:
        out.frames[root] *= c
    else:
        out.transfers[root] *= c
    return out


def _gram(a: HtTensor, b: HtTensor) -> np.ndarray:
    tree = a.tree
    grams: dict[int, np.ndarray] = {}
    for v in tree.postorder:
        if tree.is_leaf(v):
            grams[v] = a.frames[v].T @ b.frames[v]
        else:
            left, right = tree.children[v]
            grams[v] = np.einsum(
                "kij,ia,jb,pab->kp", a.transfers[v], grams.pop(left), grams.pop(right), b.transfers[v],
                optimize=True,
            )
    return grams[tree.root]


def ht_inner(a: HtTensor, b: HtTensor) -> float:
    """Euclidean inner product of the two represented tensors."""
    _check_compatible(a, b)
    return float(_gram(a, b)[0, 0])


def ht_sum(a: HtTensor) -> float:
    """Sum of all entries, i.e. the inner product with the all-ones tensor."""
    tree = a.tree
    vecs: dict[int, np.ndarray] = {}
    for v in tree.postorder:
        if tree.is_leaf(v):
            vecs[v] = a.frames[v].sum(axis=0)
        else:
            left, right = tree.children[v]
            vecs[v] = np.einsum("kij,i,j->k", a.transfers[v], vecs.pop(left), vecs.pop(right))
    return float(vecs[tree.root][0])


def ht_entry(a: HtTensor, x) -> float:
    x = tuple(int(i) for i in x)
    if len(x) != a.d or any(not 0 <= i < n for i, n in zip(x, a.dims)):
        raise IndexOutOfRange(f"index {x} outside mode sizes {a.dims}")
    tree = a.tree
    vecs: dict[int, np.ndarray] = {}
    for v in tree.postorder:
        if tree.is_leaf(v):
            vecs[v] = a.frames[v][x[tree.modes[v][0]]]
        else:
            left, right = tree.children[v]
            vecs[v] = np.einsum("kij,i,j->k", a.transfers[v], vecs.pop(left), vecs.pop(right))
    return float(vecs[tree.root][0])


def orthogonalize_sum(groups) -> HtTensor:
    """Orthogonal representation of ``sum_g sum_s coef * (A_1 x ... x A_d) x_g``.

    ``groups`` is a list of ``(x, terms)`` pairs where ``terms`` lists
    ``(coef, factors)`` with ``factors`` a tuple of one matrix per mode, or
    ``None`` for the identity. The result is exact. Nothing of the size of the
    summed ranks is ever materialized, which is what makes repeated operator
    application affordable: after the leaf QR each rank is bounded by the
    product of the mode sizes below it.
    """
    x0 = groups[0][0]
    tree, dims = x0.tree, x0.dims
    for x, _ in groups[1:]:
        _check_compatible(x0, x)
    if tree.d == 1:
        u = sum(
            coef * (x.frames[0] if f is None else f[0] @ x.frames[0]) for x, terms in groups for coef, f in terms
        )
        return HtTensor(tree, dims, {0: u}, {})

    frames, transfers = {}, {}
    # per vertex: for each group an array (S_g, m, r_g) mapping the group's
    # basis into the new orthonormal one
    rfac: dict[int, list[np.ndarray]] = {}
    for v in tree.postorder:
        if tree.is_leaf(v):
            mu = tree.modes[v][0]
            blocks = []
            for x, terms in groups:
                u = x.frames[v]
                blocks.extend(u if f is None else f[mu] @ u for _, f in terms)
            q, r = np.linalg.qr(np.hstack(blocks))
            frames[v] = q
            rfac[v] = _split_rfac(r, groups, v)
            continue
        left, right = tree.children[v]
        rl, rr = rfac.pop(left), rfac.pop(right)
        if v == tree.root:
            m = 0.0
            for (x, terms), fl, fr in zip(groups, rl, rr):
                coefs = np.array([c for c, _ in terms])
                m = m + _contract_root(x.transfers[v][0], fl, fr, coefs)
            transfers[v] = m[None]
            continue
        stacked = np.concatenate(
            [_contract_transfer(x.transfers[v], fl, fr) for (x, _), fl, fr in zip(groups, rl, rr)], axis=0
        )
        k, a, b = stacked.shape
        q, r = np.linalg.qr(stacked.reshape(k, a * b).T)
        transfers[v] = q.T.reshape(-1, a, b)
        rfac[v] = _split_rfac(r, groups, v)
    return HtTensor(tree, dims, frames, transfers)


def _split_rfac(r, groups, v):
    out, col = [], 0
    for x, terms in groups:
        rg = x.rank(v)
        width = rg * len(terms)
        out.append(r[:, col:col + width].reshape(r.shape[0], len(terms), rg).transpose(1, 0, 2))
        col += width
    return out


def _contract_transfer(b, fl, fr):
    """``out[(s, k), a, c] = sum_ij b[k, i, j] fl[s, a, i] fr[s, c, j]``."""
    k, i, j = b.shape
    S, a, _ = fl.shape
    c = fr.shape[1]
    t = (fl.reshape(S * a, i) @ b.transpose(1, 0, 2).reshape(i, k * j)).reshape(S, a * k, j)
    t = np.matmul(t, fr.transpose(0, 2, 1)).reshape(S, a, k, c)
    return t.transpose(0, 2, 1, 3).reshape(S * k, a, c)


def _contract_root(b0, fl, fr, coefs):
    """``sum_s coefs[s] * fl[s] @ b0 @ fr[s].T``."""
    t = np.matmul(np.matmul(fl, b0), fr.transpose(0, 2, 1))
    return np.tensordot(coefs, t, axes=1)


def ht_orthogonalize(a: HtTensor) -> HtTensor:
    """Equivalent representation with orthonormal frames at every non-root vertex.

    Ranks can only shrink: each vertex ends up with at most the product of its
    children's (already reduced) ranks.
    """
    return orthogonalize_sum([(a, [(1.0, None)])])


def orthogonal_norm(o: HtTensor) -> float:
    """Norm of an already orthogonalized tensor."""
    if o.d == 1:
        return float(np.linalg.norm(o.frames[o.tree.root]))
    return float(np.linalg.norm(o.transfers[o.tree.root]))


def ht_norm(a: HtTensor) -> float:
    """Frobenius norm, read off the root after orthogonalization."""
    return orthogonal_norm(ht_orthogonalize(a))


def apply_cp_operator(op: CpOperator, v: HtTensor) -> HtTensor:
    """Exact image of ``v`` under a CP operator with ``R`` terms.

    Each non-root rank is multiplied by ``R``; the transfer tensors become
    block diagonal in the term index. No truncation happens here.
    """
    if op.dims != v.dims:
        raise DimMismatch(f"operator on {op.dims}, tensor on {v.dims}")
    tree = v.tree
    R = op.num_terms
    if tree.d == 1:
        u = v.frames[tree.root]
        return HtTensor(tree, v.dims, {tree.root: sum(term[0] @ u for term in op.terms)}, {})
    frames = {
        leaf: np.hstack([term[tree.modes[leaf][0]] @ v.frames[leaf] for term in op.terms]) for leaf in tree.leaves
    }
    transfers = {}
    for t in tree.internal:
        b = v.transfers[t]
        k, i, j = b.shape
        if t == tree.root:
            out = np.zeros((1, R * i, R * j))
            for s in range(R):
                out[0, s * i:(s + 1) * i, s * j:(s + 1) * j] = b[0]
        else:
            out = np.zeros((R * k, R * i, R * j))
            for s in range(R):
                out[s * k:(s + 1) * k, s * i:(s + 1) * i, s * j:(s + 1) * j] = b
        transfers[t] = out
    return HtTensor(tree, v.dims, frames, transfers)


def _vertex_svds(o: HtTensor):
    """Singular values and left singular vectors of every non-root matricization.

    ``o`` must be orthogonalized. Each vertex's matricization equals its frame
    times a small coefficient matrix, so only those small matrices are
    decomposed. Everything is derived from the untruncated tensor.
    """
    tree = o.tree
    root = tree.root
    left, right = tree.children[root]
    u, s, vt = np.linalg.svd(o.transfers[root][0], full_matrices=False)
    sv = {left: s, right: s}
    basis = {left: u, right: vt.T}
    for t in tree.internal:
        if t == root:
            continue
        coef = basis[t] * sv[t]  # r_t x m, Gram factor of the matricization at t
        b = o.transfers[t]
        tl, tr = tree.children[t]
        m_left = np.einsum("kij,kq->ijq", b, coef).reshape(b.shape[1], -1)
        m_right = np.einsum("kij,kq->jiq", b, coef).reshape(b.shape[2], -1)
        for child, mat in ((tl, m_left), (tr, m_right)):
            uc, sc, _ = np.linalg.svd(mat, full_matrices=False)
            sv[child], basis[child] = sc, uc
    return sv, basis


def ht_singular_values(a: HtTensor) -> dict[int, np.ndarray]:
    """Singular values of the matricization at every non-root vertex."""
    if a.d == 1:
        return {}
    sv, _ = _vertex_svds(ht_orthogonalize(a))
    return sv


def _choose_rank(s: np.ndarray, budget: float, cap: int | None) -> int:
    tail = np.cumsum((s ** 2)[::-1])[::-1]  # tail[m] = sum of s[m:]**2
    keep = int(np.count_nonzero(tail > budget))
    keep = max(keep, 1)
    if cap is not None:
        keep = max(1, min(keep, int(cap)))
    return keep


def _cap_for(rank_cap, v):
    if rank_cap is None:
        return None
    if isinstance(rank_cap, dict):
        return rank_cap.get(v)
    return int(rank_cap)


def ht_truncate(a: HtTensor, eps_rel: float = 0.0, rank_cap=None) -> HtTensor:
    """Quasi-optimal rank reduction with relative error at most ``eps_rel``.

    The squared error budget ``eps_rel**2 * ||a||**2`` is split evenly over the
    ``2d - 2`` non-root vertices. Directions at roundoff level (below machine
    precision times the norm) are dropped even for ``eps_rel == 0``.
    ``rank_cap`` is an int or a ``{vertex: cap}`` dict; capping can exceed the
    error budget. Ranks never drop below one.
    """
    if eps_rel < 0:
        raise ValueError(f"eps_rel must be non-negative, got {eps_rel}")
    if a.d == 1:
        return a.copy()
    return truncate_orthogonal(ht_orthogonalize(a), eps_rel, rank_cap)


def truncate_orthogonal(o: HtTensor, eps_rel: float = 0.0, rank_cap=None) -> HtTensor:
    """:func:`ht_truncate` for input that is already orthogonalized."""
    tree = o.tree
    if tree.d == 1:
        return o.copy()
    sv, basis = _vertex_svds(o)
    root = tree.root
    left, right = tree.children[root]
    norm2 = float(np.sum(sv[left] ** 2))
    budget = max(eps_rel ** 2 * norm2 / (2 * tree.d - 2), (_EPS ** 2) * norm2)

    caps = [c for c in (_cap_for(rank_cap, left), _cap_for(rank_cap, right)) if c is not None]
    keep = {}
    keep[left] = keep[right] = _choose_rank(sv[left], budget, min(caps) if caps else None)
    for v in range(tree.num_vertices):
        if v not in keep and v != root:
            keep[v] = _choose_rank(sv[v], budget, _cap_for(rank_cap, v))
    proj = {v: basis[v][:, : keep[v]] for v in keep}

    frames = {v: o.frames[v] @ proj[v] for v in tree.leaves}
    transfers = {}
    for t in tree.internal:
        tl, tr = tree.children[t]
        b = o.transfers[t]
        if t != root:
            b = np.tensordot(proj[t].T, b, axes=1)
        transfers[t] = _contract_transfer(b, proj[tl].T[None], proj[tr].T[None])
    return HtTensor(tree, o.dims, frames, transfers)


def storage_size(a: HtTensor) -> int:
    """Number of stored reals: leaf frames plus transfer tensors."""
    tree = a.tree
    total = sum(u.size for u in a.frames.values())
    total += sum(b.size for b in a.transfers.values())
    return int(total)


def uniform_storage(tree: DimensionTree, dims, r: int) -> int:
    """Storage of a representation on ``tree`` with every rank equal to ``r``."""
    if tree.d == 1:
        return int(dims[0])
    leaves = sum(int(dims[tree.modes[v][0]]) * r for v in tree.leaves)
    inner = (len(tree.internal) - 1) * r ** 3
    return leaves + inner + r * r


def max_rank(a: HtTensor) -> int:
    return max(a.ranks().values(), default=1)


def effective_rank(a: HtTensor) -> int:
    """Smallest uniform rank whose storage is at least the actual storage."""
    if a.d == 1:
        return 1
    target = storage_size(a)
    r = 1
    while uniform_storage(a.tree, a.dims, r) < target:
        r += 1
    return r
