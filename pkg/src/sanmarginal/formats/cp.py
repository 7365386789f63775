"""CP (sum of Kronecker products) tensors and operators."""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from ..errors import DimMismatch


@dataclass(frozen=True, eq=False)
class CpTensor:
    """Sum of ``rank`` outer products.

    ``factors[mu]`` is an ``n_mu x rank`` matrix whose column ``s`` is the core
    of term ``s`` in mode ``mu``. ``rank == 0`` is the zero tensor.
    """

    dims: tuple[int, ...]
    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        factors = tuple(np.asarray(f, dtype=float).reshape(n, -1) for f, n in zip(self.factors, dims))
        if len(dims) == 0 or len(factors) != len(dims):
            raise DimMismatch(f"expected {len(dims)} factor matrices, got {len(self.factors)}")
        if len({f.shape[1] for f in factors}) != 1:
            raise DimMismatch("factor matrices disagree on the number of terms")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "factors", factors)

    @classmethod
    def from_terms(cls, dims, terms):
        """Build from a list of terms, each a list of one vector per mode."""
        dims = tuple(dims)
        if not terms:
            return cls(dims, tuple(np.zeros((n, 0)) for n in dims))
        cols = [np.column_stack([np.asarray(t[mu], dtype=float) for t in terms]) for mu in range(len(dims))]
        return cls(dims, tuple(cols))

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    @property
    def d(self) -> int:
        return len(self.dims)

    def full(self) -> np.ndarray:
        """Dense array of shape ``dims`` (axis ``mu`` is mode ``mu``)."""
        out = np.zeros(self.dims)
        for s in range(self.rank):
            out += reduce(np.multiply.outer, [f[:, s] for f in self.factors])
        return out


@dataclass(frozen=True, eq=False)
class CpOperator:
    """Sum of Kronecker products of square matrices, one per mode and term."""

    dims: tuple[int, ...]
    terms: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        terms = tuple(tuple(np.asarray(a, dtype=float) for a in term) for term in self.terms)
        if not terms:
            raise DimMismatch("a CP operator needs at least one term")
        for term in terms:
            if len(term) != len(dims):
                raise DimMismatch(f"term has {len(term)} factors for {len(dims)} modes")
            for a, n in zip(term, dims):
                if a.shape != (n, n):
                    raise DimMismatch(f"factor of shape {a.shape} in a mode of size {n}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "terms", terms)

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    @property
    def d(self) -> int:
        return len(self.dims)

    def scaled_term(self, s: int, c: float) -> tuple[np.ndarray, ...]:
        term = self.terms[s]
        return (c * term[0],) + term[1:]

    def __add__(self, other: CpOperator) -> CpOperator:
        if self.dims != other.dims:
            raise DimMismatch(f"{self.dims} vs {other.dims}")
        return CpOperator(self.dims, self.terms + other.terms)

    def scale(self, c: float) -> CpOperator:
        return CpOperator(self.dims, tuple(self.scaled_term(s, c) for s in range(self.num_terms)))

    def to_matrix(self) -> np.ndarray:
        """Dense matrix in the mode-0-fastest flat ordering of the state space.

        With that ordering a Kronecker product over modes is formed from the
        last mode down to the first.
        """
        size = int(np.prod(self.dims))
        out = np.zeros((size, size))
        for term in self.terms:
            out += reduce(np.kron, term[::-1])
        return out


def identity_operator(dims) -> CpOperator:
    return CpOperator(tuple(dims), (tuple(np.eye(n) for n in dims),))
