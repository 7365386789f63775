"""Low-rank tensor formats: CP tensors/operators and hierarchical Tucker."""
from .cp import CpOperator, CpTensor, identity_operator
from .ht import (
    HtTensor,
    apply_cp_operator,
    effective_rank,
    ht_add,
    ht_entry,
    ht_from_cp,
    ht_inner,
    ht_norm,
    ht_orthogonalize,
    ht_scale,
    ht_singular_values,
    ht_sum,
    ht_truncate,
    max_rank,
    storage_size,
    uniform_storage,
)
from .tree import DimensionTree, canonical_tree

__all__ = [
    "CpOperator",
    "CpTensor",
    "DimensionTree",
    "HtTensor",
    "apply_cp_operator",
    "canonical_tree",
    "effective_rank",
    "ht_add",
    "ht_entry",
    "ht_from_cp",
    "ht_inner",
    "ht_norm",
    "ht_orthogonalize",
    "ht_scale",
    "ht_singular_values",
    "ht_sum",
    "ht_truncate",
    "identity_operator",
    "max_rank",
    "storage_size",
    "uniform_storage",
]
