"""Why the tree layout matters.

For 8 events in two blocks of four, the singular values of the matricization
at the root's children decay fast when each block stays in one subtree and
much more slowly when the tree splits both blocks.
"""
import numpy as np

from sanmarginal import canonical_tree
from sanmarginal import experiments as ex

samples = 20
canon = ex.run_sv_study(8, 4, seed=0, samples=samples)
mixed = ex.run_sv_study(8, 4, canonical_tree(8, [0, 4, 1, 5, 2, 6, 3, 7]), seed=0, samples=samples)

a = canon.mean_sigma[canon.root_children()[0]]
b = mixed.mean_sigma[mixed.root_children()[0]]
print(" i   canonical   interleaved")
for i in range(10):
    print(f"{i + 1:2d}   {a[i] / a[0]:9.2e}   {b[i] / b[0]:9.2e}")
print(f"numerically zero at the root (canonical): {np.count_nonzero(a == 0)} of {a.size}")
