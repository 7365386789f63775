"""Random models shared by the test modules."""
import numpy as np

from sanmarginal import MhnParams, SanModel


def random_mhn(rng, d, low=0.2, high=3.0):
    return MhnParams(rng.uniform(low, high, (d, d)))


def random_san(rng, d, max_size=3):
    """SAN with random state-space sizes, a random subset of increasing
    transitions per automaton and random non-negative factors."""
    sizes = tuple(int(n) for n in rng.integers(1, max_size + 1, d))
    transitions, theta = [], []
    for nu in range(d):
        pairs = [(i, j) for i in range(sizes[nu]) for j in range(i + 1, sizes[nu])]
        keep = [p for p in pairs if rng.random() < 0.7]
        transitions.append(tuple(keep))
        theta.append(tuple(tuple(rng.uniform(0.1, 2.0, sizes[mu]) for mu in range(d)) for _ in keep))
    x0 = tuple(int(rng.integers(0, n)) for n in sizes)
    return SanModel(sizes, tuple(transitions), tuple(theta), x0)


def random_ht(rng, tree, dims, max_rank=3):
    """HT tensor with random ranks and Gaussian frames/transfers."""
    from sanmarginal import HtTensor

    rank = {v: int(rng.integers(1, max_rank + 1)) for v in range(tree.num_vertices)}
    rank[tree.root] = 1
    frames, transfers = {}, {}
    for v in range(tree.num_vertices):
        if tree.is_leaf(v):
            (mu,) = tree.modes[v]
            rank[v] = min(rank[v], dims[mu])
    for v in range(tree.num_vertices):
        if tree.is_leaf(v):
            (mu,) = tree.modes[v]
            frames[v] = rng.standard_normal((dims[mu], rank[v]))
        else:
            left, right = tree.children[v]
            transfers[v] = rng.standard_normal((rank[v], rank[left], rank[right]))
    return HtTensor(tree, tuple(dims), frames, transfers)
