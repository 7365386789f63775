"""Binary dimension trees for the hierarchical Tucker format."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from ..errors import InvalidPermutation


@dataclass(frozen=True)
class DimensionTree:
    """Full binary tree over the modes ``0..d-1``.

    Vertices are numbered in pre-order with the root at 0. ``modes[v]`` is the
    sorted mode set of vertex ``v``; ``children[v]`` is ``(left, right)`` or
    ``None`` for a leaf; ``parent[v]`` is ``-1`` for the root. ``leaf_order``
    lists the modes as they appear in the leaves from left to right.
    """

    modes: tuple[tuple[int, ...], ...]
    children: tuple[tuple[int, int] | None, ...]
    parent: tuple[int, ...]
    leaf_order: tuple[int, ...]

    root = 0

    @property
    def d(self) -> int:
        return len(self.leaf_order)

    @property
    def num_vertices(self) -> int:
        return len(self.modes)

    def is_leaf(self, v: int) -> bool:
        return self.children[v] is None

    @cached_property
    def leaves(self) -> tuple[int, ...]:
        return tuple(v for v in range(self.num_vertices) if self.is_leaf(v))

    @cached_property
    def internal(self) -> tuple[int, ...]:
        """Internal vertices in pre-order, root included."""
        return tuple(v for v in range(self.num_vertices) if not self.is_leaf(v))

    @cached_property
    def leaf_of_mode(self) -> dict[int, int]:
        return {self.modes[v][0]: v for v in self.leaves}

    @cached_property
    def postorder(self) -> tuple[int, ...]:
        out = []

        def visit(v):
            if self.children[v] is not None:
                visit(self.children[v][0])
                visit(self.children[v][1])
            out.append(v)

        visit(self.root)
        return tuple(out)

    @cached_property
    def ordered_modes(self) -> tuple[tuple[int, ...], ...]:
        """Modes of each subtree in left-to-right leaf order."""
        out: list[tuple[int, ...]] = [()] * self.num_vertices
        for v in self.postorder:
            if self.is_leaf(v):
                out[v] = self.modes[v]
            else:
                left, right = self.children[v]
                out[v] = out[left] + out[right]
        return tuple(out)

    def level(self, v: int) -> int:
        depth = 0
        while self.parent[v] >= 0:
            v = self.parent[v]
            depth += 1
        return depth


def canonical_tree(d: int, leaf_order=None) -> DimensionTree:
    """Balanced tree whose leaves carry ``leaf_order`` from left to right.

    A vertex holding ``k`` leaves passes the first ``ceil(k/2)`` of them to its
    left child and the rest to its right child. ``leaf_order=None`` gives the
    canonical tree with the modes in natural order.
    """
    if d < 1:
        raise InvalidPermutation(f"need at least one mode, got d={d}")
    order = tuple(range(d)) if leaf_order is None else tuple(int(m) for m in leaf_order)
    if sorted(order) != list(range(d)):
        raise InvalidPermutation(f"{order} is not a permutation of 0..{d - 1}")

    modes: list[tuple[int, ...]] = []
    children: list[tuple[int, int] | None] = []
    parent: list[int] = []

    def build(block, par):
        v = len(modes)
        modes.append(tuple(sorted(block)))
        children.append(None)
        parent.append(par)
        if len(block) > 1:
            half = (len(block) + 1) // 2
            left = build(block[:half], v)
            right = build(block[half:], v)
            children[v] = (left, right)
        return v

    build(order, -1)
    return DimensionTree(tuple(modes), tuple(children), tuple(parent), order)
