"""Fusion-tree bases for one subsystem and for a bipartite A|B split.

Trees are left caterpillars ``((..((q1 q2) q3)..) qn)``.  A bipartite basis
vector is a pair ``(treeA, treeB)`` whose roots ``a, b`` fuse to the overall
charge ``c``; vectors are grouped into one block per ``c``.

Diagnostic label format (stable)::

    A[l1.l2.l3>root|x1]⊗B[l1.l2>root|]@c

leaves joined by ``.``, root after ``>``, internal edge charges after ``|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .anyon_model import AnyonModel, ChargeLike

__all__ = [
    "FusionTree",
    "SectorBasis",
    "BipartiteBasis",
    "enumerate_trees",
    "sector_dimensions",
    "sector_basis",
    "bipartite_basis",
]


@dataclass(frozen=True)
class FusionTree:
    leaves: tuple[int, ...]
    internal: tuple[int, ...]
    root: int

    def label(self, model: AnyonModel) -> str:
        lab = model.labels
        leaves = ".".join(lab[q] for q in self.leaves)
        internal = ".".join(lab[x] for x in self.internal)
        return f"{leaves}>{lab[self.root]}|{internal}"


def _resolve(model: AnyonModel, leaves: Iterable[ChargeLike]) -> tuple[int, ...]:
    out = tuple(model.index(q) for q in leaves)
    if not out:
        raise ValueError("a subsystem needs at least one anyon")
    return out


def enumerate_trees(model: AnyonModel, leaves: Sequence[ChargeLike], root: ChargeLike) -> list[FusionTree]:
    """All admissible left-canonical trees with the given leaves and root.

    Ordered lexicographically by the internal edge labels (charge index).
    """
    leaves = _resolve(model, leaves)
    root = model.index(root)
    N = model.fusion
    found = []

    def walk(acc: int, pos: int, path: tuple[int, ...]):
        if pos == len(leaves):
            if acc == root:
                found.append(FusionTree(leaves, path[:-1] if path else (), root))
            return
        for z in np.flatnonzero(N[acc, leaves[pos]]):
            walk(int(z), pos + 1, path + (int(z),))

    walk(leaves[0], 1, ())
    return found


def sector_dimensions(model: AnyonModel, leaves: Sequence[ChargeLike]) -> dict[int, int]:
    """``{charge index: number of trees with that root}`` for every charge."""
    return {c.index: len(enumerate_trees(model, leaves, c.index)) for c in model.charges}


class SectorBasis:
    """Fusion-tree basis of one subsystem, split by total charge."""

    def __init__(self, model: AnyonModel, leaves: Sequence[ChargeLike]):
        self.model = model
        self.leaves = _resolve(model, leaves)
        self.trees = {c.index: tuple(enumerate_trees(model, self.leaves, c.index)) for c in model.charges}
        self.dims = {c: len(t) for c, t in self.trees.items()}

    @property
    def charges(self) -> list[int]:
        """Charges whose sector is nonempty, ascending."""
        return [c for c, n in self.dims.items() if n > 0]

    def __eq__(self, other):
        return isinstance(other, SectorBasis) and other.model == self.model and other.leaves == self.leaves

    def __hash__(self):
        return hash((self.model, self.leaves))

    def __repr__(self):
        lab = self.model.labels
        dims = {lab[c]: n for c, n in self.dims.items() if n}
        return f"SectorBasis(leaves={[lab[q] for q in self.leaves]}, dims={dims})"


def sector_basis(model: AnyonModel, leaves: Sequence[ChargeLike]) -> SectorBasis:
    return SectorBasis(model, leaves)


class BipartiteBasis:
    """Joint basis ``|(treeA; a), (treeB; b); c>`` grouped by overall charge ``c``.

    Within block ``c`` the order is lexicographic in
    ``(a, treeA index, b, treeB index)``.  ``pair_indices[c][(a, b)]`` gives the
    positions of the ``(a, b)`` vectors inside block ``c`` in treeA-major order,
    so ``block[np.ix_(idx, idx)]`` is an operator on ``V_a^A ⊗ V_b^B`` laid out
    as ``np.kron``.
    """

    def __init__(self, basisA: SectorBasis, basisB: SectorBasis):
        if basisA.model != basisB.model:
            raise ValueError("both subsystems must use the same anyon model")
        self.model = model = basisA.model
        self.basisA = basisA
        self.basisB = basisB
        N = model.fusion
        blocks: dict[int, list[tuple[FusionTree, FusionTree]]] = {}
        pair_idx: dict[int, dict[tuple[int, int], list[int]]] = {}
        for c in range(model.n_charges):
            elems = []
            where: dict[tuple[int, int], list[int]] = {}
            for a in basisA.charges:
                for ta in basisA.trees[a]:
                    for b in basisB.charges:
                        if not N[a, b, c]:
                            continue
                        for tb in basisB.trees[b]:
                            where.setdefault((a, b), []).append(len(elems))
                            elems.append((ta, tb))
            if elems:
                blocks[c] = elems
                pair_idx[c] = where
        self.blocks = {c: tuple(v) for c, v in blocks.items()}
        self.pair_indices = {c: {k: np.array(v) for k, v in w.items()} for c, w in pair_idx.items()}

    @property
    def charges(self) -> list[int]:
        return sorted(self.blocks)

    @cached_property
    def dims(self) -> dict[int, int]:
        return {c: len(v) for c, v in self.blocks.items()}

    @property
    def total_dim(self) -> int:
        return sum(self.dims.values())

    @cached_property
    def pairs(self) -> list[tuple[int, int]]:
        """All sector pairs ``(a, b)`` with both sectors nonempty."""
        return [(a, b) for a in self.basisA.charges for b in self.basisB.charges]

    def pair_dim(self, a: int, b: int) -> int:
        return self.basisA.dims[a] * self.basisB.dims[b]

    @cached_property
    def hilbert_qdim(self) -> float:
        """``sum_c d_c dim_c``: quantum trace of the identity."""
        return float(sum(self.model.qdim[c] * n for c, n in self.dims.items()))

    def element_label(self, c: int, k: int) -> str:
        ta, tb = self.blocks[c][k]
        m = self.model
        return f"A[{ta.label(m)}]⊗B[{tb.label(m)}]@{m.labels[c]}"

    def labels(self) -> list[str]:
        return [self.element_label(c, k) for c in self.charges for k in range(self.dims[c])]

    def __eq__(self, other):
        return isinstance(other, BipartiteBasis) and other.basisA == self.basisA and other.basisB == self.basisB

    def __hash__(self):
        return hash((self.basisA, self.basisB))

    def __repr__(self):
        lab = self.model.labels
        dims = {lab[c]: n for c, n in self.dims.items()}
        return (
            f"BipartiteBasis(A={[lab[q] for q in self.basisA.leaves]}, "
            f"B={[lab[q] for q in self.basisB.leaves]}, dims={dims})"
        )


def bipartite_basis(
    model: AnyonModel, leavesA: Sequence[ChargeLike], leavesB: Sequence[ChargeLike]
) -> BipartiteBasis:
    return BipartiteBasis(SectorBasis(model, leavesA), SectorBasis(model, leavesB))
