"""The two Fibonacci families on four anyons split as A = (τ, τ), B = (τ, τ).

Each pair has one fusion tree per total charge, so the bipartite basis has a
two-dimensional vacuum block (pairs (1,1), (τ,τ)) and a three-dimensional τ
block (pairs (1,τ), (τ,1), (τ,τ)).
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .anyon_model import AnyonModel, fibonacci
from .anyonic_state import AnyonicDensityOperator
from .fusion_space import BipartiteBasis, bipartite_basis

__all__ = ["two_pair_basis", "pure_state", "four_anyon_state", "locc_point"]

VAC, TAU = 0, 1


def two_pair_basis(model: AnyonModel | None = None) -> BipartiteBasis:
    model = model or fibonacci()
    return bipartite_basis(model, [TAU, TAU], [TAU, TAU])


def _position(basis: BipartiteBasis, c: int, a: int, b: int) -> int:
    (k,) = basis.pair_indices[c][(a, b)]
    return int(k)


def pure_state(q: float, basis: BipartiteBasis | None = None) -> AnyonicDensityOperator:
    """``sqrt(q) |1, 1; 1> + sqrt(1 - q) |τ, τ; 1>``: both pairs share total charge, overall vacuum."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    basis = basis or two_pair_basis()
    v = np.zeros(basis.dims[VAC], dtype=complex)
    v[_position(basis, VAC, VAC, VAC)] = math.sqrt(q)
    v[_position(basis, VAC, TAU, TAU)] = math.sqrt(1.0 - q)
    return AnyonicDensityOperator(basis, {VAC: np.outer(v, v.conj())})


def four_anyon_state(p: Sequence[float], basis: BipartiteBasis | None = None) -> AnyonicDensityOperator:
    """Diagonal mixture with weights ``p1..p5``.

    In normalized projectors ``P`` (quantum trace ``d_c``)::

        p1 P[(1,1);1] + p2/d P[(τ,1);τ] + p3/d P[(1,τ);τ] + p4 P[(τ,τ);1] + p5/d P[(τ,τ);τ]
    """
    p = [float(x) for x in p]
    if len(p) != 5 or any(x < 0 for x in p) or abs(sum(p) - 1.0) > 1e-12:
        raise ValueError("need five nonnegative probabilities summing to 1")
    basis = basis or two_pair_basis()
    d = basis.model.qdim[TAU]
    vac = np.zeros(basis.dims[VAC])
    tau = np.zeros(basis.dims[TAU])
    vac[_position(basis, VAC, VAC, VAC)] = p[0]
    tau[_position(basis, TAU, TAU, VAC)] = p[1] / d
    tau[_position(basis, TAU, VAC, TAU)] = p[2] / d
    vac[_position(basis, VAC, TAU, TAU)] = p[3]
    tau[_position(basis, TAU, TAU, TAU)] = p[4] / d
    return AnyonicDensityOperator(basis, {VAC: np.diag(vac), TAU: np.diag(tau)})


def locc_point(p1: float, p2: float, p3: float) -> list[float]:
    """Complete ``(p1, p2, p3)`` with ``p4 = p5 / d_τ`` (zero topological correlation)."""
    rest = 1.0 - p1 - p2 - p3
    if rest < 0:
        raise ValueError("p1 + p2 + p3 exceeds 1")
    d = (1 + math.sqrt(5)) / 2
    p5 = rest * d / (1 + d)
    return [p1, p2, p3, rest - p5, p5]
