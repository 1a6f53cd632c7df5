"""Anyonic density operators, quantum trace, anyonic entropy and charge-line severing.

Two representations are used:

* :class:`AnyonicDensityOperator` lives on the bipartite fusion basis and is
  block diagonal in the overall charge ``c``.  Quantum trace weights block
  ``c`` by ``d_c``.
* :class:`FactorizedOperator` lives on ``(⊕_a V_a^A) ⊗ (⊕_b V_b^B)`` with one
  block per sector pair ``(a, b)`` weighted by ``d_a d_b``.

:func:`sever` maps the first onto the second by cutting the charge line that
joins A and B; :func:`embed` copies a factorized operator back into every
overall-charge block allowed by fusion.
"""

from __future__ import annotations

import json
from os import PathLike
from typing import Mapping, Union

import numpy as np

from .anyon_model import AnyonModel, ModelError, load_model, model_to_dict
from .fusion_space import BipartiteBasis, bipartite_basis

__all__ = [
    "InvalidStateError",
    "AnyonicDensityOperator",
    "FactorizedOperator",
    "quantum_trace",
    "anyonic_entropy",
    "maximally_mixed",
    "mix",
    "is_maximal_rank",
    "sever",
    "embed",
    "check_state",
    "pure_state",
    "random_state",
    "random_factorized",
    "state_to_dict",
    "state_from_dict",
    "load_state",
    "save_state",
]

HERMITIAN_TOL = 1e-12
PSD_FLOOR = -1e-10
NORM_TOL = 1e-10
EIG_CLAMP = 1e-15


class InvalidStateError(ValueError):
    """A density operator violates a state invariant; ``invariant`` names which."""

    def __init__(self, invariant: str, message: str):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


class _BlockOperator:
    blocks: dict

    def _new(self, blocks):
        raise NotImplementedError

    def _check_compatible(self, other):
        if type(other) is not type(self) or other._key() != self._key():
            raise ValueError("operators live on different spaces")

    def __add__(self, other):
        self._check_compatible(other)
        return self._new({k: v + other.blocks[k] for k, v in self.blocks.items()})

    def __sub__(self, other):
        self._check_compatible(other)
        return self._new({k: v - other.blocks[k] for k, v in self.blocks.items()})

    def __mul__(self, x):
        if not np.isscalar(x):
            return NotImplemented
        return self._new({k: x * v for k, v in self.blocks.items()})

    __rmul__ = __mul__

    def __truediv__(self, x):
        return self * (1.0 / x)

    def max_abs_diff(self, other) -> float:
        self._check_compatible(other)
        return max((float(np.abs(v - other.blocks[k]).max(initial=0.0)) for k, v in self.blocks.items()), default=0.0)


class AnyonicDensityOperator(_BlockOperator):
    """Operator on a :class:`BipartiteBasis`, one Hermitian matrix per overall charge."""

    def __init__(self, basis: BipartiteBasis, blocks: Mapping[int, np.ndarray]):
        self.basis = basis
        out = {}
        for c, n in basis.dims.items():
            m = np.asarray(blocks.get(c, np.zeros((n, n))), dtype=complex)
            if m.shape != (n, n):
                raise ValueError(f"block {basis.model.labels[c]} must be {n}x{n}, got {m.shape}")
            out[c] = m
        extra = set(blocks) - set(basis.dims)
        if extra:
            raise ValueError(f"blocks given for charges absent from the basis: {sorted(extra)}")
        self.blocks = out

    @property
    def model(self) -> AnyonModel:
        return self.basis.model

    def _key(self):
        return self.basis

    def _new(self, blocks):
        return AnyonicDensityOperator(self.basis, blocks)

    def weights(self) -> dict[int, float]:
        return {c: float(self.model.qdim[c]) for c in self.blocks}

    def __repr__(self):
        return f"AnyonicDensityOperator({self.basis!r})"


class FactorizedOperator(_BlockOperator):
    """Operator on ``(⊕_a V_a^A) ⊗ (⊕_b V_b^B)``, one block per sector pair."""

    def __init__(self, basisA, basisB, blocks: Mapping[tuple[int, int], np.ndarray]):
        self.basisA = basisA
        self.basisB = basisB
        out = {}
        for a in basisA.charges:
            for b in basisB.charges:
                n = basisA.dims[a] * basisB.dims[b]
                m = np.asarray(blocks.get((a, b), np.zeros((n, n))), dtype=complex)
                if m.shape != (n, n):
                    raise ValueError(f"block ({a}, {b}) must be {n}x{n}, got {m.shape}")
                out[(a, b)] = m
        extra = set(blocks) - set(out)
        if extra:
            raise ValueError(f"blocks given for sector pairs absent from the bases: {sorted(extra)}")
        self.blocks = out

    @property
    def model(self) -> AnyonModel:
        return self.basisA.model

    def _key(self):
        return (self.basisA, self.basisB)

    def _new(self, blocks):
        return FactorizedOperator(self.basisA, self.basisB, blocks)

    def weights(self) -> dict[tuple[int, int], float]:
        d = self.model.qdim
        return {(a, b): float(d[a] * d[b]) for a, b in self.blocks}

    def __repr__(self):
        return f"FactorizedOperator(A={self.basisA!r}, B={self.basisB!r})"


Operator = Union[AnyonicDensityOperator, FactorizedOperator]


def quantum_trace(op: Operator) -> float:
    w = op.weights()
    return float(sum(w[k] * np.trace(m).real for k, m in op.blocks.items()))


def _eigvals(m: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(0.5 * (m + m.conj().T))


def anyonic_entropy(op: Operator) -> float:
    """Anyonic von Neumann entropy in bits, ``-T̃r[ρ log2 ρ]``."""
    w = op.weights()
    total = 0.0
    for k, m in op.blocks.items():
        if m.shape[0] == 0:
            continue
        lam = _eigvals(m)
        if lam.min() < PSD_FLOOR:
            raise InvalidStateError("positivity", f"eigenvalue {lam.min():.3e} below floor {PSD_FLOOR:g}")
        lam = lam[lam > EIG_CLAMP]
        total -= w[k] * float(np.sum(lam * np.log2(lam)))
    return total


def check_state(op: Operator, normalized: bool = True) -> None:
    """Raise :class:`InvalidStateError` naming the first violated invariant."""
    for k, m in op.blocks.items():
        if m.size and np.abs(m - m.conj().T).max() > HERMITIAN_TOL:
            raise InvalidStateError("hermiticity", f"block {k} is not Hermitian")
    for k, m in op.blocks.items():
        if m.size:
            low = _eigvals(m).min()
            if low < PSD_FLOOR:
                raise InvalidStateError("positivity", f"block {k} has eigenvalue {low:.3e}")
    if normalized:
        tr = quantum_trace(op)
        if abs(tr - 1.0) > NORM_TOL:
            raise InvalidStateError("normalization", f"quantum trace is {tr!r}, expected 1")


def maximally_mixed(basis: BipartiteBasis) -> AnyonicDensityOperator:
    if basis.total_dim == 0:
        raise ValueError("empty basis")
    D = basis.hilbert_qdim
    return AnyonicDensityOperator(basis, {c: np.eye(n) / D for c, n in basis.dims.items()})


def mix(rho: AnyonicDensityOperator, p: float) -> AnyonicDensityOperator:
    """``(1 - p) ρ + p ρ_m`` with ``ρ_m`` maximally mixed."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mixing weight must lie in [0, 1], got {p}")
    return (1.0 - p) * rho + p * maximally_mixed(rho.basis)


def is_maximal_rank(rho: Operator, tol: float = 1e-12) -> bool:
    return all(_eigvals(m).min() > tol for m in rho.blocks.values() if m.size)


def sever(rho: AnyonicDensityOperator) -> FactorizedOperator:
    """Cut the A:B charge line.

    Only the ``a = a', b = b'`` parts of each overall-charge block survive; the
    ``(a, b)`` part of block ``c`` lands in factorized block ``(a, b)`` scaled by
    ``d_c / (d_a d_b)``.  Linear, and preserves the quantum trace.
    """
    basis = rho.basis
    d = basis.model.qdim
    out = {}
    for c, where in basis.pair_indices.items():
        m = rho.blocks[c]
        for (a, b), idx in where.items():
            piece = (d[c] / (d[a] * d[b])) * m[np.ix_(idx, idx)]
            out[(a, b)] = out[(a, b)] + piece if (a, b) in out else piece
    return FactorizedOperator(basis.basisA, basis.basisB, out)


def embed(fop: FactorizedOperator, basis: BipartiteBasis) -> AnyonicDensityOperator:
    """Copy each ``(a, b)`` block with unit weight into every block ``c`` with ``N_ab^c = 1``."""
    if fop.basisA != basis.basisA or fop.basisB != basis.basisB:
        raise ValueError("factorized operator does not match the sectors of the basis")
    out = {}
    for c, n in basis.dims.items():
        m = np.zeros((n, n), dtype=complex)
        for (a, b), idx in basis.pair_indices[c].items():
            m[np.ix_(idx, idx)] = fop.blocks[(a, b)]
        out[c] = m
    return AnyonicDensityOperator(basis, out)


def pure_state(basis: BipartiteBasis, c, amplitudes) -> AnyonicDensityOperator:
    """``|ψ><ψ| / d_c`` for a vector in block ``c`` (normalized to unit quantum trace)."""
    c = basis.model.index(c)
    v = np.asarray(amplitudes, dtype=complex).ravel()
    if c not in basis.dims or v.shape != (basis.dims[c],):
        raise ValueError("amplitude vector does not match the block")
    v = v / np.linalg.norm(v)
    blocks = {c: np.outer(v, v.conj()) / basis.model.qdim[c]}
    return AnyonicDensityOperator(basis, blocks)


def _random_psd(n: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    return g @ g.conj().T


def random_state(
    basis: BipartiteBasis, rng: np.random.Generator | int | None = None, rank: int | None = None
) -> AnyonicDensityOperator:
    """Random normalized state; full rank in every block unless ``rank`` is given.

    With ``rank``, each block gets a random PSD matrix of at most that rank.
    """
    rng = np.random.default_rng(rng)
    blocks = {c: _random_psd(n, n if rank is None else min(rank, n), rng) for c, n in basis.dims.items()}
    rho = AnyonicDensityOperator(basis, blocks)
    return rho / quantum_trace(rho)


def random_factorized(basisA, basisB, rng=None, rank: int | None = None) -> FactorizedOperator:
    rng = np.random.default_rng(rng)
    blocks = {}
    for a in basisA.charges:
        for b in basisB.charges:
            n = basisA.dims[a] * basisB.dims[b]
            blocks[(a, b)] = _random_psd(n, n if rank is None else min(rank, n), rng)
    f = FactorizedOperator(basisA, basisB, blocks)
    return f / quantum_trace(f)


# --- state documents -----------------------------------------------------------


def _matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _matrix_from_json(data, n: int) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape == (n, n, 2):
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.shape == (n * n, 2):
        return (arr[:, 0] + 1j * arr[:, 1]).reshape(n, n)
    raise InvalidStateError("shape", f"matrix data of shape {arr.shape} does not fit a {n}x{n} block")


def state_to_dict(rho: AnyonicDensityOperator) -> dict:
    model = rho.model
    lab = model.labels
    model_field = model_to_dict(model)
    try:
        known = load_model(model.name)
        if known.labels == model.labels and np.allclose(known._F, model._F, atol=1e-14):
            model_field = model.name
    except ModelError:
        pass
    return {
        "model": model_field,
        "partition": {
            "leavesA": [lab[q] for q in rho.basis.basisA.leaves],
            "leavesB": [lab[q] for q in rho.basis.basisB.leaves],
        },
        "blocks": [{"charge": lab[c], "matrix": _matrix_to_json(m)} for c, m in sorted(rho.blocks.items())],
    }


def state_from_dict(doc: Mapping, validate: bool = True) -> AnyonicDensityOperator:
    """Build a state from a document; with ``validate`` the state invariants are checked."""
    try:
        model = load_model(doc["model"])
        part = doc["partition"]
        basis = bipartite_basis(model, part["leavesA"], part["leavesB"])
        raw = doc["blocks"]
    except KeyError as exc:
        raise InvalidStateError("schema", f"state document missing field {exc}") from None
    except (ModelError, ValueError) as exc:
        raise InvalidStateError("schema", str(exc)) from None
    blocks = {}
    for ent in raw:
        try:
            c = model.index(ent["charge"])
        except (KeyError, ModelError) as exc:
            raise InvalidStateError("schema", f"bad block entry: {exc}") from None
        if c not in basis.dims:
            raise InvalidStateError("schema", f"overall charge {model.labels[c]} does not occur for this partition")
        if c in blocks:
            raise InvalidStateError("schema", f"duplicate block for charge {model.labels[c]}")
        blocks[c] = _matrix_from_json(ent.get("matrix"), basis.dims[c])
    rho = AnyonicDensityOperator(basis, blocks)
    if validate:
        check_state(rho)
    return rho


def load_state(path: str | PathLike, validate: bool = True) -> AnyonicDensityOperator:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InvalidStateError("file", f"cannot read {path!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InvalidStateError("file", f"{path!r} is not valid JSON: {exc}") from None
    return state_from_dict(doc, validate=validate)


def save_state(rho: AnyonicDensityOperator, path: str | PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(state_to_dict(rho), fh, ensure_ascii=False, indent=1)
