"""Maximum-entropy inference from local joint measurements.

The inferred state is computed three ways:

* :func:`inferred_state_closed_form` inverts the measurement record directly,
  one factorized block at a time;
* :func:`inferred_state_numeric` solves the max-entropy problem through its
  Lagrange dual (independent of the closed form);
* :func:`topological_correlation` uses :func:`~topocorr.anyonic_state.sever`,
  which for maximal-rank states coincides with both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .anyonic_state import (
    AnyonicDensityOperator,
    FactorizedOperator,
    anyonic_entropy,
    check_state,
    mix,
    quantum_trace,
    sever,
)
from .measurement import MeasurementRecord, ObservableBasis, build_observable_basis, measure_all

__all__ = [
    "ConvergenceError",
    "MaxEntSolver",
    "LimitResult",
    "inferred_state_closed_form",
    "inferred_state_numeric",
    "inferred_state",
    "topological_correlation",
    "ace",
    "topo_correlation_via_limit",
    "binary_entropy",
    "fib_pure_topo",
    "fib4_topo",
]

PHI = (1 + math.sqrt(5)) / 2


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, worst_residual: float, iterations: int):
        super().__init__(f"{message} (worst residual {worst_residual:.3e} after {iterations} iterations)")
        self.worst_residual = worst_residual
        self.iterations = iterations


def _observables(basesA: ObservableBasis, basesB: ObservableBasis, a: int, b: int):
    for i, ma in enumerate(basesA.observables[a]):
        for j, mb in enumerate(basesB.observables[b]):
            yield i, j, np.kron(ma, mb)


def _pairs(basesA: ObservableBasis, basesB: ObservableBasis):
    return [(a, b) for a in basesA.sectors.charges for b in basesB.sectors.charges]


def inferred_state_closed_form(
    record: MeasurementRecord, basesA: ObservableBasis, basesB: ObservableBasis
) -> FactorizedOperator:
    """``σ_m = sum p_{i_a j_b} / (d_a d_b) · M̂^A_{a,i} ⊗ M̂^B_{b,j}``.

    ``M̂`` is the dual basis element ``M / tr(M²)``; it equals ``M`` for the
    traceless generators and ``I / N_a`` for the identity.
    """
    d = basesA.model.qdim
    blocks = {}
    for a, b in _pairs(basesA, basesB):
        n = basesA.sectors.dims[a] * basesB.sectors.dims[b]
        m = np.zeros((n, n), dtype=complex)
        for i, j, obs in _observables(basesA, basesB, a, b):
            try:
                p = record.entries[(a, i, b, j)]
            except KeyError:
                lab = basesA.model.labels
                raise KeyError(f"record has no entry for ({lab[a]}, {i}, {lab[b]}, {j})") from None
            m += p * basesA.dual_scale(a, i) * basesB.dual_scale(b, j) * obs
        blocks[(a, b)] = m / (d[a] * d[b])
    return FactorizedOperator(basesA.sectors, basesB.sectors, blocks)


def _expm_herm(h: np.ndarray):
    lam, u = np.linalg.eigh(h)
    return lam, u, (u * np.exp(lam)) @ u.conj().T


def _divided_exp(lam: np.ndarray) -> np.ndarray:
    """Divided differences of exp on the spectrum (Fréchet derivative kernel)."""
    el = np.exp(lam)
    diff = lam[:, None] - lam[None, :]
    close = np.abs(diff) < 1e-10
    safe = np.where(close, 1.0, diff)
    out = (el[:, None] - el[None, :]) / safe
    avg = np.exp(0.5 * (lam[:, None] + lam[None, :]))
    return np.where(close, avg, out)


@dataclass
class _Block:
    key: tuple[int, int]
    weight: float
    ops: np.ndarray  # (k, n, n)
    target: np.ndarray  # (k,)
    labels: list[tuple[int, int, int, int]]


@dataclass
class MaxEntSolver:
    """Dual ascent for the max-entropy state matching a measurement record.

    Works in natural-log units.  For multipliers ``Λ`` the candidate is
    ``σ_ab = exp(sum_ij Λ_ij M_i ⊗ M_j - 1)`` in every factorized block; the
    dual objective ``sum_k Λ_k p_k - sum_ab d_a d_b tr σ_ab`` is concave and its
    gradient is the constraint mismatch.  Steps follow the Newton direction
    (``method="newton"``) or the plain gradient (``method="gradient"``), each
    with Armijo backtracking, so the dual never decreases.
    """

    tol: float = 1e-9
    max_iter: int = 100_000
    step: float = 1.0
    method: str = "newton"
    backtrack: float = 0.5
    armijo: float = 1e-4
    multipliers: dict = field(default_factory=dict, init=False)
    history: list = field(default_factory=list, init=False)
    iterations: int = field(default=0, init=False)
    worst_residual: float = field(default=math.inf, init=False)

    def _setup(self, record: MeasurementRecord, basesA: ObservableBasis, basesB: ObservableBasis):
        d = basesA.model.qdim
        blocks = []
        for a, b in _pairs(basesA, basesB):
            ops, target, labels = [], [], []
            for i, j, obs in _observables(basesA, basesB, a, b):
                try:
                    target.append(record.entries[(a, i, b, j)])
                except KeyError:
                    raise KeyError(f"record has no entry for {(a, i, b, j)}") from None
                ops.append(obs)
                labels.append((a, i, b, j))
            blocks.append(_Block((a, b), float(d[a] * d[b]), np.array(ops), np.array(target), labels))
        return blocks

    @staticmethod
    def _state(blk: _Block, lam: np.ndarray):
        h = np.einsum("k,kij->ij", lam, blk.ops) - np.eye(blk.ops.shape[1])
        return _expm_herm(0.5 * (h + h.conj().T))

    def _dual(self, blocks, lams) -> float:
        val = 0.0
        for blk, lam in zip(blocks, lams):
            ev, _, _ = self._state(blk, lam)
            val += float(lam @ blk.target) - blk.weight * float(np.exp(ev).sum())
        return val

    def _grad_hess(self, blk: _Block, lam: np.ndarray, need_hess: bool):
        ev, u, sigma = self._state(blk, lam)
        moments = blk.weight * np.einsum("kij,ji->k", blk.ops, sigma).real
        grad = blk.target - moments
        if not need_hess:
            return grad, None
        rot = np.einsum("ip,kij,jq->kpq", u.conj(), blk.ops, u)
        kern = _divided_exp(ev)
        flat = rot.reshape(len(lam), -1)
        hess = blk.weight * ((flat.conj() * kern.ravel()) @ flat.T).real
        return grad, hess

    def solve(self, record: MeasurementRecord, basesA: ObservableBasis, basesB: ObservableBasis) -> FactorizedOperator:
        blocks = self._setup(record, basesA, basesB)
        lams = [np.zeros(len(b.target)) for b in blocks]
        newton = self.method == "newton"
        if self.method not in ("newton", "gradient"):
            raise ValueError(f"unknown method {self.method!r}")
        self.history = [self._dual(blocks, lams)]
        for it in range(1, self.max_iter + 1):
            grads, dirs = [], []
            for blk, lam in zip(blocks, lams):
                g, h = self._grad_hess(blk, lam, newton)
                grads.append(g)
                if newton:
                    try:
                        dirs.append(np.linalg.solve(h, g))
                    except np.linalg.LinAlgError:
                        dirs.append(g)
                else:
                    dirs.append(g)
            self.worst_residual = max((float(np.abs(g).max(initial=0.0)) for g in grads), default=0.0)
            if self.worst_residual < self.tol:
                self.iterations = it - 1
                break
            slope = sum(float(g @ s) for g, s in zip(grads, dirs))
            t = self.step
            current = self.history[-1]
            while True:
                trial = [lam + t * s for lam, s in zip(lams, dirs)]
                val = self._dual(blocks, trial)
                if val >= current + self.armijo * t * slope or t < 1e-16:
                    break
                t *= self.backtrack
            if val < current:
                # no ascent possible at machine precision
                self.iterations = it
                break
            lams = trial
            self.history.append(val)
        else:
            self.iterations = self.max_iter
        if self.worst_residual >= self.tol:
            raise ConvergenceError("max-entropy dual ascent did not converge", self.worst_residual, self.iterations)
        self.multipliers = {}
        out = {}
        for blk, lam in zip(blocks, lams):
            for lab, v in zip(blk.labels, lam):
                self.multipliers[lab] = float(v)
            out[blk.key] = self._state(blk, lam)[2]
        return FactorizedOperator(basesA.sectors, basesB.sectors, out)

    def candidate(self, record, basesA, basesB, multipliers: dict) -> FactorizedOperator:
        """Normalized state for given multipliers (PSD, unit quantum trace)."""
        blocks = {}
        for blk in self._setup(record, basesA, basesB):
            lam = np.array([multipliers.get(lab, 0.0) for lab in blk.labels])
            blocks[blk.key] = self._state(blk, lam)[2]
        f = FactorizedOperator(basesA.sectors, basesB.sectors, blocks)
        return f / quantum_trace(f)


def inferred_state_numeric(
    record: MeasurementRecord,
    basesA: ObservableBasis,
    basesB: ObservableBasis,
    solver: MaxEntSolver | None = None,
) -> FactorizedOperator:
    return (solver or MaxEntSolver()).solve(record, basesA, basesB)


def _default_bases(rho: AnyonicDensityOperator):
    return build_observable_basis(rho.basis.basisA), build_observable_basis(rho.basis.basisB)


def inferred_state(
    rho: AnyonicDensityOperator,
    method: str = "sever",
    bases: tuple[ObservableBasis, ObservableBasis] | None = None,
    solver: MaxEntSolver | None = None,
) -> FactorizedOperator:
    """Inferred state by ``method``: ``sever``, ``closed_form`` or ``numeric``."""
    if method == "sever":
        return sever(rho)
    basesA, basesB = bases or _default_bases(rho)
    record = measure_all(rho, basesA, basesB)
    if method in ("closed_form", "closed-form"):
        return inferred_state_closed_form(record, basesA, basesB)
    if method == "numeric":
        return inferred_state_numeric(record, basesA, basesB, solver)
    raise ValueError(f"unknown inference method {method!r}")


def topological_correlation(rho: AnyonicDensityOperator, method: str = "sever", bases=None, solver=None) -> float:
    """``S̃(σ_m(ρ)) - S̃(ρ)`` in bits."""
    check_state(rho)
    return anyonic_entropy(inferred_state(rho, method, bases, solver)) - anyonic_entropy(rho)


def ace(rho: AnyonicDensityOperator) -> float:
    """Entropy of anyonic charge entanglement ``S̃(D_{A:B}[ρ]) - S̃(ρ)`` in bits."""
    check_state(rho)
    return anyonic_entropy(sever(rho)) - anyonic_entropy(rho)


@dataclass
class LimitResult:
    value: float
    table: list[tuple[float, float]]

    @property
    def tail_monotone(self) -> bool:
        """Values move in one direction and successive steps shrink."""
        vals = [v for _, v in self.table]
        diffs = [b - a for a, b in zip(vals, vals[1:])]
        one_way = all(x >= 0 for x in diffs) or all(x <= 0 for x in diffs)
        steps = [abs(x) for x in diffs]
        return one_way and all(s2 <= s1 for s1, s2 in zip(steps, steps[1:]))


def topo_correlation_via_limit(rho: AnyonicDensityOperator, p_sequence: Sequence[float]) -> LimitResult:
    """Evaluate the correlation on ``(1 - p) ρ + p ρ_m`` for ``p`` decreasing to 0.

    The returned value is the one at the smallest ``p``.
    """
    ps = [float(p) for p in p_sequence]
    if not ps:
        raise ValueError("empty p sequence")
    if any(not 0.0 < p < 1.0 for p in ps):
        raise ValueError("every p must lie strictly between 0 and 1")
    if any(q >= p for p, q in zip(ps, ps[1:])):
        raise ValueError("p sequence must be strictly decreasing")
    check_state(rho)
    table = []
    for p in ps:
        r = mix(rho, p)
        table.append((p, anyonic_entropy(sever(r)) - anyonic_entropy(r)))
    return LimitResult(table[-1][1], table)


# --- closed forms for the Fibonacci families -----------------------------------


def _xlog2(x: float) -> float:
    return 0.0 if x == 0 else x * math.log2(x)


def binary_entropy(q: float) -> float:
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {q}")
    return -_xlog2(q) - _xlog2(1.0 - q)


def fib_pure_topo(q: float) -> float:
    """``H(q, 1 - q) + (1 - q) log2 d_τ²`` for the two-pair Fibonacci pure state."""
    return binary_entropy(q) + (1.0 - q) * 2 * math.log2(PHI)


def fib4_topo(p: Sequence[float]) -> float:
    """``p4 log2(p4 d_τ² / (p4 + p5)) + p5 log2(p5 d_τ / (p4 + p5))``."""
    p = [float(x) for x in p]
    if len(p) != 5 or any(x < 0 for x in p) or abs(sum(p) - 1.0) > 1e-12:
        raise ValueError("need five nonnegative probabilities summing to 1")
    p4, p5 = p[3], p[4]
    s = p4 + p5
    out = 0.0
    if p4 > 0:
        out += p4 * math.log2(p4 * PHI**2 / s)
    if p5 > 0:
        out += p5 * math.log2(p5 * PHI / s)
    return out
