"""Local observable bases and joint-measurement records.

Each party holds, per sector ``a`` of dimension ``N``, the identity plus
``N² - 1`` traceless Hermitian generators normalized to ``tr(M_i M_j) = δ_ij``.
A record entry is the quantum trace ``T̃r[ρ (M^A_{a,i} ⊗ M^B_{b,j})]``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .anyon_model import AnyonModel, ValidationReport
from .anyonic_state import AnyonicDensityOperator, FactorizedOperator
from .fusion_space import SectorBasis

__all__ = [
    "ObservableBasis",
    "MeasurementRecord",
    "gell_mann_generators",
    "build_observable_basis",
    "rotate_generators",
    "verify_algebra",
    "expectation",
    "measure_all",
]


def gell_mann_generators(n: int) -> list[np.ndarray]:
    """Traceless Hermitian basis of su(n) with ``tr(G_i G_j) = δ_ij``.

    Symmetric and antisymmetric off-diagonal families first (pairs ``j < k``),
    then the ``n - 1`` diagonal ones.
    """
    gens = []
    s = 1 / np.sqrt(2)
    for j in range(n):
        for k in range(j + 1, n):
            m = np.zeros((n, n), dtype=complex)
            m[j, k] = m[k, j] = s
            gens.append(m)
            m = np.zeros((n, n), dtype=complex)
            m[j, k] = -1j * s
            m[k, j] = 1j * s
            gens.append(m)
    for l in range(1, n):
        diag = np.zeros(n)
        diag[:l] = 1.0
        diag[l] = -l
        gens.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    return gens


@dataclass
class ObservableBasis:
    """Per-sector observables ``M_{a,0} = I, M_{a,1}, ...`` for one subsystem."""

    sectors: SectorBasis
    observables: dict[int, list[np.ndarray]]

    @property
    def model(self) -> AnyonModel:
        return self.sectors.model

    def count(self, a: int) -> int:
        return len(self.observables.get(a, ()))

    def dual_scale(self, a: int, i: int) -> float:
        """``1 / tr(M_{a,i}²)``: coefficient of the dual basis element."""
        m = self.observables[a][i]
        return 1.0 / float(np.trace(m @ m).real)


def build_observable_basis(sectors: SectorBasis) -> ObservableBasis:
    obs = {}
    for a, n in sectors.dims.items():
        if n == 0:
            obs[a] = []
            continue
        obs[a] = [np.eye(n, dtype=complex)] + gell_mann_generators(n)
    return ObservableBasis(sectors, obs)


def rotate_generators(basis: ObservableBasis, rng=None) -> ObservableBasis:
    """Apply a random orthogonal rotation to the traceless generators of every sector."""
    rng = np.random.default_rng(rng)
    obs = {}
    for a, ms in basis.observables.items():
        if len(ms) <= 1:
            obs[a] = list(ms)
            continue
        k = len(ms) - 1
        q, r = np.linalg.qr(rng.normal(size=(k, k)))
        q = q * np.sign(np.diag(r))
        gens = np.array(ms[1:])
        rotated = np.einsum("kl,lij->kij", q, gens)
        obs[a] = [ms[0]] + list(rotated)
    return ObservableBasis(basis.sectors, obs)


def verify_algebra(basis: ObservableBasis, tol: float = 1e-12) -> ValidationReport:
    """Check identity, Hermiticity, tracelessness and the product closure rule.

    For generators ``i, j >= 1`` the product must decompose as
    ``M_i M_j = (δ_ij / N) I + sum_k (i f_ijk + d_ijk) M_k`` with real
    structure constants ``f`` (totally antisymmetric) and ``d`` (symmetric);
    products involving ``M_0`` are checked for exact reconstruction only.
    """
    report = ValidationReport(tol)
    lab = basis.model.labels
    for a, ms in basis.observables.items():
        if not ms:
            continue
        n = ms[0].shape[0]
        tag = f"sector {lab[a]}"
        report.add(f"{tag}: M_0 = I", np.abs(ms[0] - np.eye(n)).max())
        if len(ms) != n * n:
            report.add(f"{tag}: count", float(abs(len(ms) - n * n)))
            continue
        gens = ms[1:]
        for i, m in enumerate(gens, 1):
            report.add(f"{tag}: M_{i} hermitian", np.abs(m - m.conj().T).max())
            report.add(f"{tag}: M_{i} traceless", abs(np.trace(m)))
        if not gens:
            continue
        G = np.array(gens)
        worst_decomp = worst_norm = worst_real = worst_anti = 0.0
        for i, mi in enumerate(ms):
            for j, mj in enumerate(ms):
                prod = mi @ mj
                c0 = np.trace(prod) / n
                ck = np.einsum("kij,ji->k", G, prod)
                recon = c0 * np.eye(n) + np.einsum("k,kij->ij", ck, G)
                worst_decomp = max(worst_decomp, np.abs(prod - recon).max())
                if i and j:
                    worst_norm = max(worst_norm, abs(c0 - (i == j) / n))
        for i, mi in enumerate(gens):
            for j, mj in enumerate(gens):
                anti = mi @ mj + mj @ mi
                comm = mi @ mj - mj @ mi
                d = np.einsum("kij,ji->k", G, anti) / 2
                f = np.einsum("kij,ji->k", G, comm) / 2j
                worst_real = max(worst_real, np.abs(d.imag).max(), np.abs(f.imag).max())
                # f_ijk must flip sign under i <-> k
                for k, gk in enumerate(gens):
                    f_kji = np.trace(mi @ (gk @ mj - mj @ gk)) / 2j
                    worst_anti = max(worst_anti, abs(f[k] + f_kji))
        report.add(f"{tag}: product decomposition", worst_decomp)
        report.add(f"{tag}: identity coefficient δ_ij/N", worst_norm)
        report.add(f"{tag}: structure constants real", worst_real)
        report.add(f"{tag}: f antisymmetric", worst_anti)
    return report


@dataclass
class MeasurementRecord:
    """Joint expectation values keyed by ``(a, i, b, j)`` (charge indices)."""

    model: AnyonModel
    entries: dict[tuple[int, int, int, int], float] = field(default_factory=dict)

    def __getitem__(self, key):
        return self.entries[key]

    def __len__(self):
        return len(self.entries)

    def keys(self):
        return self.entries.keys()

    def max_abs_diff(self, other: MeasurementRecord) -> float:
        if set(self.entries) != set(other.entries):
            raise ValueError("records cover different index sets")
        return max((abs(v - other.entries[k]) for k, v in self.entries.items()), default=0.0)

    def to_csv(self) -> str:
        lab = self.model.labels
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["a", "i", "b", "j", "value"])
        for (a, i, b, j), v in sorted(self.entries.items()):
            w.writerow([lab[a], i, lab[b], j, f"{v:.12g}"])
        return buf.getvalue()


def _check_index(basis: ObservableBasis, a: int, i: int, side: str):
    if not 0 <= i < basis.count(a):
        raise IndexError(f"observable index {i} out of range for sector {basis.model.labels[a]} of {side}")


def expectation(rho, a, i, b, j, basesA: ObservableBasis, basesB: ObservableBasis) -> float:
    """``T̃r[ρ (M^A_{a,i} ⊗ M^B_{b,j})]`` for a fusion-basis or factorized operator.

    In the fusion basis the factorized observable sits with unit weight in
    every block ``c`` allowed by fusion, so the value is
    ``sum_c d_c tr(ρ_c[ab] · M ⊗ M)``.
    """
    model = basesA.model
    a, b = model.index(a), model.index(b)
    _check_index(basesA, a, i, "A")
    _check_index(basesB, b, j, "B")
    obs = np.kron(basesA.observables[a][i], basesB.observables[b][j])
    d = model.qdim
    if isinstance(rho, FactorizedOperator):
        val = d[a] * d[b] * np.trace(rho.blocks[(a, b)] @ obs)
    else:
        val = 0j
        for c, where in rho.basis.pair_indices.items():
            idx = where.get((a, b))
            if idx is None:
                continue
            val += d[c] * np.trace(rho.blocks[c][np.ix_(idx, idx)] @ obs)
    return float(val.real)


def _pair_moment(rho, a: int, b: int) -> np.ndarray:
    """Matrix ``X`` with ``T̃r[ρ O] = tr(X O)`` for any observable ``O`` on ``V_a ⊗ V_b``."""
    d = rho.model.qdim
    if isinstance(rho, FactorizedOperator):
        return d[a] * d[b] * rho.blocks[(a, b)]
    n = rho.basis.pair_dim(a, b)
    x = np.zeros((n, n), dtype=complex)
    for c, where in rho.basis.pair_indices.items():
        idx = where.get((a, b))
        if idx is not None:
            x += d[c] * rho.blocks[c][np.ix_(idx, idx)]
    return x


def measure_all(rho, basesA: ObservableBasis, basesB: ObservableBasis) -> MeasurementRecord:
    """Full table of joint expectation values over all sector pairs and observables."""
    rec = MeasurementRecord(basesA.model)
    for a in basesA.sectors.charges:
        for b in basesB.sectors.charges:
            x = _pair_moment(rho, a, b)
            for i, ma in enumerate(basesA.observables[a]):
                for j, mb in enumerate(basesB.observables[b]):
                    rec.entries[(a, i, b, j)] = float(np.trace(x @ np.kron(ma, mb)).real)
    return rec
