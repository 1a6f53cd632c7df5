"""Multiplicity-free anyon models: charges, fusion rules, quantum dimensions, F-symbols.

Two layouts of the F-data are used.  Internally the six-index recoupling symbol
``[F^{abc}_d]_{ef}`` maps the left-associated tree ``((a b)_e c)_d`` onto the
right-associated tree ``(a (b c)_f)_d``; this is what the pentagon identity is
written in.  The four-leg form ``[F^{ab}_{a'b'}]_{cg}`` re-expresses a vertical
charge line ``c`` (``a, b`` fuse to ``c``, which splits into ``a', b'``) as a sum
over horizontal lines ``g`` running between the two vertical strands.  Bending the
``a'`` leg relates the two::

    [F^{ab}_{a'b'}]_{cg} = conj([F^{ā' a b}_{b'}]_{g c})

In the standard unitary gauge this makes ``[F^{ab}_{ab}]_{c1} = sqrt(d_c / (d_a d_b))``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from os import PathLike
from typing import Iterable, Mapping, Union

import numpy as np

__all__ = [
    "Charge",
    "AnyonModel",
    "ModelError",
    "ValidationReport",
    "fusion_multiplicity",
    "quantum_dimensions",
    "total_quantum_dimension",
    "f_symbol",
    "verify_pentagon",
    "fibonacci",
    "ising",
    "zn",
    "builtin",
    "model_from_dict",
    "model_to_dict",
    "load_model",
]

MODEL_TOL = 1e-10
ZERO_CUTOFF = 1e-14

# ASCII spellings accepted wherever a charge label is expected
ALIASES = {
    "vac": "1",
    "vacuum": "1",
    "0": "1",
    "tau": "τ",
    "t": "τ",
    "sigma": "σ",
    "s": "σ",
    "psi": "ψ",
    "p": "ψ",
}


class ModelError(ValueError):
    """Raised for unknown charges or an inconsistent model description."""


@dataclass(frozen=True)
class Charge:
    index: int
    label: str

    def __str__(self):
        return self.label


ChargeLike = Union[Charge, int, str]


@dataclass
class ValidationReport:
    """Outcome of a consistency check.

    ``entries`` holds ``(name, residual)`` pairs; the check passes iff every
    residual is below ``tol``.
    """

    tol: float
    entries: list[tuple[str, float]] = field(default_factory=list)

    def add(self, name: str, residual: float):
        self.entries.append((name, float(residual)))

    @property
    def max_residual(self) -> float:
        return max((r for _, r in self.entries), default=0.0)

    @property
    def passed(self) -> bool:
        return all(r < self.tol for _, r in self.entries)

    @property
    def failures(self) -> list[tuple[str, float]]:
        return [(n, r) for n, r in self.entries if not r < self.tol]

    def __bool__(self):
        return self.passed

    def summary(self) -> str:
        status = "pass" if self.passed else "FAIL"
        out = f"{status} ({len(self.entries)} checks, max residual {self.max_residual:.3e}, tol {self.tol:g})"
        if not self.passed:
            name, res = self.failures[0]
            out += f"; first failure: {name} = {res:.3e}"
        return out


class AnyonModel:
    """A multiplicity-free anyon model.

    Parameters
    ----------
    name : str
    labels : sequence of str
        Charge labels, vacuum first.
    fusion : array_like, shape (n, n, n)
        ``fusion[a, b, c] = N_ab^c``, entries 0 or 1.
    f_symbols : mapping
        ``(a, b, c, d, e, f) -> [F^{abc}_d]_{ef}`` with integer charge indices.
        Admissible entries that are missing default to 1 (trivial gauge).

    The fusion structure (vacuum, multiplicity, associativity, quantum
    dimensions) is checked on construction. F-data is not: call
    :func:`verify_pentagon` for that.
    """

    def __init__(self, name: str, labels: Iterable[str], fusion, f_symbols: Mapping | None = None):
        self.name = name
        labels = list(labels)
        if len(set(labels)) != len(labels):
            raise ModelError("charge labels must be unique")
        if not labels or labels[0] != "1":
            raise ModelError("the first charge must be the vacuum '1'")
        self.charges = tuple(Charge(i, lab) for i, lab in enumerate(labels))
        self._by_label = {c.label: c.index for c in self.charges}
        n = len(labels)

        fusion = np.array(fusion, dtype=int)
        if fusion.shape != (n, n, n):
            raise ModelError(f"fusion tensor must have shape {(n, n, n)}, got {fusion.shape}")
        if np.any((fusion != 0) & (fusion != 1)):
            raise ModelError("fusion multiplicities must be 0 or 1 (multiplicity-free models only)")
        eye = np.eye(n, dtype=int)
        if not (np.array_equal(fusion[0], eye) and np.array_equal(fusion[:, 0, :], eye)):
            raise ModelError("vacuum fusion rule violated: 1 x a must equal a")
        # sum_e N_ab^e N_ec^d == sum_f N_bc^f N_af^d
        left = np.einsum("abe,ecd->abcd", fusion, fusion)
        right = np.einsum("bcf,afd->abcd", fusion, fusion)
        if not np.array_equal(left, right):
            raise ModelError("fusion rules are not associative")
        fusion.setflags(write=False)
        self.fusion = fusion

        duals = []
        for a in range(n):
            partners = np.flatnonzero(fusion[a, :, 0])
            if len(partners) != 1:
                raise ModelError(f"charge {labels[a]!r} has no unique dual")
            duals.append(int(partners[0]))
        self.dual = tuple(duals)

        self.qdim = _perron_frobenius_dims(fusion)
        self.qdim.setflags(write=False)
        self.total_qdim = float(math.sqrt(np.sum(self.qdim**2)))

        self._F = self._dense_f(f_symbols or {})
        self._F.setflags(write=False)

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, AnyonModel):
            return NotImplemented
        return (
            self.labels == other.labels
            and np.array_equal(self.fusion, other.fusion)
            and np.allclose(self._F, other._F, rtol=0, atol=ZERO_CUTOFF)
        )

    def __hash__(self):
        return hash((self.labels, self.fusion.tobytes()))

    # --- charges -----------------------------------------------------------

    @property
    def n_charges(self) -> int:
        return len(self.charges)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(c.label for c in self.charges)

    def index(self, x: ChargeLike) -> int:
        """Integer handle of a charge given as :class:`Charge`, index or label."""
        if isinstance(x, Charge):
            if x.index < self.n_charges and self.charges[x.index] == x:
                return x.index
            raise ModelError(f"charge {x!r} does not belong to model {self.name!r}")
        if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
            if 0 <= x < self.n_charges:
                return int(x)
            raise ModelError(f"charge index {x} out of range for model {self.name!r}")
        if isinstance(x, str):
            if x in self._by_label:
                return self._by_label[x]
            alias = ALIASES.get(x.lower())
            if alias is not None and alias in self._by_label:
                return self._by_label[alias]
            raise ModelError(f"unknown charge label {x!r} in model {self.name!r}")
        raise ModelError(f"cannot interpret {x!r} as a charge")

    def charge(self, x: ChargeLike) -> Charge:
        return self.charges[self.index(x)]

    def label(self, x: ChargeLike) -> str:
        return self.charges[self.index(x)].label

    # --- fusion ------------------------------------------------------------

    def N(self, a: ChargeLike, b: ChargeLike, c: ChargeLike) -> int:
        return int(self.fusion[self.index(a), self.index(b), self.index(c)])

    def fusion_outcomes(self, a: ChargeLike, b: ChargeLike) -> list[int]:
        return [int(c) for c in np.flatnonzero(self.fusion[self.index(a), self.index(b)])]

    def d(self, a: ChargeLike) -> float:
        return float(self.qdim[self.index(a)])

    # --- F-symbols ---------------------------------------------------------

    def _admissible6(self, a, b, c, d, e, f) -> bool:
        N = self.fusion
        return bool(N[a, b, e] and N[e, c, d] and N[b, c, f] and N[a, f, d])

    def _dense_f(self, f_symbols: Mapping) -> np.ndarray:
        n = self.n_charges
        F = np.zeros((n,) * 6, dtype=complex)
        for idx in itertools.product(range(n), repeat=6):
            if self._admissible6(*idx):
                F[idx] = 1.0
        for key, val in f_symbols.items():
            idx = tuple(self.index(k) for k in key)
            if len(idx) != 6:
                raise ModelError(f"F-symbol key must have six charges, got {key!r}")
            if not self._admissible6(*idx):
                if abs(val) > ZERO_CUTOFF:
                    raise ModelError(f"nonzero F-symbol on inadmissible labels {key!r}")
                continue
            F[idx] = complex(val)
        return F

    def F6(self, a, b, c, d, e, f) -> complex:
        """Recoupling symbol ``[F^{abc}_d]_{ef}``; exact 0 when inadmissible."""
        idx = tuple(self.index(x) for x in (a, b, c, d, e, f))
        return complex(self._F[idx])

    def f_matrix(self, a, b, c, d) -> tuple[list[int], list[int], np.ndarray]:
        """``F^{abc}_d`` restricted to admissible rows ``e`` and columns ``f``."""
        a, b, c, d = (self.index(x) for x in (a, b, c, d))
        N = self.fusion
        rows = [e for e in range(self.n_charges) if N[a, b, e] and N[e, c, d]]
        cols = [f for f in range(self.n_charges) if N[b, c, f] and N[a, f, d]]
        return rows, cols, self._F[a, b, c, d][np.ix_(rows, cols)]

    def f_symbol(self, a, b, ap, bp, c, g) -> complex:
        """Four-leg symbol ``[F^{ab}_{a'b'}]_{cg}`` (vertical line ``c`` to horizontal ``g``)."""
        a, b, ap, bp, c, g = (self.index(x) for x in (a, b, ap, bp, c, g))
        N = self.fusion
        if not (N[a, b, c] and N[ap, bp, c]):
            return 0j
        return complex(np.conj(self._F[self.dual[ap], a, b, bp, g, c]))

    def four_leg_matrix(self, a, b, ap, bp) -> tuple[list[int], list[int], np.ndarray]:
        """``[F^{ab}_{a'b'}]`` over admissible vertical ``c`` (rows) and horizontal ``g`` (cols)."""
        a, b, ap, bp = (self.index(x) for x in (a, b, ap, bp))
        N = self.fusion
        x = self.dual[ap]
        rows = [c for c in range(self.n_charges) if N[a, b, c] and N[ap, bp, c]]
        cols = [g for g in range(self.n_charges) if N[x, a, g] and N[g, b, bp]]
        mat = np.array([[self.f_symbol(a, b, ap, bp, c, g) for g in cols] for c in rows], dtype=complex)
        return rows, cols, mat.reshape(len(rows), len(cols))

    def with_f_symbols(self, overrides: Mapping, name: str | None = None) -> AnyonModel:
        """Copy of the model with some six-index F-symbols replaced."""
        n = self.n_charges
        current = {idx: self._F[idx] for idx in itertools.product(range(n), repeat=6) if self._admissible6(*idx)}
        for key, val in overrides.items():
            current[tuple(self.index(k) for k in key)] = val
        return AnyonModel(name or self.name, self.labels, self.fusion, current)

    def __repr__(self):
        return f"AnyonModel({self.name!r}, charges={list(self.labels)})"


def _perron_frobenius_dims(fusion: np.ndarray) -> np.ndarray:
    n = fusion.shape[0]
    dims = np.empty(n)
    for a in range(n):
        ev = np.linalg.eigvals(fusion[a].astype(float))
        dims[a] = np.max(np.abs(ev))
    dims[0] = 1.0
    resid = np.abs(np.einsum("abc,c->ab", fusion, dims) - np.outer(dims, dims)).max()
    if resid > MODEL_TOL or np.any(dims < 1 - MODEL_TOL):
        raise ModelError(f"no positive solution of d_a d_b = sum_c N_ab^c d_c (residual {resid:.2e})")
    return dims


# --- functional interface ---------------------------------------------------


def fusion_multiplicity(model: AnyonModel, a: ChargeLike, b: ChargeLike, c: ChargeLike) -> int:
    return model.N(a, b, c)


def quantum_dimensions(model: AnyonModel) -> np.ndarray:
    return model.qdim.copy()


def total_quantum_dimension(model: AnyonModel) -> float:
    return model.total_qdim


def f_symbol(model: AnyonModel, a, b, ap, bp, c, g) -> complex:
    return model.f_symbol(a, b, ap, bp, c, g)


def verify_pentagon(model: AnyonModel, tol: float = MODEL_TOL) -> ValidationReport:
    """Check F-matrix unitarity and every pentagon instance.

    Pentagon in six-index form::

        [F^{fcd}_e]_{gl} [F^{abl}_e]_{fk} = sum_h [F^{abc}_g]_{fh} [F^{ahd}_e]_{gk} [F^{bcd}_k]_{hl}

    One report entry per F-matrix (unitarity) and one per outer label set
    ``(a, b, c, d, e)`` holding the worst residual over the inner labels.
    """
    report = ValidationReport(tol)
    n = model.n_charges
    lab = model.labels
    for a, b, c, d in itertools.product(range(n), repeat=4):
        rows, cols, mat = model.f_matrix(a, b, c, d)
        if not rows and not cols:
            continue
        name = f"unitarity F^{{{lab[a]}{lab[b]}{lab[c]}}}_{lab[d]}"
        if len(rows) != len(cols):
            report.add(name, math.inf)
            continue
        report.add(name, np.abs(mat @ mat.conj().T - np.eye(len(rows))).max())

    F = model._F
    for a, b in itertools.product(range(n), repeat=2):
        # lhs[c,d,e,f,g,k,l] = F[f,c,d,e,g,l] * F[a,b,l,e,f,k]
        lhs = np.einsum("fcdegl,lefk->cdefgkl", F, F[a, b])
        # rhs = sum_h F[a,b,c,g,f,h] F[a,h,d,e,g,k] F[b,c,d,k,h,l]
        rhs = np.einsum("cgfh,hdegk,cdkhl->cdefgkl", F[a, b], F[a], F[b])
        resid = np.abs(lhs - rhs).max(axis=(3, 4, 5, 6))
        # only label sets carrying at least one tree (((a b)_f c)_g d)_e
        trees = np.einsum("f,fcg,gde->cde", model.fusion[a, b], model.fusion, model.fusion)
        for c, d, e in zip(*np.nonzero(trees)):
            report.add(f"pentagon ({lab[a]},{lab[b]},{lab[c]},{lab[d]}->{lab[e]})", resid[c, d, e])
    return report


# --- built-in models ----------------------------------------------------------


def _fusion_from_rules(n: int, rules: Mapping[tuple[int, int], Iterable[int]]) -> np.ndarray:
    N = np.zeros((n, n, n), dtype=int)
    for a in range(n):
        N[0, a, a] = N[a, 0, a] = 1
    for (a, b), outs in rules.items():
        for c in outs:
            N[a, b, c] = N[b, a, c] = 1
    return N


def fibonacci() -> AnyonModel:
    """Fibonacci anyons {1, τ} with τ × τ = 1 + τ."""
    phi = (1 + math.sqrt(5)) / 2
    N = _fusion_from_rules(2, {(1, 1): (0, 1)})
    t = 1
    f = {
        (t, t, t, t, 0, 0): 1 / phi,
        (t, t, t, t, 0, t): 1 / math.sqrt(phi),
        (t, t, t, t, t, 0): 1 / math.sqrt(phi),
        (t, t, t, t, t, t): -1 / phi,
    }
    return _checked(AnyonModel("fibonacci", ["1", "τ"], N, f))


def ising() -> AnyonModel:
    """Ising anyons {1, σ, ψ}."""
    s, p = 1, 2
    N = _fusion_from_rules(3, {(s, s): (0, p), (s, p): (s,), (p, p): (0,)})
    r = 1 / math.sqrt(2)
    f = {
        (s, s, s, s, 0, 0): r,
        (s, s, s, s, 0, p): r,
        (s, s, s, s, p, 0): r,
        (s, s, s, s, p, p): -r,
        (s, p, s, p, s, s): -1.0,
        (p, s, p, s, s, s): -1.0,
    }
    return _checked(AnyonModel("ising", ["1", "σ", "ψ"], N, f))


def zn(n: int) -> AnyonModel:
    """Abelian Z_n anyons with trivial F-symbols. Labels ``1, e, e2, ...``."""
    if n < 1:
        raise ModelError("Z_n needs n >= 1")
    N = np.zeros((n, n, n), dtype=int)
    for a, b in itertools.product(range(n), repeat=2):
        N[a, b, (a + b) % n] = 1
    labels = ["1"] + ["e" if k == 1 else f"e{k}" for k in range(1, n)]
    return _checked(AnyonModel(f"z{n}", labels, N))


def _checked(model: AnyonModel) -> AnyonModel:
    report = verify_pentagon(model)
    if not report.passed:
        raise ModelError(f"model {model.name!r} fails consistency: {report.summary()}")
    return model


def builtin(name: str, n: int | None = None) -> AnyonModel:
    """Look up a built-in model: ``fibonacci``, ``ising``, ``zn`` (with ``n``) or ``z<n>``."""
    key = name.lower().replace("_", "")
    if key in ("fibonacci", "fib"):
        return fibonacci()
    if key == "ising":
        return ising()
    if key == "zn":
        if n is None:
            raise ModelError("builtin 'zn' requires the parameter n")
        return zn(int(n))
    if key.startswith("z") and key[1:].isdigit():
        return zn(int(key[1:]))
    raise ModelError(f"unknown builtin model {name!r}")


# --- model description documents --------------------------------------------


def model_from_dict(doc: Mapping, check: bool = True) -> AnyonModel:
    """Build a model from a description document.

    Fields: ``name``, ``charges`` (labels, vacuum first), ``fusion`` (triples
    ``[a, b, c]`` with multiplicity 1), ``f_symbols`` (objects with keys
    ``a, b, ap, bp, c, g, re, im`` in four-leg form). A ``builtin`` field
    (``fibonacci | ising | zn`` plus ``n``) overrides the tables.
    """
    if "builtin" in doc:
        return builtin(doc["builtin"], doc.get("n"))
    try:
        labels = list(doc["charges"])
        triples = doc.get("fusion", [])
    except (KeyError, TypeError) as exc:
        raise ModelError(f"model document missing field: {exc}") from None
    n = len(labels)
    lookup = {lab: i for i, lab in enumerate(labels)}

    def idx(x):
        if isinstance(x, int) and 0 <= x < n:
            return x
        if x in lookup:
            return lookup[x]
        alias = ALIASES.get(str(x).lower())
        if alias in lookup:
            return lookup[alias]
        raise ModelError(f"unknown charge {x!r} in model document")

    N = np.zeros((n, n, n), dtype=int)
    for a in range(n):
        N[0, a, a] = N[a, 0, a] = 1
    for t in triples:
        if len(t) != 3:
            raise ModelError(f"fusion entry must be a triple, got {t!r}")
        a, b, c = (idx(x) for x in t)
        N[a, b, c] = 1
    # duals are needed to translate four-leg entries; build a bare model first
    bare = AnyonModel(doc.get("name", "custom"), labels, N)
    f6 = {}
    for ent in doc.get("f_symbols", []):
        try:
            a, b, ap, bp, c, g = (idx(ent[k]) for k in ("a", "b", "ap", "bp", "c", "g"))
            val = complex(float(ent.get("re", 0.0)), float(ent.get("im", 0.0)))
        except KeyError as exc:
            raise ModelError(f"f_symbols entry missing field {exc}") from None
        f6[(bare.dual[ap], a, b, bp, g, c)] = np.conj(val)
    model = AnyonModel(bare.name, labels, N, f6)
    return _checked(model) if check else model


def model_to_dict(model: AnyonModel) -> dict:
    """Inverse of :func:`model_from_dict` (explicit tables, four-leg F form)."""
    n = model.n_charges
    lab = model.labels
    fusion = [[lab[a], lab[b], lab[c]] for a, b, c in itertools.product(range(1, n), range(1, n), range(n)) if model.fusion[a, b, c]]
    fs = []
    for a, b, ap, bp, c, g in itertools.product(range(n), repeat=6):
        v = model.f_symbol(a, b, ap, bp, c, g)
        if abs(v) > ZERO_CUTOFF:
            fs.append(dict(a=lab[a], b=lab[b], ap=lab[ap], bp=lab[bp], c=lab[c], g=lab[g], re=v.real, im=v.imag))
    return {"name": model.name, "charges": list(lab), "fusion": fusion, "f_symbols": fs}


def load_model(source: str | PathLike | Mapping, check: bool = True) -> AnyonModel:
    """Model from a builtin name, an inline document, or a JSON file path."""
    if isinstance(source, Mapping):
        return model_from_dict(source, check=check)
    try:
        return builtin(str(source))
    except ModelError:
        pass
    try:
        with open(source, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ModelError(f"cannot read model file {source!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ModelError(f"model file {source!r} is not valid JSON: {exc}") from None
    return model_from_dict(doc, check=check)
