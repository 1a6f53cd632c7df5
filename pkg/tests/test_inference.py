import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from topocorr.anyon_model import fibonacci, zn
from topocorr.anyonic_state import (
    anyonic_entropy,
    check_state,
    embed,
    maximally_mixed,
    quantum_trace,
    random_state,
    sever,
)
from topocorr.fusion_space import bipartite_basis
from topocorr.inference import (
    ConvergenceError,
    LimitResult,
    MaxEntSolver,
    ace,
    binary_entropy,
    fib4_topo,
    fib_pure_topo,
    inferred_state,
    inferred_state_closed_form,
    inferred_state_numeric,
    topo_correlation_via_limit,
    topological_correlation,
)
from topocorr.measurement import build_observable_basis, measure_all, rotate_generators
from topocorr import fibonacci_states as fs

PHI = (1 + 5**0.5) / 2
D2 = 1 + PHI**2
P_SEQ = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]


def bases_for(basis):
    return build_observable_basis(basis.basisA), build_observable_basis(basis.basisB)


def entropy_bits(eigs, weight=1.0):
    eigs = np.asarray(eigs, dtype=float)
    eigs = eigs[eigs > 0]
    return -weight * float(np.sum(eigs * np.log2(eigs)))


def test_binary_entropy():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    with pytest.raises(ValueError):
        binary_entropy(1.2)


def test_fib_pure_closed_form_values():
    assert fib_pure_topo(1 / D2) == pytest.approx(2 * math.log2(math.sqrt(D2)), abs=1e-12)
    assert fib_pure_topo(0.5) == pytest.approx(1 + math.log2(PHI), abs=1e-12)
    for q in np.linspace(0, 1, 11):
        assert fib_pure_topo(q) - binary_entropy(q) == pytest.approx((1 - q) * 2 * math.log2(PHI), abs=1e-12)


def test_fib_pure_maximum():
    qs = np.linspace(0.001, 0.999, 999)
    best = qs[np.argmax([fib_pure_topo(q) for q in qs])]
    assert abs(best - 1 / D2) < 1e-3


def test_fib4_closed_form_values():
    assert fib4_topo([0.2] * 5) == pytest.approx(0.2 * math.log2(PHI**2 / 2) + 0.2 * math.log2(PHI / 2), abs=1e-14)
    assert fib4_topo([0.2] * 5) == pytest.approx(0.0165451482, abs=1e-10)
    assert fib4_topo(fs.locc_point(0.1, 0.2, 0.3)) == pytest.approx(0, abs=1e-14)
    with pytest.raises(ValueError):
        fib4_topo([0.5, 0.5, 0.5, 0, 0])


# hand-computed oracles: diagonalize the blocks directly, no library entropy code


def pure_oracle(q):
    # ρ has a single nonzero eigenvalue 1 in the vacuum block -> entropy 0
    # σ blocks: (1,1): q, (τ,τ): (1-q)/d² with weight d²
    return entropy_bits([q]) + entropy_bits([(1 - q) / PHI**2], PHI**2)


@pytest.mark.parametrize("q", [0.05, 0.2, 1 / D2, 0.5, 0.8, 0.95])
def test_pure_pipeline(q):
    rho = fs.pure_state(q)
    assert topological_correlation(rho) == pytest.approx(pure_oracle(q), abs=1e-12)
    assert topological_correlation(rho) == pytest.approx(fib_pure_topo(q), abs=1e-12)


def fib4_oracle(p):
    d = PHI
    s_rho = entropy_bits([p[0], p[3]]) + entropy_bits([p[1] / d, p[2] / d, p[4] / d], d)
    # severed (τ,τ) block: (d_1 p4 + d_τ p5/d) / d², weight d²
    s_sigma = entropy_bits([p[0]]) + entropy_bits([p[1] / d, p[2] / d], d)
    s_sigma += entropy_bits([(p[3] + p[4]) / d**2], d**2)
    return s_sigma - s_rho


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=5, max_size=5))
def test_fib4_pipeline(raw):
    p = [x / sum(raw) for x in raw]
    p[-1] = 1 - sum(p[:-1])
    rho = fs.four_anyon_state(p)
    val = topological_correlation(rho)
    assert val == pytest.approx(fib4_oracle(p), abs=1e-12)
    assert val == pytest.approx(fib4_topo(p), abs=1e-12)


def test_fib4_locc_point_fixed():
    rho = fs.four_anyon_state(fs.locc_point(0.15, 0.1, 0.25))
    sigma = embed(sever(rho), rho.basis)
    assert sigma.max_abs_diff(rho) < 1e-14
    assert abs(topological_correlation(rho)) < 1e-12


@pytest.mark.parametrize("which", ["fib", "ising", "fib_big"])
def test_closed_form_equals_sever(which, fib_basis, ising_basis, fib_big_basis, rng):
    basis = {"fib": fib_basis, "ising": ising_basis, "fib_big": fib_big_basis}[which]
    bA, bB = bases_for(basis)
    for _ in range(10):
        rho = random_state(basis, rng)
        cf = inferred_state_closed_form(measure_all(rho, bA, bB), bA, bB)
        assert cf.max_abs_diff(sever(rho)) < 1e-12


def test_closed_form_missing_entry(fib_basis):
    bA, bB = bases_for(fib_basis)
    rec = measure_all(maximally_mixed(fib_basis), bA, bB)
    del rec.entries[(0, 0, 0, 0)]
    with pytest.raises(KeyError):
        inferred_state_closed_form(rec, bA, bB)


@pytest.mark.parametrize("method", ["newton", "gradient"])
def test_numeric_matches_closed_form(fib_basis, rng, method):
    bA, bB = bases_for(fib_basis)
    solver = MaxEntSolver(method=method)
    rho = random_state(fib_basis, rng)
    rec = measure_all(rho, bA, bB)
    num = inferred_state_numeric(rec, bA, bB, solver)
    cf = inferred_state_closed_form(rec, bA, bB)
    assert num.max_abs_diff(cf) < 1e-8
    assert anyonic_entropy(num) == pytest.approx(anyonic_entropy(cf), abs=1e-7)


def test_numeric_multi_dim_sectors(fib_big_basis, rng):
    bA, bB = bases_for(fib_big_basis)
    for _ in range(3):
        rho = random_state(fib_big_basis, rng)
        num = inferred_state(rho, "numeric")
        assert num.max_abs_diff(sever(rho)) < 1e-8
        assert topological_correlation(rho, "numeric") == pytest.approx(ace(rho), abs=1e-7)


def test_numeric_history_non_decreasing(fib_big_basis, rng):
    rho = random_state(fib_big_basis, rng)
    bA, bB = bases_for(fib_big_basis)
    for method in ("newton", "gradient"):
        solver = MaxEntSolver(method=method)
        solver.solve(measure_all(rho, bA, bB), bA, bB)
        h = np.array(solver.history)
        assert np.all(np.diff(h) >= -1e-12)
        assert solver.worst_residual < solver.tol


def test_numeric_maximally_mixed_multipliers(fib_big_basis):
    bA, bB = bases_for(fib_big_basis)
    solver = MaxEntSolver()
    solver.solve(measure_all(maximally_mixed(fib_big_basis), bA, bB), bA, bB)
    for (a, i, b, j), lam in solver.multipliers.items():
        if i or j:
            assert abs(lam) < 1e-8


def test_numeric_candidate_normalized(fib_big_basis):
    bA, bB = bases_for(fib_big_basis)
    rec = measure_all(maximally_mixed(fib_big_basis), bA, bB)
    keys = list(rec.keys())
    cand = MaxEntSolver().candidate(rec, bA, bB, {keys[1]: 0.7, keys[-1]: -0.3})
    check_state(cand)


def test_numeric_convergence_error(fib_big_basis, rng):
    bA, bB = bases_for(fib_big_basis)
    rec = measure_all(random_state(fib_big_basis, rng), bA, bB)
    with pytest.raises(ConvergenceError) as exc:
        MaxEntSolver(method="gradient", max_iter=3).solve(rec, bA, bB)
    assert exc.value.iterations == 3
    assert exc.value.worst_residual > 1e-9


def test_unknown_methods(fib_basis):
    rho = maximally_mixed(fib_basis)
    with pytest.raises(ValueError):
        inferred_state(rho, "magic")
    bA, bB = bases_for(fib_basis)
    with pytest.raises(ValueError):
        MaxEntSolver(method="magic").solve(measure_all(rho, bA, bB), bA, bB)


def test_rotation_invariance(fib_big_basis, rng):
    bA, bB = bases_for(fib_big_basis)
    rA, rB = rotate_generators(bA, rng), rotate_generators(bB, rng)
    for _ in range(5):
        rho = random_state(fib_big_basis, rng)
        base = topological_correlation(rho, "closed_form", (bA, bB))
        assert topological_correlation(rho, "closed_form", (rA, rB)) == pytest.approx(base, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([None, 1, 2]))
def test_non_negative(seed, rank):
    basis = bipartite_basis(fibonacci(), ["τ"] * 3, ["τ"] * 2)
    rho = random_state(basis, seed, rank=rank)
    assert topological_correlation(rho) >= -1e-10


def test_factorized_state_has_zero_correlation(fib_big_basis, rng):
    rho = embed(sever(random_state(fib_big_basis, rng)), fib_big_basis)
    assert abs(ace(rho)) < 1e-12


@pytest.mark.parametrize("factory", [lambda: bipartite_basis(zn(2), ["e"], ["e"]), lambda: bipartite_basis(zn(3), ["e"], ["e", "e"])])
def test_sector_trivial_configuration(factory, rng):
    basis = factory()
    assert len(basis.charges) == 1
    for _ in range(10):
        assert abs(topological_correlation(random_state(basis, rng))) < 1e-12


def test_single_pair_ising(isg, rng):
    basis = bipartite_basis(isg, ["σ"] * 3, ["ψ"])
    assert len(basis.charges) == 1
    for _ in range(10):
        assert abs(topological_correlation(random_state(basis, rng))) < 1e-12


def test_limit_pure_state():
    res = topo_correlation_via_limit(fs.pure_state(0.5), P_SEQ)
    assert isinstance(res, LimitResult)
    assert abs(res.value - fib_pure_topo(0.5)) < 1e-4
    assert res.tail_monotone
    assert [p for p, _ in res.table] == P_SEQ


def test_limit_maximally_mixed(fib_basis):
    res = topo_correlation_via_limit(maximally_mixed(fib_basis), P_SEQ)
    assert all(abs(v) < 1e-12 for _, v in res.table)


def test_limit_uniform_fib4():
    res = topo_correlation_via_limit(fs.four_anyon_state([0.2] * 5), P_SEQ)
    assert res.value == pytest.approx(fib4_topo([0.2] * 5), abs=1e-4)


@pytest.mark.parametrize("seq", [[], [1e-3, 1e-2], [0.5, 0.5], [1.0, 0.1], [0.1, 0.0]])
def test_limit_rejects_bad_sequences(seq):
    with pytest.raises(ValueError):
        topo_correlation_via_limit(fs.pure_state(0.5), seq)


def test_ace_equals_topo(fib_basis, rng):
    for _ in range(5):
        rho = random_state(fib_basis, rng)
        assert ace(rho) == topological_correlation(rho)
        assert quantum_trace(inferred_state(rho)) == pytest.approx(1, abs=1e-12)
