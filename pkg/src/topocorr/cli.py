"""Command-line front end.

Exit status: 0 success, 1 validation failure or malformed input, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import fibonacci_states
from .anyon_model import AnyonModel, ModelError, builtin, load_model, verify_pentagon
from .anyonic_state import (
    InvalidStateError,
    anyonic_entropy,
    embed,
    load_state,
    quantum_trace,
    random_state,
    sever,
    state_to_dict,
)
from .fusion_space import bipartite_basis
from .inference import (
    ConvergenceError,
    MaxEntSolver,
    PHI,
    ace,
    fib4_topo,
    fib_pure_topo,
    inferred_state,
    topo_correlation_via_limit,
    topological_correlation,
)
from .measurement import build_observable_basis, measure_all

COMMANDS = (
    "model-info",
    "validate",
    "entropy",
    "measure",
    "infer",
    "topo",
    "ace",
    "limit-check",
    "example-fib4",
    "example-fib-pure",
    "sweep",
)
STATE_COMMANDS = {"entropy", "measure", "infer", "topo", "ace", "limit-check"}
SWEEP_HEADER = "param,entropy_rho,entropy_inferred,c_topo,c_ace"
LIMIT_TOL = 1e-4


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    pass


def fmt(x: float) -> str:
    return f"{x:.12g}"


@dataclass
class RunConfig:
    command: str
    builtin: str | None = None
    model: str | None = None
    state: str | None = None
    q: float | None = None
    p: list[float] | None = None
    sweep: str | None = None
    method: str = "sever"
    format: str = "table"
    seed: int = 0
    out: str | None = None
    tol: float = 1e-10
    max_iter: int = 100_000
    p_sequence: list[float] = field(default_factory=lambda: [10.0**-k for k in range(2, 7)])

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.command in STATE_COMMANDS and not self.state:
            raise UsageError(f"command {self.command!r} requires --state PATH")
        if self.command == "sweep" and not self.sweep:
            raise UsageError("command 'sweep' requires --sweep VAR:LO:HI:STEP")
        if self.builtin and self.model:
            raise UsageError("give at most one of --builtin and --model")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="topocorr", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    src = ap.add_mutually_exclusive_group()
    src.add_argument("--builtin", metavar="NAME", help="fibonacci, ising, z<N>")
    src.add_argument("--model", metavar="PATH", help="model description JSON")
    ap.add_argument("--state", metavar="PATH", help="state JSON")
    ap.add_argument("--q", type=float, help="pure-state weight for example-fib-pure")
    ap.add_argument("--p", type=_floats, metavar="P1,P2,P3,P4,P5", help="weights for the four-anyon family")
    ap.add_argument("--sweep", metavar="VAR:LO:HI:STEP", help="VAR is q or ratio (p4/p5)")
    ap.add_argument("--method", choices=("sever", "closed-form", "numeric"), default="sever")
    ap.add_argument("--p-seq", type=_floats, dest="p_sequence", help="mixing weights for limit-check")
    ap.add_argument("--format", choices=("table", "csv", "json"), default="table")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tol", type=float, default=1e-10, help="model validation tolerance")
    ap.add_argument("--max-iter", type=int, default=100_000, help="numeric solver iteration cap")
    ap.add_argument("--out", metavar="PATH")
    return ap


def config_from_args(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    kwargs = {k: v for k, v in vars(ns).items() if v is not None}
    return RunConfig(**kwargs)


@contextmanager
def _output(path):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


def _model(cfg: RunConfig) -> AnyonModel:
    if cfg.model:
        return load_model(cfg.model)
    return builtin(cfg.builtin or "fibonacci")


def _emit(cfg: RunConfig, fh, rows: list[tuple[str, object]], doc: dict | None = None):
    """Write key/value results in the configured format."""
    if cfg.format == "json":
        payload = dict(doc) if doc is not None else {}
        for k, v in rows:
            payload.setdefault(k, v)
        json.dump(payload, fh, ensure_ascii=False, indent=1)
        fh.write("\n")
    elif cfg.format == "csv":
        fh.write("key,value\n")
        for k, v in rows:
            fh.write(f"{k},{fmt(v) if isinstance(v, float) else v}\n")
    else:
        width = max(len(k) for k, _ in rows)
        for k, v in rows:
            fh.write(f"{k:<{width}}  {fmt(v) if isinstance(v, float) else v}\n")


# --- commands ---------------------------------------------------------------


def cmd_model_info(cfg, fh):
    m = _model(cfg)
    rep = verify_pentagon(m, cfg.tol)
    lab = m.labels
    rules = []
    for a in range(m.n_charges):
        for b in range(a, m.n_charges):
            outs = " + ".join(lab[c] for c in m.fusion_outcomes(a, b))
            rules.append(f"{lab[a]} x {lab[b]} = {outs}")
    rows = [("model", m.name), ("charges", ", ".join(lab))]
    rows += [(f"d_{lab[a]}", float(m.qdim[a])) for a in range(m.n_charges)]
    rows += [("total_qdim", m.total_qdim), ("pentagon", "pass" if rep.passed else "FAIL")]
    rows += [("max_residual", rep.max_residual)]
    doc = {
        "model": m.name,
        "charges": list(lab),
        "qdim": {lab[a]: float(m.qdim[a]) for a in range(m.n_charges)},
        "total_qdim": m.total_qdim,
        "fusion_rules": rules,
        "pentagon": rep.passed,
        "max_residual": rep.max_residual,
    }
    if cfg.format == "table":
        rows += [("fusion", r) for r in rules]
    _emit(cfg, fh, rows, doc)
    if not rep.passed:
        raise CheckFailed(rep.summary())


def cmd_validate(cfg, fh):
    m = _model(cfg) if not cfg.state else None
    rows = []
    if cfg.state:
        rho = load_state(cfg.state)
        m = rho.model
        rows += [("state", "valid"), ("quantum_trace", quantum_trace(rho))]
    rep = verify_pentagon(m, cfg.tol)
    rows.insert(0, ("pentagon", rep.summary()))
    # randomized severing checks on a small partition of this model
    rng = np.random.default_rng(cfg.seed)
    leaves = [q for q in range(1, m.n_charges) if m.qdim[q] > 1 + 1e-12][:1] or [m.n_charges - 1]
    basis = rho.basis if cfg.state else bipartite_basis(m, leaves * 2, leaves * 2)
    worst = 0.0
    for _ in range(20):
        f = sever(random_state(basis, rng))
        drift = abs(anyonic_entropy(f) - anyonic_entropy(embed(f, basis)))
        worst = max(worst, abs(quantum_trace(f) - 1.0), drift)
    rows.append(("sever_checks", f"{'pass' if worst < cfg.tol else 'FAIL'} (seed {cfg.seed}, max residual {worst:.3e})"))
    _emit(cfg, fh, rows)
    if not rep.passed or worst >= cfg.tol:
        raise CheckFailed("validation failed")


def cmd_entropy(cfg, fh):
    rho = load_state(cfg.state)
    rows = [("quantum_trace", quantum_trace(rho)), ("entropy", anyonic_entropy(rho))]
    _emit(cfg, fh, rows)


def cmd_measure(cfg, fh):
    rho = load_state(cfg.state)
    bA, bB = build_observable_basis(rho.basis.basisA), build_observable_basis(rho.basis.basisB)
    rec = measure_all(rho, bA, bB)
    if cfg.format == "json":
        lab = rho.model.labels
        entries = [
            {"a": lab[a], "i": i, "b": lab[b], "j": j, "value": v} for (a, i, b, j), v in sorted(rec.entries.items())
        ]
        json.dump({"record": entries}, fh, ensure_ascii=False, indent=1)
        fh.write("\n")
    else:
        fh.write(rec.to_csv())


def _solver(cfg):
    return MaxEntSolver(max_iter=cfg.max_iter)


def cmd_infer(cfg, fh):
    rho = load_state(cfg.state)
    sigma = inferred_state(rho, cfg.method.replace("-", "_"), solver=_solver(cfg))
    embedded = embed(sigma, rho.basis)
    if cfg.format == "json":
        json.dump(state_to_dict(embedded), fh, ensure_ascii=False, indent=1)
        fh.write("\n")
        return
    lab = rho.model.labels
    rows = [("method", cfg.method), ("entropy_rho", anyonic_entropy(rho)), ("entropy_inferred", anyonic_entropy(sigma))]
    for (a, b), blk in sigma.blocks.items():
        w = float(rho.model.qdim[a] * rho.model.qdim[b] * np.trace(blk).real)
        rows.append((f"weight({lab[a]},{lab[b]})", w))
    _emit(cfg, fh, rows)


def cmd_topo(cfg, fh):
    rho = load_state(cfg.state)
    val = topological_correlation(rho, cfg.method.replace("-", "_"), solver=_solver(cfg))
    _emit(cfg, fh, [("method", cfg.method), ("c_topo", _clean(val))])


def cmd_ace(cfg, fh):
    rho = load_state(cfg.state)
    _emit(cfg, fh, [("c_ace", _clean(ace(rho)))])


def cmd_limit_check(cfg, fh):
    rho = load_state(cfg.state)
    res = topo_correlation_via_limit(rho, cfg.p_sequence)
    direct = topological_correlation(rho)
    err = abs(res.value - direct)
    if cfg.format == "json":
        doc = {"direct": direct, "limit": res.value, "error": err, "table": [{"p": p, "c_topo": v} for p, v in res.table]}
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    else:
        sep = "," if cfg.format == "csv" else "  "
        fh.write(f"p{sep}c_topo\n")
        for p, v in res.table:
            fh.write(f"{fmt(p)}{sep}{fmt(v)}\n")
        fh.write(f"direct{sep}{fmt(direct)}\nerror{sep}{fmt(err)}\n")
    if err >= LIMIT_TOL:
        raise CheckFailed(f"limit differs from direct value by {err:.3e}")


def _clean(x: float) -> float:
    # rounding-level negatives print as -0 otherwise
    return 0.0 if abs(x) < 1e-12 else x


def _family_row(rho):
    s_rho = anyonic_entropy(rho)
    sigma = sever(rho)
    s_inf = anyonic_entropy(sigma)
    return s_rho, s_inf, _clean(s_inf - s_rho), _clean(ace(rho))


def cmd_example_fib_pure(cfg, fh):
    if cfg.q is None:
        raise UsageError("example-fib-pure requires --q")
    if not 0.0 <= cfg.q <= 1.0:
        raise UsageError("--q must lie in [0, 1]")
    rho = fibonacci_states.pure_state(cfg.q)
    s_rho, s_inf, c, _ = _family_row(rho)
    ref = fib_pure_topo(cfg.q)
    q_star = 1.0 / (1.0 + PHI**2)
    rows = [("q", cfg.q), ("entropy_rho", s_rho), ("entropy_inferred", s_inf), ("c_topo", c), ("closed_form", ref)]
    if abs(cfg.q - q_star) < 1e-6:
        rows.append(("note", f"q = 1/D^2 = {fmt(q_star)}: maximum 2 log2 D = {fmt(2 * math.log2(math.sqrt(1 + PHI**2)))}"))
    _emit(cfg, fh, rows, {"state": state_to_dict(rho)} if cfg.format == "json" else None)


def _check_p(p):
    if p is None:
        return [0.2] * 5
    if len(p) != 5 or any(x < 0 for x in p) or abs(sum(p) - 1.0) > 1e-9:
        raise UsageError("--p needs five nonnegative numbers summing to 1")
    s = sum(p)
    return [x / s for x in p]


def cmd_example_fib4(cfg, fh):
    p = _check_p(cfg.p)
    rho = fibonacci_states.four_anyon_state(p)
    s_rho, s_inf, c, _ = _family_row(rho)
    rows = [("p", ",".join(fmt(x) for x in p)), ("entropy_rho", s_rho), ("entropy_inferred", s_inf)]
    rows += [("c_topo", c), ("closed_form", fib4_topo(p))]
    if abs(p[3] - p[4] / PHI) < 1e-9:
        rows.append(("note", "p4 = p5/d_tau: state is fixed by local measurements (c_topo = 0)"))
    _emit(cfg, fh, rows, {"state": state_to_dict(rho)} if cfg.format == "json" else None)


def parse_sweep(text: str) -> tuple[str, list[float]]:
    try:
        var, lo, hi, step = text.split(":")
        lo, hi, step = float(lo), float(hi), float(step)
    except ValueError:
        raise UsageError(f"--sweep must look like VAR:LO:HI:STEP, got {text!r}") from None
    if var not in ("q", "ratio"):
        raise UsageError(f"unknown sweep variable {var!r} (q or ratio)")
    if step <= 0 or hi < lo:
        raise UsageError("empty sweep range")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return var, [round(lo + k * step, 12) for k in range(n)]


def sweep(cfg: RunConfig, fh) -> None:
    """CSV rows ``param,entropy_rho,entropy_inferred,c_topo,c_ace`` in ascending ``param``."""
    var, grid = parse_sweep(cfg.sweep)
    fh.write(SWEEP_HEADER + "\n")
    mass = None
    if var == "ratio":
        p = _check_p(cfg.p)
        mass = p[3] + p[4]
    for x in grid:
        if var == "q":
            if not 0.0 <= x <= 1.0:
                raise UsageError("q sweep must stay inside [0, 1]")
            rho = fibonacci_states.pure_state(x)
        else:
            if x < 0:
                raise UsageError("ratio sweep must be nonnegative")
            p4 = mass * x / (1 + x)
            rho = fibonacci_states.four_anyon_state(p[:3] + [p4, mass - p4])
        row = _family_row(rho)
        fh.write(",".join(fmt(v) for v in (x, *row)) + "\n")


HANDLERS = {
    "model-info": cmd_model_info,
    "validate": cmd_validate,
    "entropy": cmd_entropy,
    "measure": cmd_measure,
    "infer": cmd_infer,
    "topo": cmd_topo,
    "ace": cmd_ace,
    "limit-check": cmd_limit_check,
    "example-fib4": cmd_example_fib4,
    "example-fib-pure": cmd_example_fib_pure,
    "sweep": sweep,
}


def run(cfg: RunConfig) -> int:
    try:
        with _output(cfg.out) as fh:
            HANDLERS[cfg.command](cfg, fh)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except InvalidStateError as exc:
        print(f"invalid state ({exc.invariant}): {exc}", file=sys.stderr)
        return 1
    except (ModelError, ConvergenceError, CheckFailed) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
