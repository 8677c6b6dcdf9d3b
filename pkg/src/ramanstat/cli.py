"""Command-line scenario runner.

    ramanstat list
    ramanstat validate FILE
    ramanstat run FILE | --builtin NAME [--out-dir D] [--threads N] [--cutoff-k K] [--tail-tol T]

Each requested observable becomes one CSV file. Column ``tau`` is followed by
one column per method, lettered A (exact), B (short_time), C (parametric),
D (no_depletion) and O (oracle). The header block repeats the resolved
scenario, so every dataset describes itself.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from . import no_depletion as nd
from . import parametric as par
from . import qpd_observables as qo
from . import short_time as st
from .exact_solver import evolve_antistokes, evolve_stokes
from .fock_core import DEFAULT_TAIL_TOL, build_product_state, extract_moments, stokes_marginal
from .numkernel import DomainError, PrecisionError, TruncationError
from .oracle import evolve_tensor
from .scenarios import METHODS, SchemaError, Scenario, builtin, list_scenarios, load, validate

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3
_COMPLEX = {"amp_S", "amp_S2", "amp_L", "amp_L2"}
_PAIRS = {"varX_S_extremal", "varX_L_extremal", "varX_two_mode"}
Q_GRID = 41
Q_RADIUS = 4.0


def _safe(f, *a):
    try:
        return f(*a)
    except DomainError:
        return math.nan


# --- per-method evaluation -------------------------------------------------------
# Each evaluator returns {observable: list over tau} (pairs and complex values as
# tuples / complex numbers), plus "pn_S" and "q" at the final time where supported.

def _from_moments(ms, obs) -> dict:
    out = {}
    c = None
    for o in obs:
        if o == "mean_n":
            out[o] = ms.mean_n
        elif o == "mean_m":
            out[o] = ms.mean_m
        elif o == "mean_n2":
            out[o] = ms.mean_n2
        elif o == "mean_m2":
            out[o] = ms.mean_m2
        elif o == "gamma2_S":
            out[o] = _safe(qo.gamma2, ms.mean_m, ms.mean_m2 - ms.mean_m)
        elif o == "gamma2_L":
            out[o] = _safe(qo.gamma2, ms.mean_n, ms.mean_n2 - ms.mean_n)
        elif o == "g2_LS":
            out[o] = _safe(qo.interbeam_g2, ms.cross_nm, ms.mean_n, ms.mean_m)
        elif o == "amp_S":
            out[o] = complex(np.conj(ms.a_S))
        elif o == "amp_S2":
            out[o] = complex(np.conj(ms.a_S2))
        elif o == "amp_L":
            out[o] = complex(np.conj(ms.a_L))
        elif o == "amp_L2":
            out[o] = complex(np.conj(ms.a_L2))
        elif o in _PAIRS:
            c = c or qo.central_moments(ms)
            if o == "varX_S_extremal":
                r = qo.principal_squeezing(*c["S"])
            elif o == "varX_L_extremal":
                r = qo.principal_squeezing(*c["L"])
            else:
                r = qo.two_mode_quadratures(c["L"], c["S"], c["P"], c["Q"])
            out[o] = (r.var_minus, r.var_plus)
    return out


def _tensor_rows(sc: Scenario, tensors) -> tuple[list, dict]:
    rows = [_from_moments(extract_moments(r), sc.observables) for r in tensors]
    extra = {}
    last = tensors[-1]
    if "pn_S" in sc.observables:
        extra["pn_S"] = stokes_marginal(last).real
    if "q_function_grid" in sc.observables:
        extra["q"] = _stokes_q(last, sc.mu_max)
    return rows, extra


def _q_axes():
    ax = np.linspace(-Q_RADIUS, Q_RADIUS, Q_GRID)
    re, im = np.meshgrid(ax, ax, indexing="ij")
    return re.ravel(), im.ravel()


def _stokes_q(rho, mu_max: int) -> np.ndarray:
    re, im = _q_axes()
    els = {mu: stokes_marginal(rho, mu) for mu in range(-mu_max, mu_max + 1)}
    return qo.single_mode_q(els, re + 1j * im)


def _run_exact(sc: Scenario, threads):
    rho = build_product_state(sc.laser, sc.scattered, sc.K, sc.nu_max, sc.mu_max)
    step = evolve_stokes if sc.mode == "stokes" else evolve_antistokes
    out, now = [], 0.0
    for t in sc.taus:
        rho = step(rho, t - now, threads=threads)
        now = t
        out.append(rho)
    return _tensor_rows(sc, out)


def _run_oracle(sc: Scenario, threads):
    rho = build_product_state(sc.laser, sc.scattered, sc.K, sc.nu_max, sc.mu_max)
    return _tensor_rows(sc, evolve_tensor(rho, sc.taus, "rk4", sc.mode))


def _run_short(sc: Scenario, threads):
    init = st.InitialMoments.from_states(sc.laser, sc.scattered)
    coherent = sc.laser.kind == "coherent" and sc.scattered.kind == "coherent"
    rows = []
    for t in sc.taus:
        row = _from_moments(st.photon_moments_short(init, t), sc.observables)
        # coherence degrees come from their own series, not from ratios of truncated moments
        if "gamma2_S" in row:
            row["gamma2_S"] = _safe(st.gamma2_short, init, t, "stokes")
        if "gamma2_L" in row:
            row["gamma2_L"] = _safe(st.gamma2_short, init, t, "laser")
        if "g2_LS" in row:
            row["g2_LS"] = _safe(st.interbeam_g2_short, init, t)
        if any(o in _PAIRS for o in sc.observables):
            if coherent:
                q = st.quadrature_short(sc.laser.xi, sc.scattered.xi, t)
                row.update({"varX_S_extremal": (q.var_S_minus, q.var_S_plus),
                            "varX_L_extremal": (q.var_L_minus, q.var_L_plus),
                            "varX_two_mode": (q.two_mode_minus, q.two_mode_plus)})
            else:
                for o in _PAIRS:
                    row.pop(o, None)
        rows.append(row)
    return rows, {}


def _parametric_state(sc: Scenario, t: float):
    x = sc.scattered
    init = par.initial_gaussian(xi=(x.xi, 0j) if sc.mode == "stokes" else (0j, x.xi),
                                n_ch=(x.mean_ch, 0.0) if sc.mode == "stokes" else (0.0, x.mean_ch))
    return par.evolve_noise(sc.parametric_cfg, init, t)


def _run_parametric(sc: Scenario, threads):
    if sc.scattered.kind not in ("coherent", "chaotic", "coherent_plus_chaotic"):
        raise DomainError("the parametric method needs a Gaussian scattered state")
    mode = "S" if sc.mode == "stokes" else "A"
    pump = complex(sc.laser.xi)
    k = np.arange(sc.laser.cutoff + 1)
    pl = sc.laser.diagonal()
    n1, n2 = float((k * pl).sum()), float((k * k * pl).sum())
    rows = []
    for t in sc.taus:
        co = _parametric_state(sc, t)
        spec = par.single_mode_spec(co, mode)
        m1 = par.factorial_moments(spec, 1)
        f2 = par.factorial_moments(spec, 2)
        xi = co.xi_S if mode == "S" else co.xi_A
        n = co.reorder(1.0)
        C = n.C_S if mode == "S" else n.C_A
        rep = par.squeezing_report(co)
        one = rep.first if mode == "S" else rep.second
        row = {"mean_n": n1, "mean_n2": n2, "mean_m": m1, "mean_m2": f2 + m1,
               "gamma2_S": _safe(qo.gamma2, m1, f2),
               "gamma2_L": _safe(qo.gamma2, n1, n2 - n1),
               "g2_LS": 0.0, "amp_S": complex(xi), "amp_S2": complex(C + xi * xi),
               "amp_L": pump, "amp_L2": pump * pump,
               "varX_S_extremal": (one.var_minus, one.var_plus)}
        if sc.laser.kind == "coherent":
            row["varX_L_extremal"] = (1.0, 1.0)
        rows.append({o: row[o] for o in sc.observables if o in row})
    extra = {}
    if "pn_S" in sc.observables:
        co = _parametric_state(sc, sc.taus[-1])
        extra["pn_S"] = par.photocount_pn(par.single_mode_spec(co, mode), sc.K)
    return rows, extra


def _run_nodep(sc: Scenario, threads):
    s = sc.scattered
    k = np.arange(s.cutoff + 1)
    p = s.diagonal()
    m1, m2 = float((k * p).sum()), float((k * k * p).sum())
    rows = [_from_moments(nd.stokes_moments_nodep(sc.laser, m1, m2, t),
                          [o for o in sc.observables if o not in _COMPLEX | _PAIRS])
            for t in sc.taus]
    extra = {}
    if "pn_S" in sc.observables:
        extra["pn_S"] = nd.stokes_distribution(sc.laser, s, sc.taus[-1], sc.K)
    return rows, extra


_RUNNERS = {"exact": _run_exact, "oracle": _run_oracle, "short_time": _run_short,
            "parametric": _run_parametric, "no_depletion": _run_nodep}


# --- tables ------------------------------------------------------------------------

def _fmt(v) -> str:
    return "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{float(v):.15g}"


def compute_tables(sc: Scenario, threads: int | None = None) -> dict:
    """{table name: (column names, rows)} for a validated scenario."""
    if sc.kind == "existence":
        return _existence_tables(sc)
    results = {m: _RUNNERS[m](sc, threads) for m in sc.methods}
    tables = {}
    for o in sc.observables:
        if o in ("pn_S", "q_function_grid"):
            continue
        cols, colvals = ["tau"], [sc.taus]
        for m in sc.methods:
            rows = results[m][0]
            if not all(o in r for r in rows):
                continue
            L = METHODS[m]
            vals = [r[o] for r in rows]
            if o in _COMPLEX:
                cols += [L, f"{L}_im"]
                colvals += [[complex(v).real for v in vals], [complex(v).imag for v in vals]]
            elif o in _PAIRS:
                cols += [f"{L}_minus", f"{L}_plus"]
                colvals += [[v[0] for v in vals], [v[1] for v in vals]]
            else:
                cols.append(L)
                colvals.append(vals)
        tables[o] = (cols, [list(r) for r in zip(*colvals)])
    if "pn_S" in sc.observables:
        have = [(METHODS[m], results[m][1]["pn_S"]) for m in sc.methods if "pn_S" in results[m][1]]
        size = min(len(v) for _, v in have) if have else 0
        tables["pn_S"] = (["m"] + [L for L, _ in have],
                          [[i] + [v[i] for _, v in have] for i in range(size)])
    if "q_function_grid" in sc.observables:
        have = [(METHODS[m], results[m][1]["q"]) for m in sc.methods if "q" in results[m][1]]
        re, im = _q_axes()
        tables["q_function_grid"] = (["re", "im"] + [L for L, _ in have],
                                     [[re[i], im[i]] + [v[i] for _, v in have]
                                      for i in range(len(re))])
    return tables


def _existence_tables(sc: Scenario) -> dict:
    rows, zero = [], []
    labels = [lab for lab, _ in sc.existence_sets]
    surf = {}
    for lab, cfg in sc.existence_sets:
        grid = np.empty((len(sc.kt_grid), len(sc.s_grid)))
        for i, kt in enumerate(sc.kt_grid):
            co = par.evolve_noise(cfg, par.initial_gaussian(), kt / cfg.kappa_s)
            for j, s in enumerate(sc.s_grid):
                grid[i, j] = par.existence_functions(co.reorder(s)).L_bar
        surf[lab] = grid
    for i, kt in enumerate(sc.kt_grid):
        for j, s in enumerate(sc.s_grid):
            rows.append([kt, s] + [surf[lab][i, j] for lab in labels])
    for j, s in enumerate(sc.s_grid):
        r = [s]
        for lab in labels:
            v = surf[lab][:, j]
            cross = math.nan
            for i in range(1, len(v)):
                if v[i - 1] >= 0 > v[i] or v[i - 1] < 0 <= v[i]:
                    a, b = sc.kt_grid[i - 1], sc.kt_grid[i]
                    cross = a + (b - a) * v[i - 1] / (v[i - 1] - v[i])
                    break
            r.append(cross)
        zero.append(r)
    return {"Lbar": (["kt", "s"] + labels, rows), "Lbar_zero": (["s"] + labels, zero)}


def write_tables(sc: Scenario, tables: dict, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    head = yaml.safe_dump(sc.raw, sort_keys=True, default_flow_style=False).rstrip("\n")
    paths = []
    for name, (cols, rows) in tables.items():
        p = out_dir / f"{sc.name}_{name}.csv"
        lines = [f"# ramanstat {__version__}", f"# table: {name}"]
        lines += [f"# {ln}" for ln in head.splitlines()]
        lines.append(",".join(cols))
        lines += [",".join(_fmt(v) for v in r) for r in rows]
        p.write_text("\n".join(lines) + "\n")
        paths.append(p)
    return paths


# --- argument handling ----------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ramanstat", description="Raman photon-statistics scenarios")
    sub = ap.add_subparsers(dest="verb", required=True)
    sub.add_parser("list", help="list built-in scenarios")
    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("file")
    r = sub.add_parser("run", help="run a scenario and write CSV tables")
    r.add_argument("file", nargs="?")
    r.add_argument("--builtin")
    r.add_argument("--out-dir", default=".")
    r.add_argument("--threads", type=int)
    r.add_argument("--cutoff-k", type=int)
    r.add_argument("--tail-tol", type=float, default=DEFAULT_TAIL_TOL)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.verb == "list":
        for name, desc in list_scenarios():
            print(f"{name:16s} {desc}")
        return EXIT_OK
    try:
        if args.verb == "validate":
            sc = load(Path(args.file).read_text())
            print(f"{sc.name}: ok")
            return EXIT_OK
        if bool(args.file) == bool(args.builtin):
            raise SchemaError("<args>", "give exactly one of FILE or --builtin")
        kw = {"cutoff_k": args.cutoff_k, "tail_tol": args.tail_tol}
        sc = validate(builtin(args.builtin), **kw) if args.builtin else \
            load(Path(args.file).read_text(), **kw)
        threads = args.threads or int(os.environ.get("RAMANSTAT_THREADS", "0")) or None
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            tables = compute_tables(sc, threads)
        for p in write_tables(sc, tables, Path(args.out_dir)):
            print(p)
        return EXIT_OK
    except (SchemaError, DomainError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (PrecisionError, TruncationError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
