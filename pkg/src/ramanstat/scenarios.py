"""Scenario schema, validation and the built-in figure scenarios."""
from __future__ import annotations

import copy
import math
import re
import warnings
from dataclasses import dataclass, field

import yaml

from .fock_core import DEFAULT_TAIL_TOL, ModeState
from .parametric import ParametricConfig

METHODS = {"exact": "A", "short_time": "B", "parametric": "C", "no_depletion": "D", "oracle": "O"}
OBSERVABLES = ("mean_n", "mean_m", "mean_n2", "mean_m2", "gamma2_S", "gamma2_L", "g2_LS",
               "amp_S", "amp_S2", "amp_L", "amp_L2", "varX_S_extremal", "varX_L_extremal",
               "varX_two_mode", "pn_S", "q_function_grid")
_OFFSETS = {"amp_S": (0, 1), "amp_L": (1, 0), "amp_S2": (0, 2), "amp_L2": (2, 0),
            "varX_S_extremal": (0, 2), "varX_L_extremal": (2, 0), "varX_two_mode": (2, 2),
            "q_function_grid": (0, 4)}


class SchemaError(ValueError):
    """Invalid scenario; ``path`` names the offending field."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


@dataclass
class Scenario:
    name: str
    description: str
    kind: str
    raw: dict                            # resolved, plain data (written to CSV headers)
    laser: ModeState | None = None
    scattered: ModeState | None = None
    mode: str = "stokes"
    methods: list = field(default_factory=list)
    taus: list = field(default_factory=list)
    K: int = 0
    nu_max: int = 0
    mu_max: int = 0
    parametric_cfg: ParametricConfig | None = None
    observables: list = field(default_factory=list)
    existence_sets: list = field(default_factory=list)
    s_grid: list = field(default_factory=list)
    kt_grid: list = field(default_factory=list)


def _num(v, path, *, lo=None, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(path, f"expected a number, got {v!r}")
    if integer and int(v) != v:
        raise SchemaError(path, "expected an integer")
    if not math.isfinite(v):
        raise SchemaError(path, "must be finite")
    if lo is not None and v < lo:
        raise SchemaError(path, f"must be >= {lo}")
    return int(v) if integer else float(v)


def _amplitude(d: dict, path: str) -> complex:
    if "abs2" in d:
        a2 = _num(d["abs2"], f"{path}.abs2", lo=0)
        return math.sqrt(a2) * complex(math.cos(d.get("phase", 0.0)), math.sin(d.get("phase", 0.0)))
    xi = d.get("xi", 0.0)
    if isinstance(xi, list):
        if len(xi) != 2:
            raise SchemaError(f"{path}.xi", "complex amplitude is [re, im]")
        return complex(_num(xi[0], f"{path}.xi[0]"), _num(xi[1], f"{path}.xi[1]"))
    return complex(_num(xi, f"{path}.xi"))


def parse_state(d, path: str, tail_tol: float) -> ModeState:
    if not isinstance(d, dict) or "kind" not in d:
        raise SchemaError(path, "state needs a 'kind'")
    kind = d["kind"]
    if kind == "number":
        return ModeState.number(_num(d.get("n0"), f"{path}.n0", lo=0, integer=True))
    if kind == "coherent":
        return ModeState.coherent(_amplitude(d, path), tail_tol)
    if kind == "chaotic":
        return ModeState.chaotic(_num(d.get("mean"), f"{path}.mean", lo=0), tail_tol)
    if kind == "coherent_plus_chaotic":
        return ModeState.coherent_plus_chaotic(_amplitude(d, path),
                                               _num(d.get("mean_ch"), f"{path}.mean_ch", lo=0),
                                               tail_tol)
    raise SchemaError(f"{path}.kind", f"unknown state kind {kind!r}")


def _grid(d, path, *, lo=None):
    if not isinstance(d, dict):
        raise SchemaError(path, "expected {start, stop, steps}")
    a = _num(d.get("start", 0.0), f"{path}.start", lo=lo)
    b = _num(d.get("stop"), f"{path}.stop", lo=lo)
    n = _num(d.get("steps"), f"{path}.steps", integer=True)
    if n < 1:
        raise SchemaError(f"{path}.steps", "must be >= 1")
    if b < a:
        raise SchemaError(f"{path}.stop", "must be >= start")
    if n == 1:
        return [a]
    return [a + (b - a) * i / (n - 1) for i in range(n)]


def validate(raw: dict, *, cutoff_k: int | None = None,
             tail_tol: float = DEFAULT_TAIL_TOL) -> Scenario:
    """Check a parsed scenario and resolve it into a :class:`Scenario`."""
    if not isinstance(raw, dict):
        raise SchemaError("<root>", "scenario must be a mapping")
    raw = copy.deepcopy(raw)
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise SchemaError("name", "a nonempty name is required")
    kind = raw.setdefault("kind", "dynamics")
    desc = str(raw.get("description", ""))
    if kind == "existence":
        return _validate_existence(raw, name, desc)
    if kind != "dynamics":
        raise SchemaError("kind", f"unknown scenario kind {kind!r}")

    init = raw.get("initial")
    if not isinstance(init, dict):
        raise SchemaError("initial", "needs laser and scattered states")
    laser = parse_state(init.get("laser"), "initial.laser", tail_tol)
    scat = parse_state(init.get("scattered"), "initial.scattered", tail_tol)
    mode = raw.setdefault("mode", "stokes")
    if mode not in ("stokes", "antistokes"):
        raise SchemaError("mode", "must be stokes or antistokes")
    methods = raw.get("methods")
    if not isinstance(methods, list) or not methods:
        raise SchemaError("methods", "at least one method is required")
    for i, m in enumerate(methods):
        if m not in METHODS:
            raise SchemaError(f"methods[{i}]", f"unknown method {m!r}")
    if mode == "antistokes" and any(m in ("short_time", "no_depletion") for m in methods):
        raise SchemaError("methods", "short_time and no_depletion cover the Stokes mode only")
    obs = raw.get("observables")
    if not isinstance(obs, list) or not obs:
        raise SchemaError("observables", "at least one observable is required")
    for i, o in enumerate(obs):
        if o not in OBSERVABLES:
            raise SchemaError(f"observables[{i}]", f"unknown observable {o!r}")
    taus = _grid(raw.get("tau_grid"), "tau_grid", lo=0.0)

    cut = raw.get("cutoffs") or {}
    if not isinstance(cut, dict):
        raise SchemaError("cutoffs", "expected a mapping")
    need_nu = max((_OFFSETS.get(o, (0, 0))[0] for o in obs), default=0)
    need_mu = max((_OFFSETS.get(o, (0, 0))[1] for o in obs), default=0)
    nu_max = _num(cut.get("nu_max", need_nu), "cutoffs.nu_max", lo=0, integer=True)
    mu_max = _num(cut.get("mu_max", need_mu), "cutoffs.mu_max", lo=0, integer=True)
    K = cutoff_k if cutoff_k is not None else cut.get("K", laser.cutoff + scat.cutoff)
    K = _num(K, "cutoffs.K", lo=1, integer=True)
    total = abs(laser.xi) ** 2 + laser.mean_ch + laser.n0 + abs(scat.xi) ** 2 + scat.mean_ch + scat.n0
    floor = math.ceil(total + 8 * math.sqrt(total))
    if K < floor:
        warnings.warn(f"cutoffs.K={K} is below the heuristic floor {floor}", RuntimeWarning,
                      stacklevel=2)

    pc = raw.get("parametric_cfg")
    cfg = None
    if "parametric" in methods:
        if pc is None:
            gain = abs(laser.xi) ** 2 + laser.mean_ch + laser.n0      # kappa t = <n> tau
            pc = {"kappa_s": gain, "kappa_a": 0.0} if mode == "stokes" else \
                {"kappa_s": 0.0, "kappa_a": gain}
            raw["parametric_cfg"] = pc
        if not isinstance(pc, dict):
            raise SchemaError("parametric_cfg", "expected a mapping")
        try:
            cfg = ParametricConfig(**{k: v for k, v in pc.items()})
        except TypeError as e:
            raise SchemaError("parametric_cfg", str(e)) from None
    raw["cutoffs"] = {"K": K, "nu_max": nu_max, "mu_max": mu_max}
    return Scenario(name, desc, kind, raw, laser, scat, mode, list(methods), taus, K, nu_max,
                    mu_max, cfg, list(obs))


def _validate_existence(raw, name, desc) -> Scenario:
    sets = raw.get("sets")
    if not isinstance(sets, list) or not sets:
        raise SchemaError("sets", "existence scenarios need parameter sets")
    parsed = []
    for i, s in enumerate(sets):
        p = f"sets[{i}]"
        if not isinstance(s, dict) or not isinstance(s.get("label"), str):
            raise SchemaError(p, "each set needs a label")
        cfg = ParametricConfig(_num(s.get("kappa_s"), f"{p}.kappa_s", lo=0),
                               _num(s.get("kappa_a"), f"{p}.kappa_a", lo=0),
                               delta_omega=_num(s.get("delta_omega", 0.0), f"{p}.delta_omega"),
                               n_v=_num(s.get("n_v", 0.0), f"{p}.n_v", lo=0))
        if cfg.kappa_s <= 0:
            raise SchemaError(f"{p}.kappa_s", "time unit is 1/kappa_s; must be > 0")
        parsed.append((s["label"], cfg))
    s_grid = _grid(raw.get("s_grid"), "s_grid", lo=-1.0)
    if max(s_grid) > 1:
        raise SchemaError("s_grid.stop", "must be <= 1")
    kt = _grid(raw.get("kt_grid"), "kt_grid", lo=0.0)
    return Scenario(name, desc, "existence", raw, existence_sets=parsed, s_grid=s_grid,
                    kt_grid=kt)


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads 1e8 and 1.0e10 as floats (YAML 1.2 style)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                  |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                  |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                  |[-+]?\.(?:inf|Inf|INF)
                  |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


def load(text: str, **kw) -> Scenario:
    try:
        raw = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as e:
        raise SchemaError("<file>", f"not valid YAML: {e}") from None
    return validate(raw, **kw)


# --- built-in scenarios ----------------------------------------------------------

_A = {"laser": {"kind": "coherent", "abs2": 2.0}, "scattered": {"kind": "coherent", "abs2": 0.0}}
_B = {"laser": {"kind": "coherent", "abs2": 2.0}, "scattered": {"kind": "coherent", "abs2": 0.2}}
_TAU = {"start": 0.0, "stop": 2.0, "steps": 41}
_ALL = ["exact", "short_time", "parametric", "no_depletion"]
_ABC = ["exact", "short_time", "parametric"]


def _dyn(name, desc, init, methods, obs, tau=_TAU):
    return {"name": name, "description": desc, "kind": "dynamics", "initial": init,
            "mode": "stokes", "methods": methods, "tau_grid": dict(tau), "observables": obs}


BUILTINS = {
    "fig2a": _dyn("fig2a", "mean photon numbers <m>, <n>; |sqrt2>_L |0>_S; curves A-D",
                  _A, _ALL, ["mean_m", "mean_n"]),
    "fig2b": _dyn("fig2b", "mean photon numbers <m>, <n>; |sqrt2>_L |sqrt0.2>_S; curves A-D",
                  _B, _ALL, ["mean_m", "mean_n"]),
    "fig3a": _dyn("fig3a", "mean-square photon numbers; |sqrt2>_L |0>_S; curves A-D",
                  _A, _ALL, ["mean_m2", "mean_n2"]),
    "fig3b": _dyn("fig3b", "mean-square photon numbers; |sqrt2>_L |sqrt0.2>_S; curves A-D",
                  _B, _ALL, ["mean_m2", "mean_n2"]),
    "fig4a": _dyn("fig4a", "Stokes factorial moment gamma2_S; |sqrt2>_L |0>_S; curves A-C",
                  _A, _ABC, ["gamma2_S"]),
    "fig4b": _dyn("fig4b", "Stokes factorial moment gamma2_S; |sqrt2>_L |sqrt0.2>_S; curves A-C",
                  _B, _ABC, ["gamma2_S"]),
    "fig5a": _dyn("fig5a", "laser factorial moment gamma2_L; |sqrt2>_L |0>_S; curves A-C",
                  _A, _ABC, ["gamma2_L"]),
    "fig5b": _dyn("fig5b", "laser factorial moment gamma2_L; |sqrt2>_L |sqrt0.2>_S; curves A-C",
                  _B, _ABC, ["gamma2_L"]),
    "fig6a": _dyn("fig6a", "interbeam coherence g2_LS; |sqrt2>_L |0>_S; curves A-C "
                  "(curve S, the external short-time approximation, is out of scope)",
                  _A, _ABC, ["g2_LS"]),
    "fig6b": _dyn("fig6b", "interbeam coherence g2_LS; |sqrt2>_L |sqrt0.2>_S; curves A-C "
                  "(curve S, the external short-time approximation, is out of scope)",
                  _B, _ABC, ["g2_LS"]),
    "fig7": _dyn("fig7", "field amplitudes <a_S>, <a_L>; |sqrt2>_L |sqrt0.2>_S; curves A-C",
                 _B, _ABC, ["amp_S", "amp_L"]),
    "fig8": _dyn("fig8", "squared amplitudes <a_S^2>, <a_L^2>; |sqrt2>_L |sqrt0.2>_S; curves A-C",
                 _B, _ABC, ["amp_S2", "amp_L2"]),
    "fig9": _dyn("fig9", "extremal Stokes quadrature variances; |sqrt2>_L |sqrt0.2>_S; curves A-C",
                 _B, _ABC, ["varX_S_extremal"]),
    "fig10": _dyn("fig10", "extremal laser quadrature variances; |sqrt2>_L |sqrt0.2>_S; curves A-C",
                  _B, _ABC, ["varX_L_extremal"]),
    "existence_fig1": {
        "name": "existence_fig1",
        "description": "Lbar^(s)(t) surfaces for QPD existence, coherent Stokes/anti-Stokes inputs, "
                       "parameter sets (a)-(d) with range endpoints; raw values and zero contour",
        "kind": "existence",
        "sets": [
            {"label": "a_dW1", "kappa_s": 1e8, "kappa_a": 1e10, "delta_omega": 1.0, "n_v": 0.0},
            {"label": "a_dW1e6", "kappa_s": 1e8, "kappa_a": 1e10, "delta_omega": 1e6, "n_v": 0.0},
            {"label": "b_nV0", "kappa_s": 1e3, "kappa_a": 1e3, "delta_omega": 1.0, "n_v": 0.0},
            {"label": "b_nV100", "kappa_s": 1e3, "kappa_a": 1e3, "delta_omega": 1.0, "n_v": 100.0},
            {"label": "c", "kappa_s": 1e8, "kappa_a": 1e8, "delta_omega": 1e6, "n_v": 10.0},
            {"label": "d", "kappa_s": 1e8, "kappa_a": 1e8, "delta_omega": 1e6, "n_v": 0.0},
        ],
        "s_grid": {"start": -1.0, "stop": 1.0, "steps": 21},
        "kt_grid": {"start": 0.0, "stop": 3.0, "steps": 31},
    },
}


def builtin(name: str) -> dict:
    if name not in BUILTINS:
        raise SchemaError("--builtin", f"no built-in scenario {name!r}")
    return copy.deepcopy(BUILTINS[name])


def list_scenarios() -> list[tuple[str, str]]:
    return [(k, v["description"]) for k, v in BUILTINS.items()]
