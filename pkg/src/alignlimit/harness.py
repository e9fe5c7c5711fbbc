"""Run configuration, experiment drivers and CSV output.

The ``cmd_*`` functions return process exit codes: 0 success, 1 usage or
configuration error, 2 invariant or check failure.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .euler_reference import InitProfile, ReferenceSolution, blowup_time
from .kinetic_solver import BlowupError, EntropyReport, SimParams, run
from .phase_ensemble import Domain1D
from .wellprepared_init import WellPreparedSpec, build_ensemble, verify_assumptions

log = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2

DEFAULT_EPS_LIST = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)

# run-level invariant tolerances, relative to F(0) or the momentum scale
TOL_ENTROPY_SLACK = 1e-10
TOL_MINIMIZATION = 1e-12
TOL_BUDGET = 1e-8
TOL_MOMENTUM_DAMPED = 1e-10
TOL_MOMENTUM_FREE = 1e-12


class ConfigError(ValueError):
    pass


# --- configuration ---------------------------------------------------------

def _floats(text):
    if isinstance(text, (list, tuple)):
        return tuple(float(t) for t in text)
    text = str(text).strip()
    return tuple(float(t) for t in text.split(",") if t.strip()) if text else ()


def _opt_float(text):
    if text is None or str(text).strip().lower() in ("", "none", "auto"):
        return None
    return float(text)


@dataclass(frozen=True)
class RunConfig:
    eps: float = 1e-2
    lam: float = 0.0
    nx: int = 256
    ppc: int = 8
    quad: int = 3
    tfinal: float | None = None
    cfl: float = 0.5
    out: str = "out"
    eps_list: tuple = DEFAULT_EPS_LIST
    snapshot_times: tuple = ()
    profile: str = "sine"
    a0: float = 1.0
    a1: float = 0.5
    b0: float = 0.0
    b1: float = 0.2
    length: float = 1.0
    c_delta: float = 1.0
    rho_floor: float | None = None
    output_interval: float | None = None
    v_guard: float = 1e3
    tol_inv: float = 1e-12
    seed: int = 0

    # config-file / flag key -> (field name, parser)
    KEYS = {
        "eps": ("eps", float), "lambda": ("lam", float), "nx": ("nx", int),
        "ppc": ("ppc", int), "quad": ("quad", int), "tfinal": ("tfinal", _opt_float),
        "cfl": ("cfl", float), "out": ("out", str), "eps_list": ("eps_list", _floats),
        "snapshot_times": ("snapshot_times", _floats), "profile": ("profile", str),
        "a0": ("a0", float), "a1": ("a1", float), "b0": ("b0", float), "b1": ("b1", float),
        "length": ("length", float), "c_delta": ("c_delta", float),
        "rho_floor": ("rho_floor", _opt_float), "output_interval": ("output_interval", _opt_float),
        "v_guard": ("v_guard", float), "tol_inv": ("tol_inv", float), "seed": ("seed", int),
    }

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        kwargs = {}
        for key, raw in values.items():
            norm = key.strip().replace("-", "_")
            if norm not in cls.KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            name, parse = cls.KEYS[norm]
            try:
                kwargs[name] = parse(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from None
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def validate(self):
        try:
            self.domain()
            self.init_profile()
            SimParams(eps=self.eps, lam=self.lam, cfl=self.cfl, t_final=self.tfinal or 1.0,
                      output_interval=self.output_interval)
            WellPreparedSpec(self.init_profile(), self.eps, self.c_delta, self.quad, self.ppc, self.v_guard)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if any(e <= 0 for e in self.eps_list):
            raise ConfigError("eps_list entries must be positive")

    def domain(self) -> Domain1D:
        return Domain1D(self.length, self.nx)

    def init_profile(self) -> InitProfile:
        return InitProfile(self.profile, self.a0, self.a1, self.b0, self.b1, self.length)

    def reference(self) -> ReferenceSolution:
        return ReferenceSolution(self.init_profile(), self.lam, self.tol_inv)

    def final_time(self) -> float:
        """Configured final time, defaulting to half the frictionless blowup time."""
        if self.tfinal is not None:
            return self.tfinal
        t_star = blowup_time(self.init_profile(), 0.0)
        return 0.5 * t_star if math.isfinite(t_star) else 1.0

    def sim_params(self, eps=None) -> SimParams:
        return SimParams(eps=self.eps if eps is None else eps, lam=self.lam, cfl=self.cfl,
                         t_final=self.final_time(), output_interval=self.output_interval,
                         rho_floor=self.rho_floor, v_guard=self.v_guard)

    def init_spec(self, eps=None) -> WellPreparedSpec:
        return WellPreparedSpec(self.init_profile(), self.eps if eps is None else eps,
                                self.c_delta, self.quad, self.ppc, self.v_guard)


def read_config_file(path) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, val = line.split("=", 1)
        values[key.strip()] = val.strip()
    return values


# --- CSV ---------------------------------------------------------------------

def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def time_tag(t) -> str:
    return format(float(t), ".10g")


# --- observable defect ---------------------------------------------------------

def psi(v):
    return np.sqrt(1.0 + v * v)


def bump(x, length=1.0):
    """Smooth periodic bump centred at ``L/2``."""
    return np.exp(-4.0 * (1.0 - np.cos(2.0 * np.pi * (x - 0.5 * length) / length)))


class ObservableDefect:
    """Accumulates ``int_0^T int f psi(v) phi - int_0^T int rho psi(u) phi``.

    Used as a run sink; time integration is trapezoidal over reported times.
    """

    def __init__(self, reference: ReferenceSolution):
        self.reference = reference
        self.length = reference.profile.length
        self.times, self.kinetic, self.fluid = [], [], []

    def __call__(self, t, ens, field):
        self.times.append(t)
        self.kinetic.append(float(np.sum(ens.w * psi(ens.v) * bump(ens.x, self.length))))
        self.fluid.append(self.reference.lagrangian_integral(
            t, lambda t_, x, u: psi(u) * bump(x, self.length)))

    def value(self) -> float:
        t = np.asarray(self.times)
        gap = np.asarray(self.kinetic) - np.asarray(self.fluid)
        return abs(float(np.sum(0.5 * (gap[1:] + gap[:-1]) * np.diff(t))))


# --- simulate ---------------------------------------------------------------

@dataclass
class SimulationOutcome:
    config: RunConfig
    eps: float
    reports: list
    snapshots: list
    assumptions: object
    observable_defect: float
    violations: list = field(default_factory=list)
    steps: int = 0

    @property
    def F0(self) -> float:
        return self.reports[0].F

    @property
    def sup_erel(self) -> float:
        return max(r.Erel for r in self.reports)

    @property
    def budget(self) -> float:
        return self.reports[-1].dissipation_budget


def momentum_scale(ens) -> float:
    """Scale for momentum comparisons; total momentum may vanish by symmetry."""
    return max(abs(ens.momentum()), float(np.sum(ens.w * np.abs(ens.v))))


def audit(reports, eps, lam, momentum_scale_value):
    """Run-level invariant checks; returns a list of violation messages."""
    out = []
    r0 = reports[0]
    F0 = r0.F
    for r in reports:
        if r.mass != r0.mass:
            out.append(f"t={r.t:g}: mass changed {r0.mass!r} -> {r.mass!r}")
        if r.residual_24 < -TOL_ENTROPY_SLACK * F0:
            out.append(f"t={r.t:g}: entropy inequality slack {r.residual_24:g} < 0")
        if r.minimization_worst < -TOL_MINIMIZATION * F0:
            out.append(f"t={r.t:g}: minimization slack {r.minimization_worst:g} < 0")
        if r.dissipation_budget > eps * F0 * (1 + TOL_BUDGET):
            out.append(f"t={r.t:g}: dissipation budget {r.dissipation_budget:g} > eps F0")
        expected = r0.momentum * math.exp(-lam * r.t)
        tol = TOL_MOMENTUM_DAMPED if lam > 0 else TOL_MOMENTUM_FREE
        if abs(r.momentum - expected) > tol * momentum_scale_value:
            out.append(f"t={r.t:g}: momentum {r.momentum:g} departs from {expected:g}")
    return out


def simulate(config: RunConfig, eps=None, sinks=()) -> SimulationOutcome:
    eps = config.eps if eps is None else eps
    dom = config.domain()
    ref = config.reference()
    params = config.sim_params(eps)
    spec = config.init_spec(eps)
    ens0 = build_ensemble(spec, dom)
    assumptions = verify_assumptions(ens0, spec, dom)
    observable = ObservableDefect(ref)
    res = run(ens0, params, dom, ref, sinks=(observable, *sinks), snapshot_times=config.snapshot_times)
    outcome = SimulationOutcome(config, eps, res.reports, res.snapshots, assumptions,
                                observable.value(), steps=res.steps)
    outcome.violations = audit(res.reports, eps, config.lam, momentum_scale(ens0))
    return outcome


def write_series(outdir, outcome: SimulationOutcome):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_csv(outdir / "series.csv", EntropyReport.CSV_COLUMNS, (r.row() for r in outcome.reports))
    for s in outcome.snapshots:
        write_csv(outdir / f"snap_{time_tag(s.t)}.csv",
                  ("x", "rho_eps", "u_eps", "rho_ref", "u_ref"),
                  zip(s.x, s.rho_eps, s.u_eps, s.rho_ref, s.u_ref))


def cmd_simulate(config: RunConfig, out=print) -> int:
    try:
        outcome = simulate(config)
    except BlowupError as exc:
        out(f"simulation aborted: {exc}")
        return EXIT_VIOLATION
    except ValueError as exc:
        out(f"error: {exc}")
        return EXIT_USAGE
    write_series(config.out, outcome)
    last = outcome.reports[-1]
    out(f"eps={outcome.eps:g} lambda={config.lam:g} steps={outcome.steps} "
        f"sup Erel={outcome.sup_erel:.6e} F(T)={last.F:.6e} budget={last.dissipation_budget:.6e}")
    if outcome.violations:
        for msg in outcome.violations:
            out(f"invariant violation: {msg}")
        return EXIT_VIOLATION
    return EXIT_OK


# --- sweep ------------------------------------------------------------------

def rate_fit(points):
    """Least-squares fit of ``log err`` against ``log eps``.

    Returns ``(slope, intercept, r2)``; with two points the line interpolates
    and ``r2`` is 1.
    """
    pts = list(points)
    if len(pts) < 2:
        raise ValueError("rate fit needs at least two points")
    e = np.array([p[0] for p in pts], dtype=np.float64)
    y = np.array([p[1] for p in pts], dtype=np.float64)
    if np.any(e <= 0) or np.any(y <= 0):
        raise ValueError("rate fit needs positive eps and error values")
    lx, ly = np.log(e), np.log(y)
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if len(pts) == 2 or ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return float(slope), float(intercept), float(r2)


@dataclass
class SweepResult:
    rows: list  # (eps, sup_Erel, dissipation_budget, gap_A1, observable_defect)
    erel_fit: tuple | None
    observable_fit: tuple | None
    outcomes: list = field(default_factory=list, repr=False)

    COLUMNS = ("eps", "sup_Erel", "dissipation_budget", "gap_A1", "observable_defect")


class SweepError(RuntimeError):
    def __init__(self, code, msg):
        super().__init__(msg)
        self.code = code


def sweep(config: RunConfig, eps_list=None, write=True) -> SweepResult:
    eps_list = sorted(config.eps_list if eps_list is None else eps_list, reverse=True)
    outcomes = []
    for eps in eps_list:
        try:
            outcome = simulate(config, eps)
        except BlowupError as exc:
            raise SweepError(EXIT_VIOLATION, f"eps={eps:g}: {exc}") from None
        if write:
            write_series(Path(config.out) / f"eps_{time_tag(eps)}", outcome)
        if outcome.violations:
            raise SweepError(EXIT_VIOLATION, f"eps={eps:g}: {outcome.violations[0]}")
        outcomes.append(outcome)
    rows = [(o.eps, o.sup_erel, o.budget, o.assumptions.gap_A1, o.observable_defect) for o in outcomes]
    erel_fit = obs_fit = None
    if len(rows) >= 4:
        erel_fit = rate_fit([(r[0], r[1]) for r in rows])
        obs_fit = rate_fit([(r[0], r[4]) for r in rows])
    result = SweepResult(rows, erel_fit, obs_fit, outcomes)
    if write:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "sweep.csv", SweepResult.COLUMNS, rows)
        fits = [(name, *fit) for name, fit in (("sup_Erel", erel_fit), ("observable_defect", obs_fit)) if fit]
        with (out / "sweep_fit.csv").open("w") as fh:
            fh.write("quantity,slope,intercept,r2\n")
            for name, *vals in fits:
                fh.write(name + "," + ",".join(fmt(v) for v in vals) + "\n")
    return result


def cmd_sweep(config: RunConfig, eps_list=None, out=print) -> int:
    eps_list = config.eps_list if eps_list is None else eps_list
    if len(eps_list) < 2:
        out("error: sweep needs at least two eps values")
        return EXIT_USAGE
    try:
        result = sweep(config, eps_list)
    except SweepError as exc:
        out(f"sweep aborted: {exc}")
        return exc.code
    except ValueError as exc:
        out(f"error: {exc}")
        return EXIT_USAGE
    for row in result.rows:
        out("eps={:<8g} sup_Erel={:.6e} budget={:.6e} gap_A1={:.6e} defect={:.6e}".format(*row))
    if result.erel_fit:
        s, c, r2 = result.erel_fit
        out(f"sup Erel ~ eps^{s:.4f}  (C={math.exp(c):.4e}, R^2={r2:.4f})")
        s, c, r2 = result.observable_fit
        out(f"observable defect ~ eps^{s:.4f}  (C={math.exp(c):.4e}, R^2={r2:.4f})")
    else:
        out("fewer than 4 eps values: slopes not fitted")
    return EXIT_OK


# --- reference ----------------------------------------------------------------

def cmd_reference(config: RunConfig, times=None, out=print) -> int:
    times = config.snapshot_times if times is None else times
    ref = config.reference()
    out(f"T* = {fmt(ref.t_star)}")
    late = [t for t in times if t >= ref.t_star]
    if late:
        out(f"error: requested time {late[0]:g} is not before T* = {fmt(ref.t_star)}")
        return EXIT_USAGE
    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    x = config.domain().nodes
    for t in times:
        rho, u = ref.evaluate(t, x)
        write_csv(outdir / f"ref_{time_tag(t)}.csv", ("x", "rho", "u"), zip(x, rho, u))
    return EXIT_OK


# --- check --------------------------------------------------------------------

def cmd_check(config: RunConfig, faults=(), out=print) -> int:
    from .checks import run_checks

    results = run_checks(config, faults=faults)
    width = max(len(r.name) for r in results)
    for r in results:
        out(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        out(f"{len(failed)} check(s) failed: {', '.join(failed)}")
        return EXIT_VIOLATION
    out(f"all {len(results)} checks passed")
    return EXIT_OK
