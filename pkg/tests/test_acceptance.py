"""Acceptance criteria, one test each; run with ``-s`` to see the summary lines."""
import math

import numpy as np
import pytest

from alignlimit import checks
from alignlimit.euler_reference import InitProfile, ReferenceSolution
from alignlimit.harness import (
    DEFAULT_EPS_LIST,
    TOL_BUDGET,
    TOL_MINIMIZATION,
    TOL_ENTROPY_SLACK,
    RunConfig,
    momentum_scale,
    rate_fit,
    simulate,
    sweep,
)
from alignlimit.kinetic_solver import SimParams, run
from alignlimit.wellprepared_init import build_ensemble

LAMBDAS = (0.0, 1.0)


def report(criterion, passed, detail):
    print(f"\n[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}")
    assert passed, detail


@pytest.fixture(scope="module")
def sweeps():
    return {lam: sweep(RunConfig(lam=lam), DEFAULT_EPS_LIST, write=False) for lam in LAMBDAS}


@pytest.fixture(scope="module")
def drifted():
    # nonzero total momentum, so relative momentum errors are meaningful
    return {lam: simulate(RunConfig(lam=lam, b0=0.3, eps=1e-2)) for lam in LAMBDAS}


@pytest.fixture(scope="module")
def all_runs(sweeps, drifted):
    runs = [o for lam in LAMBDAS for o in sweeps[lam].outcomes]
    return runs + list(drifted.values())


def test_criterion_01_relative_entropy_rate(sweeps):
    parts, ok = [], True
    for lam in LAMBDAS:
        # the criterion measures int rho |u_eps - u|^2, twice the relative entropy
        pts = [(o.eps, 2.0 * o.sup_erel) for o in sweeps[lam].outcomes]
        slope, _, r2 = rate_fit(pts)
        ok &= slope >= 0.45 and r2 >= 0.98
        parts.append(f"lam={lam:g} slope={slope:.3f} R2={r2:.3f}")
    report(1, ok, "; ".join(parts) + " (need slope >= 0.45, R2 >= 0.98)")


def test_criterion_02_entropy_inequality(all_runs):
    worst = min(min(r.residual_24 for r in o.reports) / o.F0 for o in all_runs)
    report(2, worst >= -TOL_ENTROPY_SLACK, f"worst residual_24 / F(0) = {worst:.3e} (min -1e-10)")


def test_criterion_03_dissipation_budget(all_runs):
    worst = max(o.budget / (o.eps * o.F0) for o in all_runs)
    report(3, worst <= 1 + TOL_BUDGET, f"max int D dt / (eps F(0)) = {worst:.6f} (max 1+1e-8)")


def test_criterion_04_conservation(all_runs, drifted):
    mass_ok = all(r.mass == o.reports[0].mass for o in all_runs for r in o.reports)
    worst = {0.0: 0.0, 1.0: 0.0}
    for o in all_runs:
        lam = o.config.lam
        P0 = o.reports[0].momentum
        ens0 = build_ensemble(o.config.init_spec(o.eps), o.config.domain())
        scale = momentum_scale(ens0)
        dev = max(abs(r.momentum - P0 * math.exp(-lam * r.t)) for r in o.reports) / scale
        worst[lam] = max(worst[lam], dev)
    # runs with nonzero momentum: error relative to |momentum(0)| itself
    strict = {lam: max(abs(r.momentum - o.reports[0].momentum * math.exp(-lam * r.t)) / abs(o.reports[0].momentum)
                       for r in o.reports) for lam, o in drifted.items()}
    ok = (mass_ok and worst[0.0] <= 1e-12 and strict[0.0] <= 1e-12
          and worst[1.0] <= 1e-10 and strict[1.0] <= 1e-10)
    report(4, ok, f"mass bitwise={mass_ok}; momentum rel dev lam=0 {max(worst[0.0], strict[0.0]):.2e} (max 1e-12), "
                  f"lam=1 {max(worst[1.0], strict[1.0]):.2e} (max 1e-10)")


def test_criterion_05_minimization(all_runs):
    worst = min(min(r.minimization_worst for r in o.reports) / o.F0 for o in all_runs)
    report(5, worst >= -TOL_MINIMIZATION, f"worst per-cell slack / F(0) = {worst:.3e} (min -1e-12)")


def test_criterion_06_fluid_energy():
    worst = max(checks.energy_law_defect(lam, n=20) for lam in LAMBDAS)
    report(6, worst <= 1e-10, f"max |E(t) - E(0)exp(-2 lam t)| / E(0) over 20 times = {worst:.2e} (max 1e-10)")


def test_criterion_07_identity_order():
    parts, ok = [], True
    for lam in LAMBDAS:
        errs, orders = checks.identity_orders(lam, levels=3)
        ok &= bool(np.all(orders >= 1.9))
        parts.append(f"lam={lam:g} orders {', '.join(f'{o:.2f}' for o in orders)}")
    report(7, ok, "; ".join(parts) + " (min 1.9)")


def test_criterion_08_closed_forms():
    rng = np.random.default_rng(0)
    e = checks.relative_entropy_defect(rng)
    f = checks.relative_flux_defect(rng)
    g = checks.entropy_flux_defect(rng)
    report(8, e <= 1e-12 and f <= 1e-12 and g <= 1e-6,
           f"relative entropy {e:.2e}, relative flux {f:.2e} (max 1e-12); flux relation {g:.2e} (max 1e-6)")


def test_criterion_09_well_prepared():
    a1, o2, o3 = checks.wellprepared_gaps()
    ok = a1 <= 1e-12 and np.all(o2 >= 1.9) and np.all(o3 >= 1.9)
    report(9, ok, f"A1 rel deviation {a1:.2e} (max 1e-12); A2 orders {', '.join(f'{o:.2f}' for o in o2)}; "
                  f"A3 orders {', '.join(f'{o:.2f}' for o in o3)} (min 1.9)")


def test_criterion_10_observable_rate(sweeps):
    parts, ok = [], True
    for lam in LAMBDAS:
        slope, _, r2 = sweeps[lam].observable_fit
        ok &= slope >= 0.2
        parts.append(f"lam={lam:g} slope={slope:.3f} (R2={r2:.3f})")
    report(10, ok, "; ".join(parts) + " (min 0.2)")


def test_criterion_11_self_convergence():
    cfg = RunConfig(eps=0.1)
    dom, ref = cfg.domain(), cfg.reference()
    ens0 = build_ensemble(cfg.init_spec(), dom)
    T = cfg.final_time()

    def u_final(n):
        params = SimParams(eps=0.1, t_final=T, dt_fixed=T / n)
        return run(ens0, params, dom, ref, report_every_step=False).field.u

    fine, finer = u_final(128), u_final(256)
    u_ref = finer + (finer - fine) / 3.0
    errs = [float(np.max(np.abs(u_final(n) - u_ref))) for n in (8, 16, 32)]
    orders = checks.observed_order(errs)
    report(11, bool(np.all(orders >= 1.8)),
           f"max-norm errors {', '.join(f'{e:.2e}' for e in errs)}; orders {', '.join(f'{o:.2f}' for o in orders)} (min 1.8)")
