"""Self-contained property checks bundled behind the ``check`` subcommand.

Every check builds its own fixtures, so the suite runs from a fresh checkout.
Pass ``faults={"broken_gather"}`` to swap in a mis-aligned gather stencil as a
negative control.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import entropy_calculus as ec
from .euler_reference import InitProfile, ReferenceSolution
from .kinetic_solver import alignment_step
from .phase_ensemble import Domain1D, ParticleEnsemble, deposit_moments, gather_velocity, hat_stencil
from .wellprepared_init import WellPreparedSpec, build_ensemble, verify_assumptions


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def observed_order(errors, ratio=2.0):
    errors = np.asarray(errors, dtype=np.float64)
    return np.log(errors[:-1] / errors[1:]) / math.log(ratio)


def broken_gather(field, x):
    """Gather shifted by one cell; breaks adjointness with deposition."""
    left, right, frac = hat_stencil(x, field.domain)
    n = field.domain.nx
    return (1.0 - frac) * field.u[(left + 1) % n] + frac * field.u[(right + 1) % n]


def random_ensemble(rng, dom, n=2000):
    return ParticleEnsemble(rng.uniform(0, dom.length, n), rng.normal(0, 1, n), rng.uniform(0.1, 1.0, n))


def random_states(rng, n=1000):
    q = rng.uniform(0.2, 3.0, n)
    rho = rng.uniform(0.2, 3.0, n)
    return q, q * rng.uniform(-2, 2, n), rho, rho * rng.uniform(-2, 2, n)


# --- individual checks -----------------------------------------------------------

def partition_of_unity(rng, dom):
    x = rng.uniform(0, dom.length, 1000)
    left, right, frac = hat_stencil(x, dom)
    W = np.zeros((x.size, dom.nx))
    np.add.at(W, (np.arange(x.size), left), 1.0 - frac)
    np.add.at(W, (np.arange(x.size), right), frac)
    return float(np.max(np.abs(W.sum(axis=1) - 1.0)))


def scatter_gather_defect(rng, dom, gather_fn=gather_velocity):
    ens = random_ensemble(rng, dom, 10_000)
    field = deposit_moments(ens, dom)
    lhs = float(np.sum(ens.w * gather_fn(field, ens.x)))
    rhs = ens.momentum()
    return abs(lhs - rhs) / float(np.sum(ens.w * np.abs(ens.v)))


def relative_entropy_defect(rng):
    q, Q, rho, P = random_states(rng)
    closed = ec.relative_entropy(q, Q, rho, P)
    defin = ec.relative_entropy_definition(q, Q, rho, P)
    return float(np.max(np.abs(closed - defin) / ec.relative_entropy_terms(q, Q, rho, P)))


def relative_flux_defect(rng):
    q, Q, rho, P = random_states(rng)
    mass_block, mom_block = ec.relative_flux_definition(q, Q, rho, P)
    scale = ec.relative_flux_terms(q, Q, rho, P)
    closed = ec.relative_flux(q, Q, rho, P)
    return float(max(np.max(np.abs(mass_block) / scale), np.max(np.abs(closed - mom_block) / scale)))


def entropy_flux_defect(rng, n=100, h=1e-6):
    """Finite-difference check of ``dG/dU = DE(U) dA/dU``."""
    rho = rng.uniform(0.5, 2.0, n)
    u = rng.uniform(-1.5, 1.5, n)
    P = rho * u
    G = ec.entropy_flux_G
    dG_rho = (G(rho + h, P) - G(rho - h, P)) / (2 * h)
    dG_P = (G(rho, P + h) - G(rho, P - h)) / (2 * h)
    g_rho, g_P = ec.entropy_gradient(rho, P)

    def dA(drho, dP):
        a1p, a2p = ec.flux_A(rho + drho, P + dP)
        a1m, a2m = ec.flux_A(rho - drho, P - dP)
        return (a1p - a1m) / (2 * h), (a2p - a2m) / (2 * h)

    A1r, A2r = dA(h, 0.0)
    A1p, A2p = dA(0.0, h)
    rhs_rho = g_rho * A1r + g_P * A2r
    rhs_P = g_rho * A1p + g_P * A2p
    return float(max(np.max(np.abs(dG_rho - rhs_rho)), np.max(np.abs(dG_P - rhs_P)),
                     np.max(np.abs(dG_rho + u**3)), np.max(np.abs(dG_P - 1.5 * u**2))))


def identity_orders(lam=0.0, amplitude=0.01, base_dt=0.02, base_nx=64, levels=3):
    ref = ReferenceSolution(InitProfile(), lam, tol_inv=1e-15)
    V = ec.perturbed_reference_path(ref, amplitude)
    t_grid = (0.1, 0.2, 0.3)
    errs = [float(np.max(ec.identity_residual(V, ref, t_grid, base_dt / 2**k, base_nx * 2**k)))
            for k in range(levels)]
    return errs, observed_order(errs)


def wellprepared_gaps(nxs=(64, 128, 256), eps_list=(1e-1, 1e-2, 1e-3)):
    prof = InitProfile()
    a1_dev = 0.0
    for eps in eps_list:
        for nx in nxs[:1]:
            dom = Domain1D(1.0, nx)
            spec = WellPreparedSpec(prof, eps)
            rep = verify_assumptions(build_ensemble(spec, dom), spec, dom)
            a1_dev = max(a1_dev, abs(rep.gap_A1 - rep.predicted_A1) / rep.predicted_A1)
    a2, a3 = [], []
    for nx in nxs:
        dom = Domain1D(1.0, nx)
        spec = WellPreparedSpec(prof, 1e-2)
        rep = verify_assumptions(build_ensemble(spec, dom), spec, dom)
        a2.append(rep.gap_A2)
        a3.append(rep.gap_A3)
    return a1_dev, observed_order(a2), observed_order(a3)


def euler_residual_orders(lam=0.0, t=0.3, hs=(0.02, 0.01, 0.005)):
    """Centred-difference residuals of both conservation laws under refinement."""
    ref = ReferenceSolution(InitProfile(), lam, tol_inv=1e-15)
    cont, mom = [], []
    for h in hs:
        x = np.arange(0.0, 1.0, h) + 0.5 * h
        rp, up = ref.evaluate(t + h, x)
        rm, um = ref.evaluate(t - h, x)
        r0, u0 = ref.evaluate(t, x)
        xr = np.mod(x + h, 1.0)
        xl = np.mod(x - h, 1.0)
        rr, ur = ref.evaluate(t, xr)
        rl, ul = ref.evaluate(t, xl)
        c = (rp - rm) / (2 * h) + (rr * ur - rl * ul) / (2 * h)
        m = (rp * up - rm * um) / (2 * h) + (rr * ur**2 - rl * ul**2) / (2 * h) + lam * r0 * u0
        cont.append(float(np.max(np.abs(c))))
        mom.append(float(np.max(np.abs(m))))
    return observed_order(cont), observed_order(mom)


def energy_law_defect(lam, n=20):
    ref = ReferenceSolution(InitProfile(), lam)
    t_hi = 0.9 * ref.t_star if math.isfinite(ref.t_star) else 2.0
    worst = 0.0
    E0 = ref.profile.energy0()
    for t in np.linspace(0.0, t_hi, n):
        quad, closed = ref.fluid_energy(float(t))
        worst = max(worst, abs(quad - closed) / E0)
    return worst


def minimization_worst(rng, dom, trials=200):
    """Worst scaled per-cell slack; odd trials are nearly mono-kinetic (slack ~ 0)."""
    worst = math.inf
    for k in range(trials):
        ens = random_ensemble(rng, dom, 500)
        if k % 2:
            ens = ens.with_state(v=np.sin(2 * np.pi * ens.x) + 1e-9 * ens.v)
        field = deposit_moments(ens, dom)
        scale = float(np.max(field.second))
        worst = min(worst, float(np.min(ec.minimization_slack(field))) / scale)
    return worst


def alignment_energy_increase(rng, dom, trials=200):
    worst = -math.inf
    for _ in range(trials):
        ens = random_ensemble(rng, dom, 300)
        eps = 10 ** rng.uniform(-4, 1)
        dt = 10 ** rng.uniform(-4, 0)
        F0 = ec.kinetic_entropy(ens)
        new, _ = alignment_step(ens, dom, eps, dt)
        worst = max(worst, (ec.kinetic_entropy(new) - F0) / F0)
    return worst


# --- suite -------------------------------------------------------------------------

def run_checks(config=None, faults=()):
    rng = np.random.default_rng(0 if config is None else config.seed)
    dom = Domain1D(1.0, 64)
    gather_fn = broken_gather if "broken_gather" in faults else gather_velocity
    results = []

    def add(name, passed, detail):
        results.append(CheckResult(name, bool(passed), detail))

    v = partition_of_unity(rng, dom)
    add("partition_of_unity", v <= 1e-15, f"max |sum W - 1| = {v:.2e} (tol 1e-15)")
    v = scatter_gather_defect(rng, dom, gather_fn)
    add("scatter_gather_identity", v <= 1e-12, f"relative momentum defect = {v:.2e} (tol 1e-12)")
    v = relative_entropy_defect(rng)
    add("relative_entropy_closed_form", v <= 1e-12, f"max relative defect = {v:.2e} (tol 1e-12)")
    v = relative_flux_defect(rng)
    add("relative_flux_closed_form", v <= 1e-12, f"max relative defect = {v:.2e} (tol 1e-12)")
    v = entropy_flux_defect(rng)
    add("entropy_flux_relation", v <= 1e-6, f"max FD defect = {v:.2e} (tol 1e-6)")
    for lam in (0.0, 1.0):
        errs, orders = identity_orders(lam)
        add(f"relative_entropy_identity[lam={lam:g}]", np.all(orders >= 1.9),
            f"residuals {', '.join(f'{e:.2e}' for e in errs)}; orders {', '.join(f'{o:.2f}' for o in orders)} (min 1.9)")
    ref = ReferenceSolution(InitProfile(), 0.0)
    v = abs(ec.flux_cancellation_integral(ref, 0.3))
    add("entropy_flux_cancellation", v <= 1e-12, f"|int DE(U) div A(U)| = {v:.2e} (tol 1e-12)")
    a1, o2, o3 = wellprepared_gaps()
    add("wellprepared_A1_exact", a1 <= 1e-12, f"max relative deviation = {a1:.2e} (tol 1e-12)")
    add("wellprepared_A2_A3_order", np.all(o2 >= 1.9) and np.all(o3 >= 1.9),
        f"orders A2 {', '.join(f'{o:.2f}' for o in o2)}; A3 {', '.join(f'{o:.2f}' for o in o3)} (min 1.9)")
    for lam in (0.0, 1.0):
        oc, om = euler_residual_orders(lam)
        add(f"euler_pde_residuals[lam={lam:g}]", np.all(oc >= 1.9) and np.all(om >= 1.9),
            f"continuity {', '.join(f'{o:.2f}' for o in oc)}; momentum {', '.join(f'{o:.2f}' for o in om)} (min 1.9)")
        v = energy_law_defect(lam)
        add(f"euler_energy_law[lam={lam:g}]", v <= 1e-10, f"max relative defect = {v:.2e} (tol 1e-10)")
    v = minimization_worst(rng, dom)
    add("minimization_property", v >= -1e-12, f"worst scaled slack = {v:.2e} (min -1e-12)")
    v = alignment_energy_increase(rng, dom)
    add("alignment_dissipates", v <= 1e-14, f"max relative F increase = {v:.2e} (tol 1e-14)")
    return results
