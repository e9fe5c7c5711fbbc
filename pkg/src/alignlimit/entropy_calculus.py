"""Entropy functionals for pressureless Euler and their kinetic counterparts.

Conserved variables are ``U = (rho, P)`` with ``P = rho u``.  The fluid entropy
is the kinetic energy ``E(U) = P^2 / (2 rho)``, the flux is ``A(U) = (P, P^2/rho)``
and the damping source is ``F(U) = (0, -P)``.  All functions are vectorised over
cells; cells with ``rho < rho_floor`` contribute zero.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .phase_ensemble import Domain1D, MomentField, ParticleEnsemble, gather_velocity, grid_integral


def _ok(rho, rho_floor):
    return np.asarray(rho) >= rho_floor


def _velocity(rho, P, rho_floor):
    rho = np.asarray(rho, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    u = np.zeros(np.broadcast(rho, P).shape)
    np.divide(P, rho, out=u, where=_ok(rho, rho_floor))
    return u


def entropy(rho, P, rho_floor=0.0):
    u = _velocity(rho, P, rho_floor)
    return np.where(_ok(rho, rho_floor), 0.5 * P * u, 0.0)


def entropy_gradient(rho, P, rho_floor=0.0):
    """``DE(U) = (-u^2/2, u)``."""
    u = _velocity(rho, P, rho_floor)
    return -0.5 * u * u, u


def hessian_action(rho, P, W_rho, W_P, rho_floor=0.0):
    """``D^2E(U) W`` with ``D^2E = [[u^2/rho, -u/rho], [-u/rho, 1/rho]]``."""
    ok = _ok(rho, rho_floor)
    u = _velocity(rho, P, rho_floor)
    inv = np.zeros_like(u)
    np.divide(1.0, rho, out=inv, where=ok)
    return (inv * (u * u * W_rho - u * W_P),
            inv * (W_P - u * W_rho))


def flux_A(rho, P, rho_floor=0.0):
    u = _velocity(rho, P, rho_floor)
    return np.where(_ok(rho, rho_floor), P, 0.0), P * u


def source_F(rho, P):
    return np.zeros_like(np.asarray(P, dtype=np.float64)), -np.asarray(P, dtype=np.float64)


def entropy_flux_G(rho, P, rho_floor=0.0):
    """Entropy flux ``G = rho u^3 / 2`` compatible with ``A``."""
    u = _velocity(rho, P, rho_floor)
    return 0.5 * P * u * u


def relative_entropy(q, Q, rho, P, rho_floor=0.0):
    """``E(V|U)`` for ``V = (q, Q)``, ``U = (rho, P)``: closed form ``q (w - u)^2 / 2``."""
    ok = _ok(q, rho_floor) & _ok(rho, rho_floor)
    w = _velocity(q, Q, rho_floor)
    u = _velocity(rho, P, rho_floor)
    return np.where(ok, 0.5 * q * (w - u) ** 2, 0.0)


def relative_entropy_definition(q, Q, rho, P):
    """``E(V) - E(U) - DE(U).(V - U)`` evaluated term by term."""
    g_rho, g_P = entropy_gradient(rho, P)
    return entropy(q, Q) - entropy(rho, P) - (g_rho * (q - rho) + g_P * (Q - P))


def relative_flux(q, Q, rho, P, rho_floor=0.0):
    """Momentum block of ``A(V|U)``: ``q (w - u)^2``.  The mass block is zero."""
    return 2.0 * relative_entropy(q, Q, rho, P, rho_floor)


def relative_flux_definition(q, Q, rho, P):
    """``A(V) - A(U) - DA(U).(V - U)`` as ``(mass block, momentum block)``."""
    A1v, A2v = flux_A(q, Q)
    A1u, A2u = flux_A(rho, P)
    u = P / rho
    dA1 = Q - P
    dA2 = -(q - rho) * u * u + 2.0 * u * (Q - P)
    return A1v - A1u - dA1, A2v - A2u - dA2


def relative_entropy_terms(q, Q, rho, P):
    """Magnitude scale of the definitional form, for cancellation-aware comparisons."""
    g_rho, g_P = entropy_gradient(rho, P)
    return (np.abs(entropy(q, Q)) + np.abs(entropy(rho, P))
            + np.abs(g_rho * (q - rho)) + np.abs(g_P * (Q - P)))


def relative_flux_terms(q, Q, rho, P):
    u = P / rho
    return (np.abs(Q * Q / q) + np.abs(P * u) + np.abs((q - rho) * u * u)
            + np.abs(2.0 * u * (Q - P)))


# --- kinetic side -----------------------------------------------------------

def kinetic_entropy(ens: ParticleEnsemble) -> float:
    """``F(f) = sum_i w_i v_i^2 / 2``."""
    return 0.5 * float(np.sum(ens.w * ens.v * ens.v))


def dissipation(ens: ParticleEnsemble, field: MomentField) -> float:
    """``D(f) = sum_i w_i (u(x_i) - v_i)^2`` with ``u`` gathered from ``field``."""
    dv = gather_velocity(field, ens.x) - ens.v
    return float(np.sum(ens.w * dv * dv))


def grid_energy(field: MomentField) -> float:
    return grid_integral(entropy(field.rho, field.P, field.rho_floor), field.domain)


def minimization_slack(field: MomentField) -> np.ndarray:
    """Per-cell ``second moment - rho u^2`` (non-negative by Cauchy-Schwarz)."""
    return np.where(field.floored, field.second, field.second - field.P * field.u)


def relative_entropy_integral(field: MomentField, u_ref) -> float:
    """``int E(U^eps | U) dx = 1/2 int rho^eps (u^eps - u)^2 dx`` over unfloored cells."""
    vals = np.where(field.floored, 0.0, 0.5 * field.rho * (field.u - u_ref) ** 2)
    return grid_integral(vals, field.domain)


def excluded_mass(field: MomentField) -> float:
    return grid_integral(np.where(field.floored, field.rho, 0.0), field.domain)


def entropy_inequality_residual(F0, Ft, dissipation_integral, friction_work, eps) -> float:
    """Slack of the kinetic entropy inequality.

    ``F(0) - [F(t) + (1/eps) int_0^t D ds + lam int_0^t int |v|^2 f ds]``; the
    last integral is passed in as ``friction_work`` (it equals ``2 lam int F``).
    """
    return F0 - (Ft + dissipation_integral / eps + friction_work)


def trapezoid_entropy_residual(times, F, D, eps, lam) -> float:
    """Same slack with both time integrals taken by the trapezoid rule on samples.

    Only consistent when the sample spacing resolves the relaxation time
    ``eps``; for coarser spacing it overestimates the dissipation.
    """
    times = np.asarray(times, dtype=np.float64)
    F = np.asarray(F, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    dt = np.diff(times)
    intD = float(np.sum(0.5 * (D[1:] + D[:-1]) * dt))
    intF = float(np.sum(0.5 * (F[1:] + F[:-1]) * dt))
    return entropy_inequality_residual(F[0], F[-1], intD, 2.0 * lam * intF, eps)


# --- relative entropy identity with a manufactured path ----------------------

@dataclass(frozen=True)
class ManufacturedPath:
    """Smooth comparison path ``V = (q, q w)`` with analytic derivatives.

    ``fields(t, x)`` must return a dict with ``q, w, q_t, q_x, w_t, w_x``.
    """

    fields: object

    def __call__(self, t, x):
        return self.fields(t, x)


def perturbed_reference_path(ref, amplitude=0.01):
    """``V = U`` with velocity perturbed by ``amplitude sin(2 pi x / L)``."""
    k = 2.0 * np.pi / ref.profile.length

    def fields(t, x):
        d = ref.derivatives(t, x)
        return {
            "q": d["rho"], "q_t": d["rho_t"], "q_x": d["rho_x"],
            "w": d["u"] + amplitude * np.sin(k * x),
            "w_t": d["u_t"],
            "w_x": d["u_x"] + amplitude * k * np.cos(k * x),
        }

    return ManufacturedPath(fields)


def _integrals_at(V, ref, t, xs, dx):
    """All spatial integrals entering the identity at one time."""
    d = ref.derivatives(t, xs)
    rho, u, u_x = d["rho"], d["u"], d["u_x"]
    P = rho * u
    f = V(t, xs)
    q, w = f["q"], f["w"]
    Q = q * w
    lam = ref.lam
    g_rho, g_P = -0.5 * u * u, u
    # analytic residual of V against the conservation law
    Q_t = f["q_t"] * w + q * f["w_t"]
    Q_x = f["q_x"] * w + q * f["w_x"]
    res_rho = f["q_t"] + Q_x
    res_P = Q_t + (Q_x * w + Q * f["w_x"]) + lam * Q
    # grad_x DE(U) : A(V|U) with grad_x DE(U) = (-u u_x, u_x), A(V|U) = (0, q (w-u)^2)
    flux_term = u_x * q * (w - u) ** 2
    h_rho, h_P = hessian_action(rho, P, 0.0, -P)
    damp = (h_rho * (q - rho) + h_P * (Q - P)) + g_P * (-Q)
    s = lambda a: float(np.sum(a)) * dx
    return {
        "rel": s(0.5 * q * (w - u) ** 2),
        "EV": s(0.5 * Q * w),
        "flux": s(flux_term),
        "residual": s(g_rho * res_rho + g_P * res_P),
        "damping": s(damp),
    }


def identity_residual(V, ref, t_grid, dt, nx):
    """Residual of the relative-entropy identity along ``t_grid``.

    The left side ``d/dt int E(V|U)`` and the term ``d/dt int E(V)`` use central
    differences with step ``dt``; remaining terms are midpoint quadratures on
    ``nx`` cells.  Returns ``|LHS - RHS|`` per time.
    """
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=np.float64))
    if np.any(t_grid + dt >= ref.t_star):
        raise ValueError(f"identity evaluation reaches past T*={ref.t_star}")
    L = ref.profile.length
    dx = L / nx
    xs = (np.arange(nx) + 0.5) * dx
    out = []
    for t in t_grid:
        plus = _integrals_at(V, ref, t + dt, xs, dx)
        minus = _integrals_at(V, ref, t - dt, xs, dx)
        mid = _integrals_at(V, ref, t, xs, dx)
        lhs = (plus["rel"] - minus["rel"]) / (2 * dt)
        dEV = (plus["EV"] - minus["EV"]) / (2 * dt)
        rhs = dEV - mid["flux"] - mid["residual"] - ref.lam * mid["damping"]
        out.append(abs(lhs - rhs))
    return np.array(out)


def flux_cancellation_integral(ref, t, nx=4096) -> float:
    """``int DE(U) . div_x A(U) dx``, equal to ``int div_x G(U) dx = 0`` on the torus.

    Pointwise the integrand is ``d/dx (rho u^3 / 2)``, not zero; only the
    periodic integral vanishes.
    """
    L = ref.profile.length
    dx = L / nx
    xs = (np.arange(nx) + 0.5) * dx
    d = ref.derivatives(t, xs)
    rho, u, rho_x, u_x = d["rho"], d["u"], d["rho_x"], d["u_x"]
    divA_rho = rho_x * u + rho * u_x
    divA_P = rho_x * u * u + 2.0 * rho * u * u_x
    return float(np.sum(-0.5 * u * u * divA_rho + u * divA_P)) * dx
