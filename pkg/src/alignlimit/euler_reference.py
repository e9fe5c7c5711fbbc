"""Classical solution of damped pressureless Euler on the torus by characteristics.

Along ``dX/dt = u`` the damped system gives ``u = u0(x0) exp(-lam t)`` and
``X(t; x0) = x0 + u0(x0) phi(t)`` with ``phi(t) = (1 - exp(-lam t)) / lam``.
Mass conservation along characteristics gives ``rho = rho0(x0) / J`` with
``J = 1 + u0'(x0) phi(t)``.  The solution stays classical while ``J > 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar


class PastBlowupError(ValueError):
    pass


@dataclass(frozen=True)
class InitProfile:
    """Initial fluid data.

    ``const``: ``rho0 = a0``, ``u0 = b0``.
    ``sine``:  ``rho0 = a0 + a1 cos(kx)``, ``u0 = b0 + b1 sin(kx)`` with ``k = 2 pi / L``.
    The ``b0`` drift of ``sine`` defaults to zero.
    """

    kind: str = "sine"
    a0: float = 1.0
    a1: float = 0.5
    b0: float = 0.0
    b1: float = 0.2
    length: float = 1.0

    def __post_init__(self):
        if self.kind not in ("const", "sine"):
            raise ValueError(f"unknown profile {self.kind!r}")
        if self.kind == "const":
            object.__setattr__(self, "a1", 0.0)
            object.__setattr__(self, "b1", 0.0)
        if not self.a0 > abs(self.a1):
            raise ValueError("density must stay positive: need a0 > |a1|")
        if not self.length > 0:
            raise ValueError("profile length must be positive")

    @property
    def k(self) -> float:
        return 2.0 * math.pi / self.length

    def rho0(self, x):
        return self.a0 + self.a1 * np.cos(self.k * np.asarray(x, dtype=np.float64))

    def rho0_x(self, x):
        return -self.a1 * self.k * np.sin(self.k * np.asarray(x, dtype=np.float64))

    def u0(self, x):
        return self.b0 + self.b1 * np.sin(self.k * np.asarray(x, dtype=np.float64))

    def u0_x(self, x):
        return self.b1 * self.k * np.cos(self.k * np.asarray(x, dtype=np.float64))

    def u0_xx(self, x):
        return -self.b1 * self.k**2 * np.sin(self.k * np.asarray(x, dtype=np.float64))

    def energy0(self) -> float:
        """Closed-form ``int rho0 u0^2 / 2 dx`` (the cosine cross terms vanish)."""
        return 0.5 * self.a0 * (self.b0**2 + 0.5 * self.b1**2) * self.length


def damping_factor(lam: float, t):
    """``phi(lam, t) = (1 - e^{-lam t}) / lam``, equal to ``t`` at ``lam = 0``."""
    t = np.asarray(t, dtype=np.float64)
    if lam == 0:
        return t
    return -np.expm1(-lam * t) / lam


def max_compression(profile: InitProfile, samples: int = 4096) -> float:
    """``max_x (-u0'(x))`` by dense sampling plus bounded local refinement."""
    L = profile.length
    xs = np.arange(samples) * (L / samples)
    vals = -profile.u0_x(xs)
    i = int(np.argmax(vals))
    best = float(vals[i])
    h = L / samples
    res = minimize_scalar(lambda y: float(profile.u0_x(y)), bounds=(xs[i] - h, xs[i] + h),
                          method="bounded", options={"xatol": 1e-12})
    return max(best, -float(res.fun))


def blowup_time(profile: InitProfile, lam: float) -> float:
    if lam < 0:
        raise ValueError("friction coefficient must be non-negative")
    m = max_compression(profile)
    if m <= 0:
        return math.inf
    if lam == 0:
        return 1.0 / m
    if lam >= m:
        return math.inf
    return -math.log1p(-lam / m) / lam


@dataclass(frozen=True)
class ReferenceSolution:
    profile: InitProfile
    lam: float = 0.0
    tol_inv: float = 1e-12
    t_star: float = field(default=None)

    def __post_init__(self):
        if self.t_star is None:
            object.__setattr__(self, "t_star", blowup_time(self.profile, self.lam))

    def _guard(self, t):
        if np.any(np.asarray(t) >= self.t_star):
            raise PastBlowupError(f"past blowup: t={np.max(t)} >= T*={self.t_star}")
        if np.any(np.asarray(t) < 0):
            raise ValueError("negative time")

    def forward_map(self, t, x0):
        """Unwrapped characteristic foot-to-head map ``X(t; x0)``."""
        return x0 + self.profile.u0(x0) * damping_factor(self.lam, t)

    def jacobian(self, t, x0):
        return 1.0 + self.profile.u0_x(x0) * damping_factor(self.lam, t)

    def invert(self, t, x):
        """Characteristic foot ``x0`` in ``[0, L)`` with ``X(t; x0) = x`` mod ``L``.

        The unwrapped map is strictly increasing before blowup and moves points
        by at most ``max|u0| phi``, which brackets the root; bisection then runs
        to ``tol_inv``.
        """
        self._guard(t)
        x = np.asarray(x, dtype=np.float64)
        phi = float(damping_factor(self.lam, t))
        p = self.profile
        bound = (abs(p.b0) + abs(p.b1)) * phi
        lo = x - bound - self.tol_inv
        hi = x + bound + self.tol_inv
        lo, hi = np.broadcast_arrays(lo, hi)
        lo, hi = lo.copy(), hi.copy()
        for _ in range(200):
            if np.max(hi - lo) <= self.tol_inv:
                break
            mid = 0.5 * (lo + hi)
            g = mid + p.u0(mid) * phi - x
            below = g < 0
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        else:
            raise RuntimeError("characteristic inversion did not converge")
        return np.mod(0.5 * (lo + hi), p.length)

    def evaluate(self, t, x):
        """``(rho, u)`` at time ``t`` and positions ``x``."""
        x0 = self.invert(t, x)
        u = self.profile.u0(x0) * math.exp(-self.lam * t)
        rho = self.profile.rho0(x0) / self.jacobian(t, x0)
        return rho, u

    def derivatives(self, t, x):
        """Fields and their first partial derivatives at ``(t, x)``.

        Returns a dict with ``rho, u, rho_t, rho_x, u_t, u_x`` computed by
        differentiating the characteristic representation.
        """
        p = self.profile
        x0 = self.invert(t, x)
        phi = float(damping_factor(self.lam, t))
        dphi = math.exp(-self.lam * t)
        J = self.jacobian(t, x0)
        r0, r0x = p.rho0(x0), p.rho0_x(x0)
        u0, u0x, u0xx = p.u0(x0), p.u0_x(x0), p.u0_xx(x0)
        # foot derivatives from X(t; x0(t, x)) = x
        x0_x = 1.0 / J
        x0_t = -u0 * dphi / J
        J_x0 = u0xx * phi
        J_t = u0x * dphi
        u = u0 * dphi
        rho = r0 / J
        drho_dx0 = (r0x * J - r0 * J_x0) / J**2
        return {
            "rho": rho,
            "u": u,
            "u_x": u0x * dphi * x0_x,
            "u_t": u0x * dphi * x0_t - self.lam * u,
            "rho_x": drho_dx0 * x0_x,
            "rho_t": drho_dx0 * x0_t - r0 * J_t / J**2,
        }

    def fluid_energy(self, t, samples: int = 4096):
        """Fluid entropy ``int rho u^2 / 2 dx`` at time ``t``.

        Returns ``(quadrature, closed_form)``: midpoint quadrature of the
        Eulerian fields on ``samples`` points, and ``E(0) exp(-2 lam t)``.
        """
        self._guard(t)
        L = self.profile.length
        xs = (np.arange(samples) + 0.5) * (L / samples)
        rho, u = self.evaluate(t, xs)
        quad = float(np.sum(0.5 * rho * u * u)) * (L / samples)
        return quad, self.profile.energy0() * math.exp(-2.0 * self.lam * t)

    def lagrangian_integral(self, t, integrand, samples: int = 4096) -> float:
        """``int rho g(t, x, u) dx`` computed as ``int rho0(x0) g(t, X, u) dx0``."""
        self._guard(t)
        L = self.profile.length
        x0 = (np.arange(samples) + 0.5) * (L / samples)
        X = np.mod(self.forward_map(t, x0), L)
        u = self.profile.u0(x0) * math.exp(-self.lam * t)
        return float(np.sum(self.profile.rho0(x0) * integrand(t, X, u))) * (L / samples)
