"""Periodic 1-D mesh, particle ensembles and the cloud-in-cell scatter/gather pair.

Particles carry position, velocity and mass weight.  Grid fields live at cell
centres ``x_j = (j + 1/2) dx`` of the torus ``[0, L)``.  Deposition and gather
share one linear-hat stencil, so gather is the exact adjoint of deposition and
total momentum survives a scatter/gather round trip.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class Domain1D:
    """Periodic interval ``[0, length)`` split into ``nx`` equal cells."""

    length: float = 1.0
    nx: int = 256

    def __post_init__(self):
        if not (np.isfinite(self.length) and self.length > 0):
            raise ValueError(f"domain length must be positive, got {self.length}")
        if int(self.nx) != self.nx or self.nx < 4:
            raise ValueError(f"need an integer cell count >= 4, got {self.nx}")

    @property
    def dx(self) -> float:
        return self.length / self.nx

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.dx

    def wrap(self, x):
        """Map coordinates onto ``[0, L)``."""
        y = np.mod(x, self.length)
        # np.mod can return L itself for tiny negative inputs
        return np.where(y >= self.length, 0.0, y)


@dataclass(frozen=True)
class ParticleEnsemble:
    x: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        for name in ("x", "v", "w"):
            object.__setattr__(self, name, np.ascontiguousarray(getattr(self, name), dtype=np.float64))
        if not (self.x.shape == self.v.shape == self.w.shape) or self.x.ndim != 1:
            raise ValueError("x, v, w must be 1-D arrays of equal length")
        if self.w.size and np.any(self.w < 0):
            raise ValueError("particle weights must be non-negative")

    @property
    def count(self) -> int:
        return self.x.size

    def mass(self) -> float:
        return float(np.sum(self.w))

    def momentum(self) -> float:
        return float(np.sum(self.w * self.v))

    def with_state(self, x=None, v=None) -> "ParticleEnsemble":
        return replace(self, x=self.x if x is None else x, v=self.v if v is None else v)


@dataclass(frozen=True)
class MomentField:
    """Grid moments deposited from an ensemble.

    ``u`` is ``P / rho`` where ``rho >= rho_floor`` and zero elsewhere.
    ``second`` holds the deposited second velocity moment, used for the
    per-cell minimisation check ``rho u^2 <= second``.
    """

    domain: Domain1D
    rho: np.ndarray
    P: np.ndarray
    u: np.ndarray
    second: np.ndarray
    rho_floor: float

    @property
    def floored(self) -> np.ndarray:
        return self.rho < self.rho_floor


def default_rho_floor(total_mass: float, domain: Domain1D) -> float:
    return 1e-12 * total_mass / domain.length


def hat_stencil(x, domain: Domain1D):
    """Left node index and right-node weight of the linear hat at ``x``.

    A point at ``x`` touches nodes ``j`` and ``j + 1`` (mod ``nx``) with weights
    ``1 - frac`` and ``frac``.
    """
    s = np.asarray(x, dtype=np.float64) / domain.dx - 0.5
    j = np.floor(s)
    frac = s - j
    left = np.mod(j.astype(np.int64), domain.nx)
    return left, (left + 1) % domain.nx, frac


def _check_finite(ens: ParticleEnsemble):
    for name in ("x", "v", "w"):
        arr = getattr(ens, name)
        bad = ~np.isfinite(arr)
        if bad.any():
            raise ValueError(f"non-finite particle {name} at index {int(np.argmax(bad))}")


def _scatter(values, left, right, frac, nx):
    # bincount accumulates in ascending particle order: bitwise reproducible
    return (np.bincount(left, weights=values * (1.0 - frac), minlength=nx)
            + np.bincount(right, weights=values * frac, minlength=nx))


def deposit_moments(ens: ParticleEnsemble, dom: Domain1D, rho_floor: float | None = None) -> MomentField:
    """Cloud-in-cell deposit of density, momentum and second moment."""
    if ens.count == 0:
        raise ValueError("no particles")
    _check_finite(ens)
    if rho_floor is None:
        rho_floor = default_rho_floor(ens.mass(), dom)
    left, right, frac = hat_stencil(ens.x, dom)
    wv = ens.w * ens.v
    rho = _scatter(ens.w, left, right, frac, dom.nx) / dom.dx
    P = _scatter(wv, left, right, frac, dom.nx) / dom.dx
    second = _scatter(wv * ens.v, left, right, frac, dom.nx) / dom.dx
    ok = rho >= rho_floor
    u = np.zeros_like(rho)
    np.divide(P, rho, out=u, where=ok)
    return MomentField(dom, rho, P, u, second, float(rho_floor))


def gather(values, x, domain: Domain1D):
    """Interpolate node values to positions on the deposition stencil."""
    left, right, frac = hat_stencil(x, domain)
    values = np.asarray(values)
    return (1.0 - frac) * values[left] + frac * values[right]


def gather_velocity(field: MomentField, x):
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite gather position")
    out = gather(field.u, x, field.domain)
    return float(out) if out.ndim == 0 else out


def grid_integral(values, dom: Domain1D) -> float:
    """Midpoint quadrature ``sum_j value_j dx``."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (dom.nx,):
        raise ValueError(f"expected {dom.nx} cell values, got shape {values.shape}")
    return float(np.sum(values)) * dom.dx
