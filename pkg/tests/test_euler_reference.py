import math

import numpy as np
import pytest

from alignlimit.euler_reference import (
    InitProfile,
    PastBlowupError,
    ReferenceSolution,
    blowup_time,
    max_compression,
)


SINE = InitProfile()


def spectral_solve(profile, lam, t_end, n=512, dt=1e-4):
    """Independent oracle: Fourier collocation in (rho, m) with RK4 in time."""
    x = np.arange(n) / n * profile.length
    k = 2j * np.pi * np.fft.rfftfreq(n, d=profile.length / n)

    def ddx(f):
        return np.fft.irfft(k * np.fft.rfft(f), n)

    def rhs(rho, m):
        return -ddx(m), -ddx(m * m / rho) - lam * m

    rho, m = profile.rho0(x), profile.rho0(x) * profile.u0(x)
    steps = int(round(t_end / dt))
    for _ in range(steps):
        k1 = rhs(rho, m)
        k2 = rhs(rho + 0.5 * dt * k1[0], m + 0.5 * dt * k1[1])
        k3 = rhs(rho + 0.5 * dt * k2[0], m + 0.5 * dt * k2[1])
        k4 = rhs(rho + dt * k3[0], m + dt * k3[1])
        rho = rho + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        m = m + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return x, rho, m / rho


def test_blowup_time_examples():
    assert max_compression(SINE) == pytest.approx(0.4 * math.pi, abs=1e-12)
    assert blowup_time(SINE, 0.0) == pytest.approx(1 / (0.4 * math.pi), abs=1e-10)
    assert blowup_time(SINE, 2.0) == math.inf
    assert blowup_time(InitProfile("const", b0=0.7), 0.0) == math.inf
    m = 0.4 * math.pi
    assert blowup_time(SINE, 1.0) == pytest.approx(-math.log(1 - 1 / m), rel=1e-12)


def test_evaluate_at_time_zero_is_profile():
    ref = ReferenceSolution(SINE, 0.0)
    x = np.linspace(0, 1, 257)[:-1]
    rho, u = ref.evaluate(0.0, x)
    np.testing.assert_allclose(rho, SINE.rho0(x), atol=1e-12)
    np.testing.assert_allclose(u, SINE.u0(x), atol=1e-12)


def test_const_profile_translates():
    ref = ReferenceSolution(InitProfile("const", b0=0.3), 0.0)
    x = np.linspace(0, 1, 33)[:-1]
    for t in (0.1, 1.0, 7.5):
        rho, u = ref.evaluate(t, x)
        np.testing.assert_allclose(rho, 1.0, rtol=1e-14)
        np.testing.assert_allclose(u, 0.3, rtol=1e-14)


def test_past_blowup_is_refused():
    ref = ReferenceSolution(SINE, 0.0)
    with pytest.raises(PastBlowupError, match="past blowup"):
        ref.evaluate(ref.t_star, np.array([0.5]))


@pytest.mark.parametrize("lam", [0.0, 1.0])
def test_matches_spectral_oracle(lam):
    x, rho_o, u_o = spectral_solve(SINE, lam, 0.4)
    j = 128
    assert x[j] == 0.25
    rho, u = ReferenceSolution(SINE, lam, tol_inv=1e-14).evaluate(0.4, np.array([0.25]))
    assert abs(rho[0] - rho_o[j]) <= 1e-4
    assert abs(u[0] - u_o[j]) <= 1e-4
    rho_all, u_all = ReferenceSolution(SINE, lam, tol_inv=1e-14).evaluate(0.4, x)
    assert np.max(np.abs(rho_all - rho_o)) <= 1e-4
    assert np.max(np.abs(u_all - u_o)) <= 1e-4


def test_energy_examples():
    assert SINE.energy0() == pytest.approx(0.01, rel=1e-15)
    ref0 = ReferenceSolution(SINE, 0.0)
    for t in (0.0, 0.3, 0.7):
        quad, closed = ref0.fluid_energy(t)
        assert closed == pytest.approx(0.01, rel=1e-15)
        assert quad == pytest.approx(0.01, rel=1e-10)
    ref1 = ReferenceSolution(SINE, 1.0)
    quad, closed = ref1.fluid_energy(1.0)
    assert closed == pytest.approx(0.01 * math.exp(-2), rel=1e-14)
    assert quad == pytest.approx(closed, rel=1e-10)


def test_mass_and_momentum_are_transported():
    for lam in (0.0, 1.0):
        ref = ReferenceSolution(InitProfile(b0=0.3), lam)
        x = (np.arange(4096) + 0.5) / 4096
        rho, u = ref.evaluate(0.5, x)
        assert np.mean(rho) == pytest.approx(1.0, rel=1e-9)
        assert np.mean(rho * u) == pytest.approx(0.3 * math.exp(-lam * 0.5), rel=1e-8)


def test_derivatives_match_finite_differences():
    ref = ReferenceSolution(SINE, 1.0, tol_inv=1e-15)
    x = np.linspace(0.05, 0.95, 19)
    t, h = 0.4, 1e-5
    d = ref.derivatives(t, x)
    rp, up = ref.evaluate(t, x + h)
    rm, um = ref.evaluate(t, x - h)
    np.testing.assert_allclose(d["rho_x"], (rp - rm) / (2 * h), atol=1e-7)
    np.testing.assert_allclose(d["u_x"], (up - um) / (2 * h), atol=1e-7)
    rp, up = ref.evaluate(t + h, x)
    rm, um = ref.evaluate(t - h, x)
    np.testing.assert_allclose(d["rho_t"], (rp - rm) / (2 * h), atol=1e-7)
    np.testing.assert_allclose(d["u_t"], (up - um) / (2 * h), atol=1e-7)


def test_profile_validation():
    with pytest.raises(ValueError):
        InitProfile(a0=1.0, a1=1.0)
    with pytest.raises(ValueError):
        InitProfile("triangle")
