import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alignlimit.phase_ensemble import (
    Domain1D,
    ParticleEnsemble,
    deposit_moments,
    gather,
    gather_velocity,
    grid_integral,
    hat_stencil,
)


DOM = Domain1D(1.0, 16)


def single(x, v, w=1.0):
    return ParticleEnsemble(np.array([x]), np.array([v]), np.array([w]))


def test_particle_on_node_deposits_to_that_node_only():
    field = deposit_moments(single(DOM.nodes[3], 2.0), DOM)
    expected = np.zeros(DOM.nx)
    expected[3] = 1.0 / DOM.dx
    np.testing.assert_array_equal(field.rho, expected)
    assert field.u[3] == 2.0
    assert np.all(field.u[np.arange(DOM.nx) != 3] == 0.0)


def test_particle_midway_splits_evenly():
    x = 0.5 * (DOM.nodes[3] + DOM.nodes[4])
    field = deposit_moments(single(x, 1.0), DOM)
    assert field.rho[3] == pytest.approx(0.5 / DOM.dx, rel=1e-15)
    assert field.rho[4] == pytest.approx(0.5 / DOM.dx, rel=1e-15)
    assert np.sum(field.rho > 0) == 2


def test_particle_wraps_across_boundary():
    # left of the first node: shares mass between the last and first node
    field = deposit_moments(single(0.0, 1.0), DOM)
    assert field.rho[0] == pytest.approx(0.5 / DOM.dx)
    assert field.rho[-1] == pytest.approx(0.5 / DOM.dx)


def test_deposit_errors():
    empty = ParticleEnsemble(np.array([]), np.array([]), np.array([]))
    with pytest.raises(ValueError, match="no particles"):
        deposit_moments(empty, DOM)
    bad = ParticleEnsemble(np.array([0.1, 0.2]), np.array([0.0, np.nan]), np.array([1.0, 1.0]))
    with pytest.raises(ValueError, match="index 1"):
        deposit_moments(bad, DOM)


def test_ensemble_validation():
    with pytest.raises(ValueError):
        ParticleEnsemble(np.zeros(2), np.zeros(3), np.ones(2))
    with pytest.raises(ValueError):
        ParticleEnsemble(np.zeros(2), np.zeros(2), np.array([1.0, -1.0]))
    with pytest.raises(ValueError):
        Domain1D(1.0, 2)
    with pytest.raises(ValueError):
        Domain1D(-1.0, 8)


def test_floored_cells_report_zero_velocity():
    field = deposit_moments(single(DOM.nodes[5], 3.0), DOM)
    assert field.floored.sum() == DOM.nx - 1
    assert np.all(field.u[field.floored] == 0.0)


def test_gather_examples():
    u = np.arange(DOM.nx, dtype=float) ** 2
    assert gather(u, DOM.nodes[3], DOM) == u[3]
    mid = 0.5 * (DOM.nodes[3] + DOM.nodes[4])
    assert gather(u, mid, DOM) == pytest.approx(0.5 * (u[3] + u[4]), rel=1e-15)
    xs = np.linspace(0, 1, 101, endpoint=False)
    np.testing.assert_allclose(gather(np.full(DOM.nx, 2.5), xs, DOM), 2.5, rtol=1e-15)


def test_gather_velocity_rejects_nonfinite_position():
    field = deposit_moments(single(0.3, 1.0), DOM)
    with pytest.raises(ValueError):
        gather_velocity(field, np.array([np.inf]))


def test_grid_integral_examples():
    assert grid_integral(np.zeros(DOM.nx), DOM) == 0.0
    for nx in (4, 7, 64):
        d = Domain1D(1.0, nx)
        assert grid_integral(np.full(nx, 3.0), d) == pytest.approx(3.0, rel=1e-15)
    with pytest.raises(ValueError):
        grid_integral(np.zeros(3), DOM)


def test_wrap_stays_in_range():
    x = DOM.wrap(np.array([-1e-17, 1.0, 2.3, -0.25]))
    assert np.all((x >= 0) & (x < 1.0))
    np.testing.assert_allclose(x, [0.0, 0.0, 0.3, 0.75], atol=1e-15)


ensembles = st.integers(1, 300).flatmap(lambda n: st.tuples(
    st.lists(st.floats(0, 1, exclude_max=True), min_size=n, max_size=n),
    st.lists(st.floats(-5, 5), min_size=n, max_size=n),
    st.lists(st.floats(0.01, 2.0), min_size=n, max_size=n),
))


@settings(max_examples=100, deadline=None)
@given(ensembles)
def test_mass_integral_equals_particle_sum(data):
    ens = ParticleEnsemble(*map(np.array, data))
    field = deposit_moments(ens, DOM)
    assert grid_integral(field.rho, DOM) == pytest.approx(ens.mass(), rel=1e-13)
    assert grid_integral(field.P, DOM) == pytest.approx(ens.momentum(), rel=1e-12, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(ensembles)
def test_scatter_gather_momentum_identity(data):
    ens = ParticleEnsemble(*map(np.array, data))
    field = deposit_moments(ens, DOM)
    if field.floored.any():
        return
    lhs = float(np.sum(ens.w * gather_velocity(field, ens.x)))
    assert abs(lhs - ens.momentum()) <= 1e-12 * float(np.sum(ens.w * np.abs(ens.v))) + 1e-300


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1, exclude_max=True), min_size=1, max_size=100))
def test_hat_weights_partition_unity(xs):
    left, right, frac = hat_stencil(np.array(xs), DOM)
    assert np.all((frac >= 0) & (frac <= 1))
    assert np.all((left >= 0) & (left < DOM.nx))
    np.testing.assert_array_equal(right, (left + 1) % DOM.nx)


def test_deposit_is_bitwise_reproducible():
    rng = np.random.default_rng(3)
    ens = ParticleEnsemble(rng.uniform(0, 1, 5000), rng.normal(size=5000), rng.uniform(size=5000))
    a, b = deposit_moments(ens, DOM), deposit_moments(ens, DOM)
    assert a.rho.tobytes() == b.rho.tobytes() and a.P.tobytes() == b.P.tobytes()
