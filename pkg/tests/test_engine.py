import time
import warnings

import numpy as np
import pytest

from lbelastic.engine import (ForcingField, InstabilityError, NonUniformInitializationWarning,
                              Simulation, collide, collide_node, equilibrium_moments,
                              extract_fields, forcing_from_body_load, initialize_equilibrium,
                              run_to_steady_state, stream)
from lbelastic.lattice import (M01, M10, M12, M21, MS, MD, Grid, PopulationField,
                               moments_to_populations, populations_to_moments)
from lbelastic.material import MaterialParams, compute_relaxation_set
from lbelastic.verification import gaussian_case, relative_errors, setup_run, trig_case

RS = compute_relaxation_set(0.11, 0.8)


def test_equilibrium_zero():
    np.testing.assert_array_equal(equilibrium_moments(0.0, 0.0, 1 / 3).as_array(), np.zeros(8))


def test_equilibrium_third_order_rule():
    m = equilibrium_moments(0.3, -0.2, 1 / 3)
    assert m.m12 == pytest.approx(0.1, abs=1e-15)
    assert m.m21 == pytest.approx(-0.2 / 3, abs=1e-15)
    assert (m.m11, m.ms, m.md, m.m22) == (0, 0, 0, 0)
    assert (m.m10, m.m01) == (0.3, -0.2)
    s = equilibrium_moments(0.7, 0.7, 0.4)
    assert s.m12 == s.m21


def test_collide_zero():
    f_star, bared = collide_node(np.zeros(8), np.zeros(2), RS)
    np.testing.assert_array_equal(f_star, 0)
    np.testing.assert_array_equal(bared.as_array(), 0)


def test_equilibrium_is_collision_fixed_point():
    m = equilibrium_moments(0.013, -0.021, RS.theta).as_array()
    f = moments_to_populations(m)
    f_star, bared = collide(f, np.zeros(2), RS)
    np.testing.assert_allclose(f_star, f, atol=1e-15)
    np.testing.assert_allclose(bared, m, atol=1e-15)


def test_forcing_halves():
    a = 0.37
    f_star, bared = collide_node(np.zeros(8), np.array([2 * a, 0.0]), RS)
    assert bared.m10 == pytest.approx(a, abs=1e-15)
    m_star = populations_to_moments(f_star)
    assert m_star[M10] == pytest.approx(2 * a, abs=1e-15)
    assert m_star[M01] == 0.0


def test_stream_moves_and_wraps():
    f = np.zeros((8, 4, 4))
    f[0, 0, 0] = 1.0
    out = stream(f)
    expect = np.zeros_like(f)
    expect[0, 1, 0] = 1.0
    np.testing.assert_array_equal(out, expect)

    f = np.zeros((8, 4, 4))
    f[2, 0, 2] = 1.0
    out = stream(f)
    assert out[2, 3, 2] == 1.0 and out.sum() == 1.0


def test_stream_uniform_unchanged():
    f = np.broadcast_to(np.arange(8.0)[:, None, None], (8, 5, 3)).copy()
    np.testing.assert_array_equal(stream(f), f)


def test_initialize_zero_and_constant():
    g = Grid.unit_square(4)
    assert not initialize_equilibrium(g, (0.0, 0.0)).f.any()
    pop = initialize_equilibrium(g, (0.2, -0.1))
    assert np.ptp(pop.f, axis=(1, 2)).max() == 0.0


def test_initialize_nonuniform_warns():
    g = Grid.unit_square(4)
    with pytest.warns(NonUniformInitializationWarning):
        initialize_equilibrium(g, lambda x, y: (x, 0 * y))


@pytest.mark.parametrize("kernel", ["fused", "numpy"])
def test_constant_state_is_stationary(kernel):
    g = Grid.unit_square(8)
    sim = Simulation(g, RS, u0=(0.2, -0.1), kernel=kernel)
    for _ in range(10):
        sim.step()
    m = populations_to_moments(sim.pop.f)
    assert np.abs(m[M10] - 0.2).max() < 1e-14
    assert np.abs(m[M01] + 0.1).max() < 1e-14


@pytest.mark.parametrize("kernel", ["fused", "numpy"])
def test_first_order_sums_conserved(kernel):
    g = Grid.unit_square(32)
    rng = np.random.default_rng(7)
    pop = PopulationField(g, rng.normal(size=(8, 32, 32)))
    sim = Simulation(g, RS, population=pop, kernel=kernel)
    s0 = populations_to_moments(sim.pop.f)[[M10, M01]].sum(axis=(1, 2))
    t0 = time.perf_counter()
    for _ in range(1000):
        sim.step()
    elapsed = time.perf_counter() - t0
    s1 = populations_to_moments(sim.pop.f)[[M10, M01]].sum(axis=(1, 2))
    assert np.abs(s1 - s0).max() <= 1e-12 * max(1.0, np.abs(s0).max())
    if kernel == "fused":
        assert elapsed < 5.0


def test_mean_displacement_drifts_by_mean_forcing():
    # each step adds the full forcing to the first-order moments
    g = Grid.unit_square(16)
    rng = np.random.default_rng(5)
    gx = rng.normal(size=g.shape) * 1e-3
    gy = rng.normal(size=g.shape) * 1e-3
    sim = Simulation(g, RS, ForcingField(gx, gy))
    for _ in range(25):
        sim.step()
    m = populations_to_moments(sim.pop.f)
    assert m[M10].sum() == pytest.approx(25 * gx.sum(), rel=1e-10, abs=1e-15)
    assert m[M01].sum() == pytest.approx(25 * gy.sum(), rel=1e-10, abs=1e-15)


def test_fused_matches_numpy_kernel():
    g = Grid(12, 9, 1 / 12)
    rng = np.random.default_rng(11)
    f0 = rng.normal(size=(8, 12, 9))
    forcing = ForcingField(rng.normal(size=g.shape) * 1e-2, rng.normal(size=g.shape) * 1e-2)
    rs = compute_relaxation_set(0.3, 0.2, 0.3, tau_12=0.7, tau_22=0.4)
    a = Simulation(g, rs, forcing, population=PopulationField(g, f0), kernel="fused")
    b = Simulation(g, rs, forcing, population=PopulationField(g, f0), kernel="numpy")
    for _ in range(20):
        a.step()
        b.step()
    np.testing.assert_allclose(a.pop.f, b.pop.f, atol=1e-13)
    np.testing.assert_allclose(a.bared, b.bared, atol=1e-13)


def test_runs_are_deterministic():
    case, mat = trig_case(), MaterialParams(0.11, 0.8)
    r1 = run_to_steady_state(setup_run(case, mat, 1 / 16), t_final=0.5)
    r2 = run_to_steady_state(setup_run(case, mat, 1 / 16), t_final=0.5)
    np.testing.assert_array_equal(r1.fields.u, r2.fields.u)
    np.testing.assert_array_equal(r1.fields.sigma, r2.fields.sigma)


def test_zero_problem_converges_at_step_one():
    sim = Simulation(Grid.unit_square(8), RS)
    res = run_to_steady_state(sim)
    assert res.converged and res.steps == 1
    assert not res.fields.u.any() and not res.fields.sigma.any()


def test_not_converged_still_returns_fields():
    case, mat = trig_case(), MaterialParams(0.11, 0.8)
    res = run_to_steady_state(setup_run(case, mat, 1 / 10), tol=1e-14, max_steps=20)
    assert not res.converged and res.steps == 20
    assert np.isfinite(res.fields.u).all()


def test_fixed_horizon_step_counts():
    # diffusive scaling: steps = t_f / eps^2, e.g. 5400 at eps = 1/30 and 60000 at eps = 1/100 for t_f = 6
    for n, expected in ((30, 5400), (100, 60000)):
        res = run_to_steady_state(Simulation(Grid.unit_square(n), RS), t_final=6.0,
                                  residual_interval=1000, record_interval=1000)
        assert res.steps == expected


def test_trig_case_reaches_expected_accuracy():
    case, mat = trig_case(), MaterialParams(0.11, 0.8)
    sim = setup_run(case, mat, 0.05)
    res = run_to_steady_state(sim, tol=1e-9)
    assert res.converged
    # residual threshold crossed within a few thousand steps
    assert 300 < res.steps < 5000
    errs = relative_errors(res.fields, case, sim.grid, mat)
    assert 0.02 < errs[1] < 0.055
    assert errs[3] < 0.1


def test_unstable_parameters_raise():
    mat = MaterialParams(0.10, -0.4)
    sim = setup_run(gaussian_case(), mat, 1 / 40)
    with pytest.raises(InstabilityError) as info:
        run_to_steady_state(sim, t_final=200.0, residual_interval=1000, record_interval=1000)
    assert 0 < info.value.step <= 320000


def test_extract_fields_examples():
    z = extract_fields(np.zeros((8, 2, 2)), 0.1)
    assert not z.u.any() and not z.sigma.any()
    eps = 0.05
    b = np.zeros(8)
    b[MS] = -2 * eps
    s = extract_fields(b, eps)
    assert s.sxx == pytest.approx(1.0) and s.syy == pytest.approx(1.0) and s.sxy == 0.0
    b = np.zeros(8)
    b[MD] = -2 * eps
    s = extract_fields(b, eps)
    assert s.sxx == pytest.approx(1.0) and s.syy == pytest.approx(-1.0)


def test_physical_units():
    s = extract_fields(np.arange(8.0), 0.5).physical(U=2.0, L=3.0, T=4.0, kappa=5.0)
    base = extract_fields(np.arange(8.0), 0.5)
    assert s.ux == 2.0 * base.ux
    assert s.sxx == pytest.approx(3.0 / 4.0 * 2.0 * 5.0 * base.sxx)


def test_body_load_forcing_scaling():
    f = forcing_from_body_load(np.ones(3), 2 * np.ones(3), 0.1, L=2.0, U=4.0)
    np.testing.assert_allclose(f.gx, 0.01 * 0.5)
    np.testing.assert_allclose(f.gy, 0.01)
    assert ForcingField.zeros(Grid.unit_square(2)).is_zero()


def test_unknown_kernel_rejected():
    with pytest.raises(ValueError):
        Simulation(Grid.unit_square(4), RS, kernel="cuda")
