import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bidisperse import fd
from bidisperse import model as mc
from bidisperse import riemann as rm

O = mc.ORIGIN


def test_grid_validation():
    g = fd.Grid1D(-1.0, 1.0, 400)
    assert g.dx == pytest.approx(0.005)
    assert g.centers[0] == pytest.approx(-1.0 + 0.0025)
    for bad in ((0.0, 0.0, 10), (0.0, 1.0, 0), (1.0, 0.0, 5)):
        with pytest.raises(ValueError):
            fd.Grid1D(*bad)


def test_config_validation():
    for kw in ({"cfl": 1.2}, {"cfl": 0.0}, {"t_end": -1.0}, {"scheme": "weno"}):
        with pytest.raises(ValueError):
            fd.SimConfig(**kw)


def test_init_riemann():
    g = fd.Grid1D(-1.0, 1.0, 10)
    assert np.all(fd.init_riemann(g, O, O) == 0.0)
    cells = fd.init_riemann(g, O, (0.2, 0.25))
    assert np.all(cells[:5] == 0.0) and np.all(cells[5:] == (0.2, 0.25))
    with pytest.raises(ValueError):
        fd.init_riemann(fd.Grid1D(0.5, 1.0, 10), O, O)


def test_init_batch(ex1):
    g = fd.Grid1D(-0.5, 1.5, 200)
    cells = fd.init_batch(ex1, g, (0.2, 0.25))
    x = g.centers
    assert np.all(cells[x < 0] == 0.0)
    assert np.all(cells[(x > 0) & (x < 1)] == (0.2, 0.25))
    packed = cells[x > 1]
    assert np.allclose(packed.sum(axis=1), 1.0)
    assert np.all(mc.flux_array(ex1, packed.T) == 0.0)
    assert np.all(fd.init_batch(ex1, g, O)[(x > 0) & (x < 1)] == 0.0)
    with pytest.raises(ValueError):
        fd.init_batch(ex1, g, (0.7, 0.7))


def test_uniform_field_unchanged(ex2):
    g = fd.Grid1D(0.0, 1.0, 50)
    cells = np.tile((0.2, 0.25), (50, 1))
    new, dt, clamped = fd.step(ex2, cells, g, fd.SimConfig())
    assert np.allclose(new, cells, rtol=0, atol=1e-16) and dt > 0 and clamped == 0.0


@pytest.mark.parametrize("scheme", fd.SCHEMES)
def test_single_step_bounded(ex1, scheme):
    g = fd.Grid1D(-1.0, 1.0, 200)
    cells = fd.init_riemann(g, O, (0.2, 0.25))
    new, _, _ = fd.step(ex1, cells, g, fd.SimConfig(scheme=scheme, clamp=False))
    assert new.min() >= -1e-14
    assert new[:, 0].max() <= 0.2 + 0.05 and new[:, 1].max() <= 0.25 + 0.05


@settings(max_examples=30)
@given(a=st.floats(0.0, 0.5), b=st.floats(0.0, 0.5), scheme=st.sampled_from(fd.SCHEMES))
def test_step_conserves_mass(a, b, scheme):
    p = mc.preset("example2")
    g = fd.Grid1D(-1.0, 1.0, 200)
    cells = np.zeros((200, 2))
    cells[80:120] = (a, b)
    m0 = cells.sum(axis=0) * g.dx
    new, _, clamped = fd.step(p, cells, g, fd.SimConfig(scheme=scheme))
    assert clamped == 0.0
    assert np.allclose(new.sum(axis=0) * g.dx, m0, rtol=1e-13, atol=1e-16)


def test_non_finite_aborts(ex1):
    g = fd.Grid1D(0.0, 1.0, 10)
    cells = np.full((10, 2), 0.1)
    cells[3] = np.nan
    with pytest.raises(fd.SimulationError, match="step 7"):
        fd.step(ex1, cells, g, fd.SimConfig(), dt=1e-3, index=7)


def test_run_snapshots(ex1):
    g = fd.Grid1D(-0.1, 0.2, 100)
    res = fd.run(ex1, fd.init_riemann(g, O, (0.2, 0.25)), g, fd.SimConfig(t_end=0.2),
                 snapshots=(0.0, 0.05, 0.1, 0.2))
    assert res.t == 0.2
    assert sorted(res.snapshots) == [0.0, 0.05, 0.1, 0.2]
    assert np.array_equal(res.snapshots[0.2], res.cells)
    assert np.array_equal(res.snapshots[0.0], fd.init_riemann(g, O, (0.2, 0.25)))


def test_run_max_steps(ex1):
    g = fd.Grid1D(-0.1, 0.2, 100)
    res = fd.run(ex1, fd.init_riemann(g, O, (0.2, 0.25)), g, fd.SimConfig(t_end=10.0), max_steps=5)
    assert res.steps == 5 and res.t < 10.0


def test_compare_profile_identical_field(ex1):
    g = fd.Grid1D(-0.025, 0.125, 400)
    sol = rm.solve_rp_origin(ex1, (0.2, 0.25))
    exact = rm.sample_profile(sol, g.centers / 0.5)
    assert np.all(fd.compare_profile(g, exact, 0.5, sol) == 0.0)
    with pytest.raises(ValueError):
        fd.compare_profile(g, exact, 0.0, sol)


def test_contact_shock_speed(ex1):
    g = fd.Grid1D(-0.025, 0.125, 1600)
    res = fd.run(ex1, fd.init_riemann(g, O, (0.25, 0.25)), g, fd.SimConfig(t_end=0.5))
    x = fd.front_position(g, res.cells, 1, 0.125)
    assert x / 0.5 == pytest.approx(0.0625, rel=0.02)


def test_refinement_contact_shock(ex1):
    sol = rm.solve_rp_origin(ex1, (0.25, 0.25))
    errs = []
    for n in (800, 1600):
        g = fd.Grid1D(-0.025, 0.125, n)
        res = fd.run(ex1, fd.init_riemann(g, O, (0.25, 0.25)), g, fd.SimConfig(t_end=0.5))
        errs.append(fd.compare_profile(g, res.cells, res.t, sol))
    factor = errs[0] / errs[1]
    assert np.all((factor >= 1.3) & (factor <= 2.7))


def test_unclamped_overshoot_small(ex1):
    g = fd.Grid1D(-0.025, 0.125, 400)
    res = fd.run(ex1, fd.init_riemann(g, O, (0.2, 0.35)), g, fd.SimConfig(t_end=0.5, clamp=False))
    assert -res.cells.min() <= g.dx
    assert (res.cells.sum(axis=1) - 1.0).max() <= g.dx


def test_batch_settling_stays_physical(ex2):
    g = fd.Grid1D(-0.2, 1.2, 280)
    res = fd.run(ex2, fd.init_batch(ex2, g, (0.2, 0.25)), g, fd.SimConfig(t_end=0.5))
    assert np.all(mc.in_phase_space(ex2, res.cells.T, tol=1e-12))
    # a clear-liquid layer has opened above the suspension
    assert fd.front_position(g, res.cells, 2, 0.1) > 0.0


def test_front_position_requires_crossing(ex1):
    g = fd.Grid1D(0.0, 1.0, 10)
    with pytest.raises(ValueError):
        fd.front_position(g, np.zeros((10, 2)), 1, 0.5)
