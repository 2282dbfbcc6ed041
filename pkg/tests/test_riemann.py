import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bidisperse import hugoniot as hg
from bidisperse import model as mc
from bidisperse import riemann as rm
from bidisperse import spectral as sp

O = mc.ORIGIN


@pytest.mark.parametrize("s, region", [((0.2, 0.25), rm.DX_MINUS), ((0.2, 0.35), rm.DX_PLUS),
                                       ((0.25, 0.25), rm.ON_CONTACT)])
def test_region_of(ex1, s, region):
    assert rm.region_of(ex1, s) == region


# ---------------------------------------------------------------- rarefactions

def test_rarefaction_reaches_species2_vertex(ex1):
    rc = rm.rarefaction_integrate(ex1, (0.5, 0.3), 1)
    assert rc.stop_reason == "packing"
    assert np.hypot(*(rc.points[-1] - (0.0, 1.0))) < 1e-6
    assert np.all(np.diff(rc.speeds) >= -1e-12)


def test_rarefaction_stays_on_axis(ex1):
    rc = rm.rarefaction_integrate(ex1, (0.6, 0.0), 1)
    assert np.all(rc.points[:, 1] == 0.0)
    assert rc.points[-1] == pytest.approx((1.0, 0.0), abs=1e-6)


def test_rarefaction_rejects_decreasing_direction(ex1):
    with pytest.raises(ValueError, match="decreases"):
        rm.rarefaction_integrate(ex1, (0.2, 0.1), 1, direction=1.0, stop_at_inflection=False)


def test_rarefaction_outside_phase_space(ex1):
    with pytest.raises(ValueError):
        rm.rarefaction_integrate(ex1, (0.7, 0.7), 1)


@pytest.mark.parametrize("name", ["example1", "example2"])
@settings(max_examples=25)
@given(s=st.tuples(st.floats(0.02, 0.9), st.floats(0.02, 0.9)).filter(lambda s: s[0] + s[1] < 0.95))
def test_rarefaction_speed_monotone(name, s):
    p = mc.preset(name)
    try:
        rc = rm.rarefaction_integrate(p, s, 1)
    except sp.DegenerateEigenvector:
        return
    assert np.all(np.diff(rc.speeds) >= -1e-9)
    lam = sp.eigenvalues(p, rc.points.T)[0]
    assert np.allclose(lam, rc.speeds, atol=1e-9)


# ---------------------------------------------------------------- origin problems

def test_middle_state_examples(ex1):
    m = rm.middle_state_origin(ex1, (0.2, 0.25))
    assert m[0] == 0.0 and 0.0 < m[1] < 0.5
    m = rm.middle_state_origin(ex1, (0.2, 0.35))
    assert m[1] == 0.0 and 0.5 < m[0] < 1.0
    m = rm.middle_state_origin(ex1, (0.25, 0.25 - 1e-6))
    assert np.hypot(m[0], m[1] - 0.5) < 1e-4


def test_middle_state_satisfies_both_jumps(ex1):
    # independent check: both jumps satisfy Rankine-Hugoniot with their own speeds
    s = (0.2, 0.25)
    m = rm.middle_state_origin(ex1, s)
    s1, s2 = hg.shock_speed(ex1, O, m), hg.shock_speed(ex1, m, s)
    assert s1 is not None and s2 is not None and s1 < s2


def test_solve_origin_single_shocks(ex1):
    sol = rm.solve_rp_origin(ex1, (0.3, 0.0))
    assert sol.pattern == "S" and sol.segments[0].shock_class.kind == hg.OVERCOMPRESSIVE
    assert sol.segments[0].speed_lo == pytest.approx(0.2401, abs=1e-12)
    sol = rm.solve_rp_origin(ex1, (0.25, 0.25))
    seg = sol.segments[0]
    assert seg.shock_class.kind == hg.LAX1 and seg.shock_class.right_char_2
    assert seg.speed_lo == pytest.approx(0.0625, abs=1e-14)


def test_solve_origin_two_shocks(ex1):
    sol = rm.solve_rp_origin(ex1, (0.2, 0.25))
    kinds = [g.shock_class.kind for g in sol.segments]
    assert kinds == [hg.LAX1, hg.LAX2]
    assert sol.segments[0].speed_lo < sol.segments[1].speed_lo
    assert sol.check(ex1) == []


@pytest.mark.parametrize("name", ["example1", "example2"])
@settings(max_examples=40)
@given(s=st.tuples(st.floats(0.01, 0.95), st.floats(0.01, 0.95)).filter(lambda s: s[0] + s[1] < 0.97))
def test_origin_solutions_consistent(name, s):
    p = mc.preset(name)
    sol = rm.solve_rp_origin(p, s)
    assert sol.check(p) == []


def test_triple_shock_profiles_agree(ex1):
    one = rm.solve_rp_origin(ex1, (0.4, 0.1))
    mid = mc.State(0.2, 0.3)
    two = rm.WaveCurveSolution(O, mc.State(0.4, 0.1),
                               [rm._shock(ex1, O, mid), rm._shock(ex1, mid, (0.4, 0.1))], [mid])
    xi = np.linspace(-1.0, 1.0, 2001)
    xi = xi[np.abs(xi - 0.0625) > 1e-9]
    assert np.array_equal(rm.sample_profile(one, xi), rm.sample_profile(two, xi))


def test_sample_profile_limits(ex1):
    sol = rm.solve_rp_origin(ex1, (0.2, 0.25))
    prof = rm.sample_profile(sol, [-1e6, 0.09, 1e6])
    assert prof[0].tolist() == [0.0, 0.0]
    assert prof[2].tolist() == [0.2, 0.25]
    assert prof[1] == pytest.approx(sol.middle_states[0])


# ---------------------------------------------------------------- toward packing

def test_char_shock_match(ex1, ex2):
    for p, s in ((ex1, (0.1, 0.1)), (ex2, (0.2, 0.2))):
        m = rm.char_shock_match(p, s)
        sigma = hg.shock_speed(p, s, m)
        assert abs(sigma - sp.eigenvalues(p, m)[0]) <= 1e-9
    with pytest.raises(rm.NoCharacteristicShock):
        rm.char_shock_match(ex1, (0.5, 0.3))


def test_to_max_example1(ex1):
    sol = rm.solve_rp_to_max(ex1, (0.5, 0.3))
    assert sol.pattern == "R" and sol.segments[-1].right == pytest.approx((0.0, 1.0), abs=1e-6)
    sol = rm.solve_rp_to_max(ex1, (0.2, 0.1))
    assert sol.pattern == "S| R" and sol.crossings == ["I"]
    assert sol.segments[-1].right == pytest.approx((0.0, 1.0), abs=1e-6)
    assert sol.check(ex1) == []


@pytest.mark.parametrize("s, pattern", [
    ((0.2, 0.2), "S| R |S| R"),
    ((0.05, 0.05), "S| R |S| R"),
    ((0.3, 0.1), "S| R |S| R"),
    ((0.052, 0.616), "S| R"),
    ((0.1, 0.75), "S| R"),
    ((0.02, 0.6), "S| R"),
])
def test_to_max_example2_patterns(ex2, s, pattern):
    sol = rm.solve_rp_to_max(ex2, s)
    assert sol.pattern == pattern
    assert sol.check(ex2) == []
    for seg in sol.segments:
        if seg.kind == "rarefaction":
            assert seg.speed_lo <= seg.speed_hi


def test_five_part_speed_ordering(ex2):
    sol = rm.solve_rp_to_max(ex2, (0.2, 0.2))
    sh1, rar, sh2, _ = sol.segments
    assert sh1.speed_lo <= rar.speed_lo <= rar.speed_hi <= sh2.speed_lo
    assert len(sol.middle_states) == 3


def test_unresolved_transition_reported(ex2):
    with pytest.raises(rm.UnresolvedStructure):
        rm.solve_rp_to_max(ex2, (0.054, 0.612))


def test_solution_serialises(ex2):
    d = rm.solve_rp_to_max(ex2, (0.2, 0.2)).to_dict()
    assert d["pattern"] == "S| R |S| R" and d["crossings"] == ["B"]
    assert len(d["segments"]) == 4


def test_named_branches(ex1, ex2):
    assert set(rm.named_inflection_branches(ex1)) == {"I"}
    named = rm.named_inflection_branches(ex2)
    assert set(named) == {"B", "T"}
    assert named["B"][:, 1].min() < named["T"][:, 1].min()


# ---------------------------------------------------------------- double contact

@pytest.fixture(scope="module")
def dc_example2():
    return rm.double_contact_locus(mc.preset("example2"))


def test_double_contact_example2(ex2, dc_example2):
    assert len(dc_example2) >= 1
    for curve in dc_example2:
        assert curve.max_residual(ex2) <= 1e-10
        lam_b = sp.eigenvalues(ex2, curve.b_points.T)[0]
        lam_c = sp.eigenvalues(ex2, curve.c_points.T)[0]
        assert np.allclose(lam_b, curve.speeds, atol=1e-9)
        assert np.allclose(lam_c, curve.speeds, atol=1e-9)
        for b, c, sigma in zip(curve.b_points[::20], curve.c_points[::20], curve.speeds[::20]):
            assert np.max(np.abs(hg.rh_residual(ex2, b, c, sigma))) <= 1e-10
        # genuine pairs inside the phase space, not the merged diagonal
        assert np.all(np.hypot(*(curve.c_points - curve.b_points).T) > 1e-3)
        for pts in (curve.b_points, curve.c_points):
            assert np.all(pts >= 0.0) and np.all(mc.free_volume(ex2, pts.T) >= 0.0)


def test_double_contact_example1_empty(ex1):
    assert rm.double_contact_locus(ex1) == []


@pytest.mark.parametrize("name", ["example1", "example2"])
@settings(max_examples=15)
@given(s=st.tuples(st.floats(0.01, 0.95), st.floats(0.01, 0.95)).filter(lambda s: s[0] + s[1] < 0.97))
def test_to_max_consistent_or_unresolved(name, s):
    p = mc.preset(name)
    try:
        sol = rm.solve_rp_to_max(p, s)
    except rm.UnresolvedStructure:
        return
    assert sol.check(p) == []
    assert mc.free_volume(p, sol.segments[-1].right) <= 1e-6
