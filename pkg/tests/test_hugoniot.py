import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bidisperse import hugoniot as hg
from bidisperse import model as mc
from bidisperse import spectral as sp

O = mc.ORIGIN
PRESETS = ["example1", "example2"]


def test_rh_residual_examples(ex1):
    s = (0.0, 0.3)
    sigma = mc.absolute_velocity(ex1, s, 2)
    assert np.max(np.abs(hg.rh_residual(ex1, O, s, sigma))) <= 1e-15
    assert np.all(hg.rh_residual(ex1, (0.2, 0.1), (0.2, 0.1), 3.7) == 0.0)
    assert np.max(np.abs(hg.rh_residual(ex1, (0.2, 0.3), (0.3, 0.2), 0.0625))) <= 1e-12


def test_shock_speed_examples(ex1):
    assert hg.shock_speed(ex1, O, (0.3, 0.0)) == pytest.approx(0.7 ** 4, abs=1e-14)
    assert hg.shock_speed(ex1, O, (0.2, 0.25)) is None
    assert hg.shock_speed(ex1, O, (0.25, 0.25)) == pytest.approx(0.0625, abs=1e-14)


def test_derived_constants():
    p1, p2 = mc.preset("example1"), mc.preset("example2")
    assert hg.phi_star(p1) == pytest.approx(0.5, abs=1e-15)
    assert hg.phi_star(p2) == pytest.approx(1 - 0.5 ** (1 / 3.1), abs=1e-15)
    assert hg.phi_sigma(p1) == pytest.approx(1 - 2 ** -0.25, abs=1e-15)
    assert hg.phi_sigma(p2) == pytest.approx(1 - 0.5 ** (1 / 4.6), abs=1e-15)
    assert hg.contact_speed(p1) == pytest.approx(0.0625, abs=1e-15)
    near = mc.ModelParams(1.0, 1.0 - 1e-9, 4.0, 3.0)
    assert hg.phi_star(near) < 1e-8


def test_origin_locus_structure(ex1):
    branches = {b.kind: b for b in hg.origin_locus(ex1, 200)}
    star = branches["contact_star"]
    assert np.allclose(star.points.sum(axis=1), 0.5, atol=1e-15)
    assert np.allclose(star.speeds, 0.0625, atol=1e-14)
    assert np.all(branches["contact_max"].speeds == 0.0)
    axis1 = branches["axis1"]
    k = np.argmin(axis1.points[:, 0])
    assert axis1.speeds[k] == pytest.approx(ex1.v_inf_1, abs=1e-5)


@pytest.mark.parametrize("name", PRESETS)
def test_origin_locus_residuals(name):
    p = mc.preset(name)
    for b in hg.origin_locus(p, 200):
        assert b.max_residual(p) <= 1e-10


@pytest.mark.parametrize("name", PRESETS)
def test_axis_speeds_decreasing(name):
    p = mc.preset(name)
    phi = np.linspace(1e-6, 1.0, 1000)
    for axis in (1, 2):
        pts = [(x, 0.0) if axis == 1 else (0.0, x) for x in phi]
        sig = np.array([hg.origin_speed(p, s) for s in pts])
        assert np.all(np.diff(sig) < 0)


@pytest.mark.parametrize("name", PRESETS)
def test_axis_speed_bounds(name):
    p = mc.preset(name)
    lam2_o = sp.eigenvalues(p, O)[1]
    for phi in np.linspace(0.01, 0.99, 99):
        for s in ((phi, 0.0), (0.0, phi)):
            sigma = hg.origin_speed(p, s)
            la, _ = sp.edge_eigenvalues(p, s)
            assert sigma < lam2_o
            assert la < sigma


@pytest.mark.parametrize("name", PRESETS)
@pytest.mark.parametrize("axis", [1, 2])
def test_lambda_b_switch_at_phi_star(name, axis):
    from scipy.optimize import brentq

    p = mc.preset(name)
    def gap(phi):
        s = (phi, 0.0) if axis == 1 else (0.0, phi)
        return sp.edge_eigenvalues(p, s)[1] - hg.origin_speed(p, s)
    root = brentq(gap, 1e-3, 0.99, xtol=1e-14)
    assert root == pytest.approx(hg.phi_star(p), abs=1e-10)


def test_classify_examples(ex1):
    c = hg.classify_shock(ex1, O, (0.3, 0.0))
    assert c.kind == hg.OVERCOMPRESSIVE and c.flags == ""
    c = hg.classify_shock(ex1, O, (0.25, 0.25))
    assert c.kind == hg.LAX1 and c.right_char_2
    c = hg.classify_shock(ex1, O, (0.0, 0.3))
    assert c.kind == hg.LAX1 and c.flags == ""


def test_classify_origin_segment_examples(ex1):
    assert hg.classify_origin_segment(ex1, (0.1, 0.0)).kind == hg.LAX2
    assert hg.classify_origin_segment(ex1, (0.0, 0.7)).kind == hg.OVERCOMPRESSIVE
    c = hg.classify_origin_segment(ex1, (0.5, 0.5))
    assert c.kind == hg.LAX1 and c.right_char_1 and c.right_char_2
    with pytest.raises(ValueError):
        hg.classify_origin_segment(ex1, (0.2, 0.2))


def test_classify_rejects_off_locus(ex1):
    with pytest.raises(ValueError):
        hg.classify_shock(ex1, O, (0.2, 0.25))


def _lax_oracle(p, sm, sp_, sigma):
    """Plain-inequality restatement of the admissibility conditions."""
    lm, lp = sp.eigenvalues(p, sm), sp.eigenvalues(p, sp_)
    if lp[0] < sigma < lm[0] and sigma < lp[1] and sigma < lm[1]:
        return hg.LAX1
    if lp[1] < sigma < lm[1] and lp[0] < sigma and lm[0] < sigma:
        return hg.LAX2
    if lp[0] < sigma < lm[0] and lp[1] < sigma < lm[1]:
        return hg.OVERCOMPRESSIVE
    return hg.INADMISSIBLE


@pytest.mark.parametrize("name", PRESETS)
@given(phi=st.floats(0.001, 0.999), axis=st.sampled_from([1, 2]))
def test_classification_matches_inequalities_on_axes(name, phi, axis):
    p = mc.preset(name)
    s = (phi, 0.0) if axis == 1 else (0.0, phi)
    sigma = hg.origin_speed(p, s)
    rt = 1e-8 * max(1.0, abs(sigma))
    scale = [abs(sigma - x) for x in (*sp.eigenvalues(p, s), *sp.eigenvalues(p, O))]
    if min(scale) > 10 * rt:
        assert hg.classify_shock(p, O, s, sigma).kind == _lax_oracle(p, O, s, sigma)


@pytest.mark.parametrize("name", PRESETS)
def test_shock_order_on_axes(name):
    p = mc.preset(name)
    star = hg.phi_star(p)
    for phi in np.linspace(star + 0.01, 0.99, 40):
        lam = sp.eigenvalues(p, (phi, 0.0))
        assert lam[0] < hg.origin_speed(p, (phi, 0.0)) < lam[1]
    for phi in np.linspace(0.01, star - 0.01, 40):
        lam = sp.eigenvalues(p, (0.0, phi))
        assert lam[0] < hg.origin_speed(p, (0.0, phi)) < lam[1]


def test_generic_locus_recovers_origin_branches(ex1):
    generic = np.vstack([b.points for b in hg.generic_locus(ex1, O, resolution=200)])
    for b in hg.origin_locus(ex1, 50):
        for q in b.points:
            assert np.min(np.hypot(*(generic - q).T)) < 0.01


def test_generic_locus_contains_contact_segment(ex1):
    pts = np.vstack([b.points for b in hg.generic_locus(ex1, (0.2, 0.3))])
    for t in np.linspace(0.02, 0.48, 24):
        assert np.min(np.hypot(*(pts - (t, 0.5 - t)).T)) < 0.01
    for b in hg.generic_locus(ex1, (0.2, 0.3)):
        assert b.max_residual(ex1) <= 1e-10


def test_generic_locus_base_point(ex1):
    assert np.all(hg.rh_residual(ex1, (0.2, 0.3), (0.2, 0.3), 0.0) == 0.0)
    assert abs(hg.jump_determinant(ex1, (0.2, 0.3), (0.2, 0.3))) == 0.0


def test_triple_shock_examples(ex1):
    assert hg.triple_shock_check(ex1, O, (0.2, 0.3), (0.4, 0.1))
    assert hg.triple_shock_check(ex1, O, (0.3, 0.7), (0.7, 0.3))
    with pytest.raises(ValueError, match="collinear"):
        hg.triple_shock_check(ex1, O, (0.1, 0.0), (0.3, 0.0))


@given(u=st.floats(0.0, 0.5), v=st.floats(0.0, 0.5))
def test_contact_line_mutual_locus(u, v):
    p = mc.preset("example1")
    a, b = (u, 0.5 - u), (v, 0.5 - v)
    assert np.max(np.abs(hg.rh_residual(p, a, b, 0.0625))) <= 1e-12


def test_shock_class_flags_string():
    c = hg.ShockClass(hg.LAX1, left_char_1=True, right_char_2=True)
    assert c.flags == "L1;R2"
    assert math.isclose(hg.CHAR_RTOL, 1e-8)
