"""Rankine-Hugoniot jumps, Lax / over-compressive classification and Hugoniot loci."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import model as mc
from . import spectral as sp
from ._contour import refined_contours
from .model import ModelParams, State

LAX1 = "Lax1"
LAX2 = "Lax2"
OVERCOMPRESSIVE = "OverCompressive"
INADMISSIBLE = "Inadmissible"

CHAR_RTOL = 1e-8
THRESHOLD_TOL = 1e-10
RH_TOL = 1e-10

BRANCH_KINDS = ("axis1", "axis2", "contact_star", "contact_max", "numeric")


@dataclass(frozen=True)
class ShockClass:
    kind: str
    left_char_1: bool = False
    left_char_2: bool = False
    right_char_1: bool = False
    right_char_2: bool = False

    @property
    def admissible(self) -> bool:
        return self.kind != INADMISSIBLE

    @property
    def flags(self) -> str:
        """Characteristic equalities as ``L1;R2``-style tokens (empty if none)."""
        names = [("L1", self.left_char_1), ("L2", self.left_char_2),
                 ("R1", self.right_char_1), ("R2", self.right_char_2)]
        return ";".join(n for n, on in names if on)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "left_char_1": self.left_char_1,
                "left_char_2": self.left_char_2, "right_char_1": self.right_char_1,
                "right_char_2": self.right_char_2}


def _vec(s) -> np.ndarray:
    return np.array([float(s[0]), float(s[1])])


def rh_residual(p: ModelParams, s_minus, s_plus, sigma: float) -> np.ndarray:
    """``f(s_plus) - f(s_minus) - sigma (s_plus - s_minus)``."""
    a, b = _vec(s_minus), _vec(s_plus)
    return mc.flux_array(p, b) - mc.flux_array(p, a) - sigma * (b - a)


def shock_speed(p: ModelParams, s_minus, s_plus, tol: float = RH_TOL) -> float | None:
    """Least-squares jump speed, or None when the pair violates Rankine-Hugoniot.

    The residual test is absolute, so pairs closer than about ``sqrt(tol)``
    always pass.
    """
    a, b = _vec(s_minus), _vec(s_plus)
    d = b - a
    nd = float(d @ d)
    if nd == 0.0:
        raise ValueError("shock speed is undefined for identical states")
    df = mc.flux_array(p, b) - mc.flux_array(p, a)
    sigma = float(df @ d) / nd
    if np.linalg.norm(df - sigma * d) > tol:
        return None
    return sigma


def phi_star(p: ModelParams) -> float:
    """Total concentration where the two slip velocities coincide."""
    return 1.0 - (p.v_inf_2 / p.v_inf_1) ** (1.0 / (p.n_1 - p.n_2))


def phi_sigma(p: ModelParams) -> float:
    """Concentration on the phi_1 axis whose jump speed from O equals ``lambda_1(O)``."""
    return 1.0 - (p.v_inf_2 / p.v_inf_1) ** (1.0 / p.n_1)


def contact_speed(p: ModelParams) -> float:
    """Common jump speed along the line ``phi = phi*``."""
    return p.v_inf_1 * (1.0 - phi_star(p)) ** p.n_1


def classify_shock(p: ModelParams, s_minus, s_plus, sigma: float | None = None,
                   rtol: float = CHAR_RTOL) -> ShockClass:
    """Admissibility class of the jump ``s_minus -> s_plus``.

    ``<=`` is tested with slack ``rtol * max(1, |sigma|)`` and strict ``<``
    with the same margin the other way; the Lax tests run before the
    over-compressive one.
    """
    if sigma is None:
        sigma = shock_speed(p, s_minus, s_plus)
        if sigma is None:
            raise ValueError(f"{tuple(s_minus)} and {tuple(s_plus)} are not on a common Hugoniot locus")
    lm1, lm2 = sp.eigenvalues(p, s_minus)
    lp1, lp2 = sp.eigenvalues(p, s_plus)
    tol = rtol * max(1.0, abs(sigma))

    def le(a, b):
        return a <= b + tol

    def lt(a, b):
        return a < b - tol

    flags = dict(left_char_1=abs(sigma - lm1) <= tol, left_char_2=abs(sigma - lm2) <= tol,
                 right_char_1=abs(sigma - lp1) <= tol, right_char_2=abs(sigma - lp2) <= tol)
    if le(lp1, sigma) and le(sigma, lm1) and le(sigma, lp2):
        kind = LAX1
    elif le(lp2, sigma) and le(sigma, lm2) and le(lm1, sigma):
        kind = LAX2
    elif lt(lp2, sigma) and lt(sigma, lm1):
        kind = OVERCOMPRESSIVE
    else:
        kind = INADMISSIBLE
    return ShockClass(kind, **flags)


def origin_branch_of(p: ModelParams, s, tol: float = THRESHOLD_TOL) -> str:
    """Which branch of the Hugoniot locus of O contains ``s``.

    Raises ValueError for O itself and for states off the locus.
    """
    phi1, phi2 = float(s[0]), float(s[1])
    if abs(phi1) <= tol and abs(phi2) <= tol:
        raise ValueError("the origin is the base state of its own locus")
    if abs(float(mc.free_volume(p, s))) <= tol:
        return "contact_max"
    if abs(phi1 + phi2 - phi_star(p)) <= tol:
        return "contact_star"
    if abs(phi2) <= tol:
        return "axis1"
    if abs(phi1) <= tol:
        return "axis2"
    raise ValueError(f"state {(phi1, phi2)} is not on the Hugoniot locus of the origin")


def origin_speed(p: ModelParams, s, tol: float = THRESHOLD_TOL) -> float:
    """Jump speed from O to a state of its locus, from the closed forms."""
    branch = origin_branch_of(p, s, tol)
    if branch == "contact_max":
        return 0.0
    if branch == "contact_star":
        return contact_speed(p)
    return float(mc.absolute_velocity(p, s, 1 if branch == "axis1" else 2))


def classify_origin_segment(p: ModelParams, s, tol: float = THRESHOLD_TOL) -> ShockClass:
    """Class of the jump from O to ``s`` from the closed-form thresholds.

    States within ``tol`` of ``phi_sigma``, ``phi*`` or the packing line get
    the characteristic boundary label.
    """
    branch = origin_branch_of(p, s, tol)
    phi = float(s[0]) + float(s[1])
    star = phi_star(p)
    if branch == "contact_max":
        return ShockClass(LAX1, right_char_1=True, right_char_2=True)
    if branch == "contact_star":
        return ShockClass(LAX1, right_char_2=True)
    if branch == "axis1":
        sig = phi_sigma(p)
        if abs(phi - sig) <= tol:
            return ShockClass(LAX2, left_char_1=True)
        if phi < sig:
            return ShockClass(LAX2)
        return ShockClass(OVERCOMPRESSIVE) if phi < star else ShockClass(LAX1)
    return ShockClass(LAX1) if phi < star else ShockClass(OVERCOMPRESSIVE)


@dataclass
class LocusBranch:
    kind: str
    base: State
    points: np.ndarray
    speeds: np.ndarray
    classes: list[ShockClass] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.points)

    def max_residual(self, p: ModelParams) -> float:
        if len(self.points) == 0:
            return 0.0
        return max(float(np.linalg.norm(rh_residual(p, self.base, pt, sg)))
                   for pt, sg in zip(self.points, self.speeds))

    def rows(self):
        """``(phi1, phi2, sigma, class, char_flags)`` per point."""
        for pt, sg, c in zip(self.points, self.speeds, self.classes):
            yield float(pt[0]), float(pt[1]), float(sg), c.kind, c.flags


def _axis_samples(n: int, extra: list[float], phi_max: float) -> np.ndarray:
    start = 1e-6
    t = np.concatenate([np.linspace(start, phi_max, n), extra])
    return np.unique(t[(t >= start) & (t <= phi_max)])


def origin_locus(p: ModelParams, n: int = 200) -> list[LocusBranch]:
    """The four branches of the Hugoniot locus of O, sampled with closed-form speeds.

    Axis samples start at 1e-6 (speed is 0/0 at O) and include the threshold
    states.
    """
    star, sig = phi_star(p), phi_sigma(p)
    base = mc.ORIGIN
    branches = []
    for kind, extra in (("axis1", [sig, star]), ("axis2", [star])):
        t = _axis_samples(n, extra, p.phi_max)
        zeros = np.zeros_like(t)
        pts = np.column_stack([t, zeros] if kind == "axis1" else [zeros, t])
        speeds = np.asarray(mc.absolute_velocity(p, pts.T, 1 if kind == "axis1" else 2), dtype=float)
        branches.append(LocusBranch(kind, base, pts, speeds))
    t = np.linspace(0.0, star, n)
    branches.append(LocusBranch("contact_star", base, np.column_stack([t, star - t]),
                                np.full(n, contact_speed(p))))
    t = np.linspace(0.0, p.phi_max, n)
    branches.append(LocusBranch("contact_max", base, np.column_stack([t, p.phi_max - t]),
                                np.zeros(n)))
    for b in branches:
        b.classes = [classify_origin_segment(p, pt) for pt in b.points]
    return branches


def jump_determinant(p: ModelParams, base, s):
    """``det[f(s) - f(base), s - base]``; zero exactly on the Hugoniot locus of ``base``."""
    x0, y0 = float(base[0]), float(base[1])
    f10, f20 = mc.flux(p, (x0, y0))
    phi1, phi2 = mc._split(s)
    f1, f2 = mc.flux(p, s)
    return mc._out((np.asarray(f1) - f10) * (phi2 - y0) - (np.asarray(f2) - f20) * (phi1 - x0))


def jump_determinant_gradient(p: ModelParams, base, s) -> np.ndarray:
    """Analytic gradient of :func:`jump_determinant` at a single interior state."""
    b, x = _vec(base), _vec(s)
    d = x - b
    df = mc.flux_array(p, x) - mc.flux_array(p, b)
    jac = sp.jacobian(p, x)
    return np.array([jac.j11 * d[1] - jac.j21 * d[0] - df[1],
                     jac.j12 * d[1] + df[0] - jac.j22 * d[0]])


def _decorate(p: ModelParams, kind: str, base: State, pts: np.ndarray) -> LocusBranch | None:
    keep, speeds = [], []
    for pt in pts:
        if np.hypot(*(pt - base.as_array())) < 1e-9:
            continue
        sg = shock_speed(p, base, pt)
        if sg is not None:
            keep.append(pt)
            speeds.append(sg)
    if not keep:
        return None
    keep = np.array(keep)
    classes = [classify_shock(p, base, pt, sg) for pt, sg in zip(keep, speeds)]
    return LocusBranch(kind, base, keep, np.array(speeds), classes)


def _edge_points(p: ModelParams, m: int) -> dict[str, np.ndarray]:
    t = np.linspace(0.0, p.phi_max, m)
    z = np.zeros_like(t)
    return {"axis1": np.column_stack([t, z]), "axis2": np.column_stack([z, t]),
            "contact_max": np.column_stack([t, p.phi_max - t])}


def generic_locus(p: ModelParams, base, window=(0.0, 1.0, 0.0, 1.0),
                  resolution: int = 200) -> list[LocusBranch]:
    """Hugoniot locus of ``base`` inside ``window`` as a list of branches.

    Interior branches are zero contours of :func:`jump_determinant` on a
    cell-centred grid restricted to the phase space; edges of the triangle on
    which the determinant vanishes identically are added as whole branches.
    """
    base = State(float(base[0]), float(base[1]))
    if not mc.in_phase_space(p, base):
        raise ValueError(f"base state {tuple(base)} is outside the phase space")
    x0, x1, y0, y1 = (float(w) for w in window)
    x0, y0 = max(x0, 0.0), max(y0, 0.0)
    x1, y1 = min(x1, p.phi_max), min(y1, p.phi_max)
    if x1 <= x0 or y1 <= y0:
        return []
    out = []
    xs = x0 + (np.arange(resolution) + 0.5) * (x1 - x0) / resolution
    ys = y0 + (np.arange(resolution) + 0.5) * (y1 - y0) / resolution
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    inside = mc.free_volume(p, (X, Y)) >= 0.0
    vals = np.where(inside, jump_determinant(p, base, (X, Y)), np.nan)

    def func(pt):
        return float(jump_determinant(p, base, pt))

    for c in refined_contours(func, xs, ys, values=vals, mask=inside):
        b = _decorate(p, "numeric", base, c)
        if b is not None:
            out.append(b)
    scale = max(1.0, float(np.max(np.abs(vals[np.isfinite(vals)]), initial=0.0)))
    for kind, pts in _edge_points(p, resolution + 1).items():
        g = np.asarray(jump_determinant(p, base, pts.T))
        if np.max(np.abs(g)) > 1e-13 * scale:
            continue
        lo, hi = np.array([x0, y0]), np.array([x1, y1])
        sel = np.all((pts >= lo - 1e-15) & (pts <= hi + 1e-15), axis=1)
        b = _decorate(p, kind, base, pts[sel])
        if b is not None:
            out.append(b)
    return out


def _newton_onto_locus(p: ModelParams, base, guess: np.ndarray, tangent: np.ndarray,
                       iters: int = 20, tol: float = 1e-15):
    """Correct ``guess`` onto the locus, moving orthogonally to ``tangent``."""
    x = guess.copy()
    for _ in range(iters):
        if not float(mc.free_volume(p, x)) > 0.0:
            return None
        g = float(jump_determinant(p, base, x))
        grad = jump_determinant_gradient(p, base, x)
        m = np.array([grad, tangent])
        try:
            dx = np.linalg.solve(m, np.array([-g, 0.0]))
        except np.linalg.LinAlgError:
            return None
        x = x + dx
        if np.linalg.norm(dx) <= 1e-15 + 1e-13 * np.linalg.norm(x) and abs(g) <= tol:
            return x
    if not float(mc.free_volume(p, x)) > 0.0:
        return None
    g = float(jump_determinant(p, base, x))
    scale = max(1e-300, float(np.linalg.norm(jump_determinant_gradient(p, base, x))))
    return x if abs(g) / scale <= 1e-12 else None


@dataclass
class TracedBranch:
    """Ordered points of one locus branch leaving ``base``, by arclength ``s``."""

    base: State
    points: np.ndarray
    arclength: np.ndarray
    stop_reason: str

    def speeds(self, p: ModelParams) -> np.ndarray:
        b = self.base.as_array()
        out = []
        for pt in self.points:
            d = pt - b
            df = mc.flux_array(p, pt) - mc.flux_array(p, b)
            out.append(float(df @ d) / float(d @ d))
        return np.array(out)


def trace_branch(p: ModelParams, base, direction, h: float = 2e-3, start: float = 1e-4,
                 max_length: float = 4.0, h_min: float = 1e-9, stop=None,
                 phase_tol: float = 1e-12) -> TracedBranch:
    """Follow the branch of the Hugoniot locus of ``base`` that leaves in ``direction``.

    Pseudo-arclength continuation of ``jump_determinant = 0`` with a secant
    predictor and a Newton corrector. The branch ends on leaving the phase
    space, on returning to ``base``, after ``max_length``, or when
    ``stop(point)`` is true (that point is kept).
    """
    b = _vec(base)
    d = np.asarray(direction, float)
    d = d / np.linalg.norm(d)
    guess = b + start * d
    first = _newton_onto_locus(p, b, guess, d)
    if first is None:
        raise ArithmeticError("could not leave the base state along the requested direction")
    pts = [first]
    arc = [float(np.linalg.norm(first - b))]
    tangent = d
    reason = "max_length"
    step = h
    while arc[-1] < max_length:
        x = pts[-1]
        grad = jump_determinant_gradient(p, b, x)
        t = np.array([-grad[1], grad[0]])
        nrm = np.linalg.norm(t)
        if nrm == 0.0:
            reason = "singular"
            break
        t /= nrm
        if t @ tangent < 0:
            t = -t
        nxt = None
        while step >= h_min:
            cand = _newton_onto_locus(p, b, x + step * t, t)
            if cand is not None:
                move = cand - x
                dist = float(np.linalg.norm(move))
                if 0.3 * step < dist < 2.0 * step and (move / dist) @ t > 0.9:
                    nxt = cand
                    break
            step *= 0.5
        if nxt is None:
            reason = "step_underflow"
            break
        if not mc.in_phase_space(p, nxt, phase_tol):
            reason = "left_phase_space"
            break
        tangent = (nxt - x) / np.linalg.norm(nxt - x)
        pts.append(nxt)
        arc.append(arc[-1] + float(np.linalg.norm(nxt - x)))
        step = min(h, 1.5 * step)
        if len(pts) > 3 and np.linalg.norm(nxt - b) < 0.5 * start:
            reason = "returned_to_base"
            break
        if stop is not None and stop(nxt):
            reason = "stopped"
            break
    return TracedBranch(State(*b), np.array(pts), np.array(arc), reason)


def triple_shock_check(p: ModelParams, s1, s2, s3, tol: float = 1e-9) -> bool:
    """True when the three pairwise jump speeds agree within ``tol``.

    Raises ValueError for (near) collinear triples, where equal speeds are not
    implied.
    """
    a, b, c = _vec(s1), _vec(s2), _vec(s3)
    area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    scale = max(np.linalg.norm(b - a), np.linalg.norm(c - a), np.linalg.norm(c - b))
    if abs(area) <= 1e-12 * max(scale * scale, 1e-300):
        raise ValueError("triple is collinear; the equal-speed rule does not apply")
    speeds = [shock_speed(p, a, b), shock_speed(p, b, c), shock_speed(p, a, c)]
    if any(sg is None for sg in speeds):
        return False
    return max(speeds) - min(speeds) <= tol
