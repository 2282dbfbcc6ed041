"""Wave-curve Riemann solvers: RP(O, s) by two shocks and RP(s, packing) by 1-waves."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

from . import hugoniot as hg
from . import model as mc
from . import spectral as sp
from .hugoniot import ShockClass
from .model import ModelParams, State

SPEED_TOL = 1e-9
PACKING_STOP = 1e-9
AXIS_TOL = 1e-14
SNAP_RADIUS = 0.02
INDICATOR_FLOOR = 1e-7


class UnresolvedStructure(RuntimeError):
    """The construction reached a configuration it does not cover."""


class MiddleStateError(RuntimeError):
    """No admissible middle state was found on the expected axis."""


@dataclass
class WaveSegment:
    family: int
    kind: str
    left: State
    right: State
    speed_lo: float
    speed_hi: float
    shock_class: ShockClass | None = None
    char_left: bool = False
    char_right: bool = False
    path: np.ndarray | None = None
    path_speeds: np.ndarray | None = None

    def to_dict(self) -> dict:
        out = {
            "family": self.family,
            "kind": self.kind,
            "left": list(self.left),
            "right": list(self.right),
            "speed_lo": self.speed_lo,
            "speed_hi": self.speed_hi,
            "char_left": self.char_left,
            "char_right": self.char_right,
        }
        if self.shock_class is not None:
            out["shock_class"] = self.shock_class.to_dict()
        if self.path is not None:
            out["path"] = [[float(a), float(b)] for a, b in self.path]
        return out


@dataclass
class WaveCurveSolution:
    left_datum: State
    right_datum: State
    segments: list[WaveSegment] = field(default_factory=list)
    structure: str = ""
    notes: list[str] = field(default_factory=list)
    crossings: list[str] = field(default_factory=list)

    @property
    def middle_states(self) -> list[State]:
        return [seg.right for seg in self.segments[:-1]]

    @property
    def pattern(self) -> str:
        """Wave sequence such as ``S| R |S| R`` ("|" marks a characteristic side)."""
        parts = []
        for seg in self.segments:
            tag = "S" if seg.kind in ("shock", "contact") else "R"
            parts.append(("|" if seg.char_left else "") + tag + ("|" if seg.char_right else ""))
        return " ".join(parts)

    def check(self, p: ModelParams, tol: float = SPEED_TOL) -> list[str]:
        """Invariant violations (empty when the solution is consistent)."""
        problems = []
        for k, seg in enumerate(self.segments):
            if k and not np.allclose(self.segments[k - 1].right, seg.left, rtol=0, atol=1e-12):
                problems.append(f"segment {k} does not start where segment {k - 1} ends")
            if k and self.segments[k - 1].speed_hi > seg.speed_lo + tol:
                problems.append(f"speed decreases between segments {k - 1} and {k}")
            if seg.kind in ("shock", "contact"):
                res = np.linalg.norm(hg.rh_residual(p, seg.left, seg.right, seg.speed_lo))
                if res > 1e-10:
                    problems.append(f"segment {k} violates Rankine-Hugoniot ({res:.3e})")
                if seg.shock_class is not None:
                    again = hg.classify_shock(p, seg.left, seg.right, seg.speed_lo)
                    if again.kind != seg.shock_class.kind:
                        problems.append(f"segment {k} reclassifies as {again.kind}")
            elif seg.path_speeds is not None and np.any(np.diff(seg.path_speeds) < -tol):
                problems.append(f"segment {k}: characteristic speed not increasing")
        if self.segments:
            if not np.allclose(self.segments[0].left, self.left_datum, atol=1e-12, rtol=0):
                problems.append("first segment does not start at the left datum")
            if not np.allclose(self.segments[-1].right, self.right_datum, atol=1e-12, rtol=0):
                problems.append("last segment does not end at the right datum")
        return problems

    def to_dict(self) -> dict:
        return {
            "left_datum": list(self.left_datum),
            "right_datum": list(self.right_datum),
            "structure": self.structure,
            "pattern": self.pattern,
            "middle_states": [list(m) for m in self.middle_states],
            "segments": [seg.to_dict() for seg in self.segments],
            "notes": list(self.notes),
            "crossings": list(self.crossings),
        }


DX_MINUS = "Dx_minus"
DX_PLUS = "Dx_plus"
ON_CONTACT = "on_contact"


def region_of(p: ModelParams, s, tol: float = hg.THRESHOLD_TOL) -> str:
    """Side of the contact line ``phi = phi*`` on which ``s`` lies."""
    phi = float(s[0]) + float(s[1])
    star = hg.phi_star(p)
    if abs(phi - star) <= tol:
        return ON_CONTACT
    return DX_MINUS if phi < star else DX_PLUS


# ---------------------------------------------------------------- rarefactions

@dataclass
class RarefactionCurve:
    points: np.ndarray
    speeds: np.ndarray
    stop_reason: str
    direction: float
    dense: object = None
    length: float = 0.0

    @property
    def end(self) -> State:
        return State(float(self.points[-1, 0]), float(self.points[-1, 1]))

    def at(self, tau: float) -> np.ndarray:
        """State at arclength ``tau`` from the start."""
        if self.dense is None:
            return self.points[-1].copy()
        return np.asarray(self.dense(tau), dtype=float)


def _on_axis(s) -> int:
    if abs(float(s[1])) <= AXIS_TOL:
        return 1
    if abs(float(s[0])) <= AXIS_TOL:
        return 2
    return 0


def _clamp_inside(p: ModelParams, x: np.ndarray, margin: float = 1e-13) -> np.ndarray:
    """Pull a trial point (e.g. a Runge-Kutta stage) back into the phase space."""
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    if float(mc.free_volume(p, x)) < margin:
        x = x * ((p.phi_max - margin) / float(x.sum()))
    return x


def _unit_field(p: ModelParams, x, family: int, sign: float, axis: int) -> np.ndarray:
    x = _clamp_inside(p, x)
    r = sp.oriented_eigenvectors(p, (x[0], x[1]), family) * sign
    if axis == 1:
        r = np.array([r[0], 0.0])
    elif axis == 2:
        r = np.array([0.0, r[1]])
    n = np.hypot(*r)
    return r / n if n > 0 else r


def rarefaction_integrate(p: ModelParams, s0, family: int = 1, direction: float | None = None,
                          stop=None, max_length: float = 4.0, rtol: float = 1e-10,
                          packing_stop: float = PACKING_STOP,
                          stop_at_inflection: bool = True) -> RarefactionCurve:
    """Integral curve of ``r_family`` from ``s0`` in the direction of increasing speed.

    Arclength parametrization integrated by an adaptive Runge-Kutta method.
    Stops on the packing line (free volume below ``packing_stop``), on leaving
    the phase space, at an inflection (genuine nonlinearity lost), at an
    optional event ``stop(tau, x) = 0`` or after ``max_length``. A start on an
    invariant axis stays on that axis whenever the eigenvector is tangent to
    it. Inflections next to the packing line are screened by
    :func:`spectral.inflection_ignored`.
    """
    x0 = np.array([float(s0[0]), float(s0[1])])
    if not mc.in_phase_space(p, x0):
        raise ValueError(f"state {tuple(x0)} is outside the phase space")
    lam = sp.eigenvalues(p, x0)
    if sp.is_coincident(*lam):
        raise sp.DegenerateEigenvector(f"state {tuple(x0)} is a coincidence point")
    axis = _on_axis(x0)
    if axis:
        r = sp.oriented_eigenvectors(p, x0, family)
        normal = r[1] if axis == 1 else r[0]
        if abs(normal) > 1e-10:
            axis = 0
    g0 = float(sp.inflection_indicator(p, x0, family))
    if direction is None:
        direction = 1.0 if g0 >= 0 else -1.0
    sign = float(np.sign(direction)) or 1.0
    if g0 * sign < -1e-12:
        raise ValueError("characteristic speed decreases in the requested direction")
    g_sign = math.copysign(1.0, g0 * sign) if g0 != 0 else 1.0

    def rhs(_, x):
        return _unit_field(p, x, family, sign, axis)

    def packing(_, x):
        return float(mc.free_volume(p, x)) - packing_stop
    packing.terminal = True
    packing.direction = -1

    def boundary(_, x):
        return min(float(x[0]), float(x[1])) + 1e-12 if not axis else 1.0
    boundary.terminal = True
    boundary.direction = -1

    def inflection(_, x):
        x = _clamp_inside(p, x)
        h = sp.GRAD_STEP
        if sp.inflection_ignored(p, x, family):
            # the coarse screen hides thin layers along the packing line; along a
            # single curve a step scaled to the free volume still resolves them
            free = float(mc.free_volume(p, x))
            if free < INDICATOR_FLOOR:
                return g_sign
            h = min(h, 0.01 * free)
        g = float(sp.inflection_indicator(p, x, family, h=h)) * sign
        return g if np.isfinite(g) else g_sign
    inflection.terminal = True

    events = [packing, boundary]
    if stop_at_inflection:
        events.append(inflection)
    names = ["packing", "left_phase_space", "inflection"]
    if stop is not None:
        def user(tau, x):
            return float(stop(tau, x))
        user.terminal = True
        events.append(user)
        names.append("stopped")
    sol = solve_ivp(rhs, (0.0, max_length), x0, method="DOP853", rtol=rtol, atol=1e-12,
                    max_step=0.01, events=events, dense_output=True)
    reason = "max_length"
    for name, te in zip(names, sol.t_events):
        if len(te):
            reason = name
            break
    if sol.status == -1:
        reason = "integration_failure"
    # the boundary event lands up to 1e-12 outside; emitted states stay in the phase space
    pts = np.maximum(sol.y.T, 0.0)
    if axis == 1:
        pts[:, 1] = 0.0
    elif axis == 2:
        pts[:, 0] = 0.0
    speeds = np.asarray(sp.eigenvalues(p, pts.T)[family - 1], dtype=float)
    return RarefactionCurve(pts, speeds, reason, sign, sol.sol, float(sol.t[-1]))


# ------------------------------------------------------------------- RP(O, s)

def _shock(p: ModelParams, left, right, sigma: float | None = None, family: int | None = None) -> WaveSegment:
    left = State(float(left[0]), float(left[1]))
    right = State(float(right[0]), float(right[1]))
    if sigma is None:
        sigma = hg.shock_speed(p, left, right)
        if sigma is None:
            raise ArithmeticError(f"{tuple(left)} -> {tuple(right)} violates Rankine-Hugoniot")
    cls = hg.classify_shock(p, left, right, sigma)
    if family is None:
        family = 2 if cls.kind == hg.LAX2 else 1
    return WaveSegment(family, "shock", left, right, sigma, sigma, cls,
                       cls.left_char_1 if family == 1 else cls.left_char_2,
                       cls.right_char_1 if family == 1 else cls.right_char_2)


def middle_state_origin(p: ModelParams, s, cells: int = 512) -> State:
    """Middle state of RP(O, s) on the axis selected by the side of ``phi = phi*``.

    Roots in ``phi^M`` of the collinearity determinant of ``s - M`` and
    ``f(s) - f(M)`` are bracketed on ``cells`` intervals and refined by
    Brent's method. Only a root whose jump ``M -> s`` is a 2-Lax shock faster
    than ``O -> M`` is accepted.
    """
    s = State(float(s[0]), float(s[1]))
    region = region_of(p, s)
    if region == ON_CONTACT:
        raise MiddleStateError("states on the contact line need no middle state")
    star = hg.phi_star(p)
    if region == DX_MINUS:
        lo, hi = 0.0, star

        def m_of(t):
            return State(0.0, t)
    else:
        lo, hi = star, p.phi_max

        def m_of(t):
            return State(t, 0.0)

    def g(t):
        return float(hg.jump_determinant(p, s, m_of(t)))

    edges = np.linspace(lo, hi, cells + 1)[1:-1]
    edges = np.concatenate([[lo + 1e-9 * (hi - lo)], edges, [hi - 1e-9 * (hi - lo)]])
    vals = [g(t) for t in edges]
    tried = []
    for a, b, fa, fb in zip(edges[:-1], edges[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            root = float(a)
        elif fa * fb < 0.0:
            root = brentq(g, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        else:
            continue
        m = m_of(root)
        tried.append(root)
        sig2 = hg.shock_speed(p, m, s)
        if sig2 is None:
            continue
        cls = hg.classify_shock(p, m, s, sig2)
        sig1 = hg.origin_speed(p, m)
        if cls.kind == hg.LAX2 and sig1 <= sig2 + SPEED_TOL:
            return m
    raise MiddleStateError(f"no admissible middle state for {tuple(s)} on "
                           f"[{lo:.6g}, {hi:.6g}]; determinant roots tried: {tried}")


def solve_rp_origin(p: ModelParams, s) -> WaveCurveSolution:
    """RP with clear liquid on the left and ``s`` on the right."""
    s = State(float(s[0]), float(s[1]))
    if not mc.in_phase_space(p, s):
        raise ValueError(f"state {tuple(s)} is outside the phase space")
    o = mc.ORIGIN
    sol = WaveCurveSolution(o, s)
    if max(abs(s[0]), abs(s[1])) <= hg.THRESHOLD_TOL:
        sol.structure = "trivial"
        return sol
    try:
        branch = hg.origin_branch_of(p, s)
    except ValueError:
        branch = None
    if branch is not None:
        cls = hg.classify_origin_segment(p, s)
        sigma = hg.origin_speed(p, s)
        family = 2 if cls.kind == hg.LAX2 else 1
        seg = WaveSegment(family, "shock", o, s, sigma, sigma, cls,
                          cls.left_char_1 if family == 1 else cls.left_char_2,
                          cls.right_char_1 if family == 1 else cls.right_char_2)
        sol.segments.append(seg)
        sol.structure = f"single_{cls.kind}"
        if branch == "contact_star":
            sol.notes.append("middle state on the contact line travels with the same speed")
        return sol
    m = middle_state_origin(p, s)
    cls1 = hg.classify_origin_segment(p, m)
    sig1 = hg.origin_speed(p, m)
    sol.segments.append(WaveSegment(1, "shock", o, m, sig1, sig1, cls1,
                                    cls1.left_char_1, cls1.right_char_1))
    sol.segments.append(_shock(p, m, s, family=2))
    sol.structure = "Lax1+Lax2"
    return sol


# ------------------------------------------------------- RP(s, packing line)

class NoCharacteristicShock(RuntimeError):
    """The traced locus branch has no state with the requested characteristic speed."""


def _lambda1(p: ModelParams, x) -> float:
    return float(sp.eigenvalues(p, (x[0], x[1]))[0])


def _jump_speed(p: ModelParams, a: np.ndarray, b: np.ndarray) -> float:
    d = b - a
    df = mc.flux_array(p, b) - mc.flux_array(p, a)
    return float(df @ d) / float(d @ d)


def _root_on_branch(p: ModelParams, base: np.ndarray, branch: hg.TracedBranch, func) -> np.ndarray:
    """First state on ``branch`` where ``func`` turns from positive to non-positive."""
    pts = branch.points
    vals = [func(x) for x in pts]
    for k in range(1, len(pts)):
        if vals[k - 1] > 0.0 and vals[k] <= 0.0:
            a, b = pts[k - 1], pts[k]
            chord = (b - a) / np.linalg.norm(b - a)

            def on_locus(theta):
                x = hg._newton_onto_locus(p, base, a + theta * (b - a), chord)
                return a + theta * (b - a) if x is None else x

            if vals[k] == 0.0:
                return b
            theta = brentq(lambda t: func(on_locus(t)), 0.0, 1.0, xtol=1e-14)
            return on_locus(theta)
    raise NoCharacteristicShock(f"no sign change along the locus of {tuple(base)} "
                                f"(branch ended: {branch.stop_reason})")


def _forward_branch(p: ModelParams, base: np.ndarray, stop) -> hg.TracedBranch:
    r = sp.oriented_eigenvectors(p, base, 1)
    return hg.trace_branch(p, base, r, stop=stop)


def _locus_path(base: np.ndarray, branch: hg.TracedBranch, end: np.ndarray) -> np.ndarray:
    """Traced locus points from ``base`` up to (and ending at) ``end``."""
    pts = branch.points
    k = int(np.argmin(np.hypot(*(pts - end).T)))
    return np.vstack([base, pts[:k], end])


def _char_shock(p: ModelParams, s) -> tuple[State, np.ndarray]:
    base = np.array([float(s[0]), float(s[1])])
    if float(sp.inflection_indicator(p, base, 1)) >= 0.0:
        raise NoCharacteristicShock(f"{tuple(base)} lies on the rarefaction side; no shock is needed")

    def q(x):
        return _jump_speed(p, base, x) - _lambda1(p, x)

    branch = _forward_branch(p, base, stop=lambda x: q(x) <= 0.0)
    m = _root_on_branch(p, base, branch, q)
    return State(float(m[0]), float(m[1])), _locus_path(base, branch, m)


def char_shock_match(p: ModelParams, s, family: int = 1) -> State:
    """State ``M`` on the forward 1-branch of the locus of ``s`` with
    ``sigma(s, M) = lambda_1(M)`` (first such state after leaving ``s``)."""
    if family != 1:
        raise ValueError("only the first family is constructed")
    return _char_shock(p, s)[0]


def left_char_shock(p: ModelParams, b) -> State:
    """State ``C`` on the forward 1-branch of the locus of ``b`` with ``sigma(b, C) = lambda_1(b)``."""
    base = np.array([float(b[0]), float(b[1])])
    lam_b = _lambda1(p, base)

    def q(x):
        return _jump_speed(p, base, x) - lam_b

    branch = _forward_branch(p, base, stop=lambda x: q(x) <= 0.0)
    c = _root_on_branch(p, base, branch, q)
    return State(float(c[0]), float(c[1]))


class _FirstMinimum:
    """Stop predicate: ends a trace once ``q`` has risen to a maximum, fallen to the
    next local minimum and risen again for ``rise`` points."""

    def __init__(self, q, rise: int = 4):
        self.q = q
        self.rise = rise
        self.values: list[float] = []
        self.descending = False
        self.best = math.inf
        self.since = 0

    def __call__(self, x) -> bool:
        v = self.q(x)
        if not self.descending:
            if self.values and v < self.values[-1]:
                self.descending = True
        if self.descending:
            if v < self.best:
                self.best, self.since = v, 0
            else:
                self.since += 1
        self.values.append(v)
        return self.descending and self.since >= self.rise


def _first_minimum(p: ModelParams, base: np.ndarray, q, h: float = 5e-3):
    """Value and location of the first local minimum of ``q`` past its first
    maximum along the forward 1-branch of the locus of ``base``."""
    watch = _FirstMinimum(q)
    branch = hg.trace_branch(p, base, sp.oriented_eigenvectors(p, base, 1), h=h, stop=watch)
    pts = branch.points
    vals = np.array([q(x) for x in pts])
    top = int(np.argmax(vals[: max(1, len(vals) - watch.since)])) if watch.descending else 0
    k = top + int(np.argmin(vals[top:]))
    if k <= top or k == len(pts) - 1:
        return float(vals[k]), pts[k]
    a, m, c = pts[k - 1], pts[k], pts[k + 1]

    def at(theta):
        lo, hi = (a, m) if theta < 0 else (m, c)
        w = theta + 1.0 if theta < 0 else theta
        guess = lo + w * (hi - lo)
        x = hg._newton_onto_locus(p, base, guess, (hi - lo) / np.linalg.norm(hi - lo))
        return guess if x is None else x

    res = minimize_scalar(lambda t: q(at(t)), bounds=(-1.0, 1.0), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.fun), at(res.x)


def _fold_value(p: ModelParams, b: np.ndarray):
    lam_b = _lambda1(p, b)
    return _first_minimum(p, b, lambda x: _jump_speed(p, b, x) - lam_b)


def _polish_double_contact(p: ModelParams, rc: RarefactionCurve, tau: float, c: np.ndarray,
                           iters: int = 30):
    """Newton on ``(tau, C)`` for: C on the locus of B(tau), sigma = lambda_1(B), sigma = lambda_1(C)."""

    def residual(z):
        b = rc.at(z[0])
        x = z[1:]
        d = x - b
        scale = max(float(d @ d), 1e-300)
        sig = _jump_speed(p, b, x)
        return np.array([float(hg.jump_determinant(p, b, x)) / scale,
                         sig - _lambda1(p, b), sig - _lambda1(p, x)])

    z = np.array([tau, c[0], c[1]], dtype=float)
    for _ in range(iters):
        r = residual(z)
        if np.max(np.abs(r)) <= 1e-14:
            break
        jac = np.empty((3, 3))
        for k in range(3):
            step = 1e-7 * max(1.0, abs(z[k]))
            dz = np.zeros(3)
            dz[k] = step
            jac[:, k] = (residual(z + dz) - residual(z - dz)) / (2.0 * step)
        try:
            z = z - np.linalg.solve(jac, r)
        except np.linalg.LinAlgError:
            break
    return z[0], rc.at(z[0]), z[1:], float(np.max(np.abs(residual(z))))


def find_double_contact(p: ModelParams, rc: RarefactionCurve, samples: int = 16,
                        tail: float = 0.01, tol: float = 1e-8):
    """Last state ``B`` on the rarefaction ``rc`` whose left-characteristic shock is
    also right-characteristic at some ``C``. Returns ``(tau, B, C)`` or None.

    Towards the end of ``rc`` (an inflection) the left-characteristic shock exists;
    moving back along ``rc`` it disappears through a tangency, which is the double
    contact. The tangency is bracketed by the sign of the first local minimum of
    ``sigma(B, .) - lambda_1(B)`` along the locus and refined by Newton.
    """
    length = rc.length
    taus = np.linspace(length * (1.0 - tail), 0.0, samples)
    prev = None
    for tau in taus:
        value, at = _fold_value(p, rc.at(tau))
        if prev is not None and prev[1] < 0.0 <= value:
            root = brentq(lambda t: _fold_value(p, rc.at(t))[0], tau, prev[0], xtol=1e-13)
            _, c = _fold_value(p, rc.at(root))
            root, b, c, res = _polish_double_contact(p, rc, root, c)
            if res > tol:
                raise ArithmeticError(f"double contact did not converge (residual {res:.2e})")
            # Newton can slide onto the packing line, where every jump has sigma = lambda_1 = 0
            if not 0.0 <= root <= length or float(mc.free_volume(p, c)) <= 10 * PACKING_STOP \
                    or not mc.in_phase_space(p, c):
                raise ArithmeticError("double contact left the rarefaction or reached the packing line")
            return root, State(float(b[0]), float(b[1])), State(float(c[0]), float(c[1]))
        prev = (tau, value)
    return None


def _snap(p: ModelParams, x: np.ndarray) -> tuple[State, str | None]:
    for v in (State(0.0, p.phi_max), State(p.phi_max, 0.0)):
        if np.hypot(x[0] - v[0], x[1] - v[1]) <= SNAP_RADIUS:
            return v, None
    return State(float(x[0]), float(x[1])), "packing line reached away from a vertex; endpoint not snapped"


def _rarefaction_segment(p: ModelParams, rc: RarefactionCurve, upto: float | None = None,
                         end: State | None = None) -> WaveSegment:
    if upto is None:
        path = rc.points.copy()
        speeds = rc.speeds.copy()
    else:
        keep = np.linspace(0.0, upto, max(8, int(60 * upto / max(rc.length, 1e-300)) + 2))
        path = np.array([rc.at(t) for t in keep])
        speeds = np.asarray(sp.eigenvalues(p, path.T)[0], dtype=float)
    if end is not None:
        path[-1] = end
        speeds[-1] = _lambda1(p, end)
    left = State(float(path[0, 0]), float(path[0, 1]))
    right = State(float(path[-1, 0]), float(path[-1, 1]))
    return WaveSegment(1, "rarefaction", left, right, float(speeds[0]), float(speeds[-1]),
                       path=path, path_speeds=speeds)


STRUCT_RAREFACTION = "rarefaction"
STRUCT_SHOCK_RAREFACTION = "shock_rarefaction"
STRUCT_DOUBLE_CONTACT = "shock_rarefaction_double_contact"


def solve_rp_to_max(p: ModelParams, s, target=None, max_waves: int = 8) -> WaveCurveSolution:
    """First-family wave curve from ``s`` to the packing line.

    Alternates characteristic shocks (where the speed decreases forward) and
    rarefactions; a rarefaction that runs into an inflection is left at the
    state whose left-characteristic shock is right-characteristic as well.
    The vertex reached is reported in ``right_datum``; ``target`` (a state on
    the packing line) is only compared against it.
    """
    x = np.array([float(s[0]), float(s[1])])
    if not mc.in_phase_space(p, x):
        raise ValueError(f"state {tuple(x)} is outside the phase space")
    segs: list[WaveSegment] = []
    notes: list[str] = []
    terminal = None
    for _ in range(max_waves):
        if float(mc.free_volume(p, x)) <= 10 * PACKING_STOP:
            terminal, msg = _snap(p, x)
            break
        g = float(sp.inflection_indicator(p, x, 1))
        if g < 0.0 and not sp.inflection_ignored(p, x, 1):
            try:
                m, path = _char_shock(p, x)
            except NoCharacteristicShock as exc:
                raise UnresolvedStructure(f"no characteristic shock from {tuple(x)}: {exc}") from exc
            seg = _shock(p, x, m, family=1)
            seg.path = path
            segs.append(seg)
            x = np.array(m)
            continue
        rc = rarefaction_integrate(p, x, 1)
        if rc.stop_reason == "packing":
            terminal, msg = _snap(p, rc.points[-1])
            if msg:
                notes.append(msg)
            segs.append(_rarefaction_segment(p, rc, end=terminal))
            break
        if rc.stop_reason != "inflection":
            raise UnresolvedStructure(f"rarefaction from {tuple(x)} ended with '{rc.stop_reason}'")
        try:
            hit = find_double_contact(p, rc)
        except ArithmeticError as exc:
            raise UnresolvedStructure(f"rarefaction from {tuple(x)}: {exc}") from exc
        if hit is None:
            raise UnresolvedStructure(
                f"rarefaction from {tuple(x)} reaches an inflection at {tuple(rc.end)} "
                "without a double-contact shock")
        tau, b, c = hit
        segs.append(_rarefaction_segment(p, rc, upto=tau, end=b))
        segs.append(_shock(p, b, c, family=1))
        x = np.array(c)
    else:
        raise UnresolvedStructure(f"more than {max_waves} waves without reaching the packing line")
    sol = WaveCurveSolution(State(float(s[0]), float(s[1])), terminal, segs, notes=notes)
    kinds = [seg.kind for seg in segs]
    if kinds == ["rarefaction"]:
        sol.structure = STRUCT_RAREFACTION
    elif kinds == ["shock", "rarefaction"]:
        sol.structure = STRUCT_SHOCK_RAREFACTION
    elif kinds == ["shock", "rarefaction", "shock", "rarefaction"]:
        sol.structure = STRUCT_DOUBLE_CONTACT
    else:
        sol.structure = "+".join(kinds) if kinds else "trivial"
    if segs and segs[0].kind == "shock" and segs[0].path is not None:
        sol.crossings = inflection_crossings(p, segs[0].path)
    if target is not None:
        reached = bool(np.allclose(target, terminal, atol=1e-12, rtol=0))
        sol.notes.append(f"requested packing state {tuple(target)} "
                         f"{'reached' if reached else 'not reached'}; terminal {tuple(terminal)}")
    return sol


# ------------------------------------------------------- inflection crossings

@functools.lru_cache(maxsize=8)
def named_inflection_branches(p: ModelParams) -> dict[str, np.ndarray]:
    """First-family inflection branches by name.

    With two branches the one reaching lower ``phi_2`` is ``B`` (bottom) and the
    other ``T`` (top); a single branch is ``I``; more are numbered.
    """
    branches = sp.inflection_locus(p, 1)
    if len(branches) == 1:
        return {"I": branches[0]}
    if len(branches) == 2:
        lo, hi = sorted(branches, key=lambda b: float(b[:, 1].min()))
        return {"B": lo, "T": hi}
    return {f"I{k + 1}": b for k, b in enumerate(branches)}


def inflection_crossings(p: ModelParams, path: np.ndarray) -> list[str]:
    """Names of the inflection branches crossed by a polyline, in order."""
    path = np.asarray(path, dtype=float)
    if len(path) < 2:
        return []
    g = np.asarray(sp.inflection_indicator(p, path.T, 1), dtype=float)
    keep = np.isfinite(g) & ~np.asarray(sp.inflection_ignored(p, path.T, 1), dtype=bool)
    idx = np.flatnonzero(keep)
    names = named_inflection_branches(p)
    out = []
    for a, b in zip(idx[:-1], idx[1:]):
        if g[a] * g[b] >= 0.0:
            continue
        w = g[a] / (g[a] - g[b])
        x = path[a] + w * (path[b] - path[a])
        near = min(names, key=lambda k: float(np.min(np.hypot(*(names[k] - x).T))))
        out.append(near)
    return out


# ------------------------------------------------------ double-contact curves

def _double_contact_residual(p: ModelParams, z: np.ndarray) -> np.ndarray:
    b, c = z[:2], z[2:]
    d = c - b
    sig = _jump_speed(p, b, c)
    return np.array([float(hg.jump_determinant(p, b, c)) / float(d @ d),
                     sig - _lambda1(p, b), sig - _lambda1(p, c)])


def _residual_jacobian(p: ModelParams, z: np.ndarray, h: float = 1e-7) -> np.ndarray:
    jac = np.empty((3, 4))
    for k in range(4):
        dz = np.zeros(4)
        dz[k] = h
        jac[:, k] = (_double_contact_residual(p, z + dz) - _double_contact_residual(p, z - dz)) / (2 * h)
    return jac


def _null_tangent(jac: np.ndarray) -> np.ndarray:
    return np.linalg.svd(jac)[2][-1]


@dataclass
class DoubleContactCurve:
    """Pairs ``(B, C)`` joined by a first-family shock characteristic on both sides."""

    b_points: np.ndarray
    c_points: np.ndarray
    speeds: np.ndarray
    stop_reasons: tuple[str, str] = ("", "")

    def __len__(self) -> int:
        return len(self.b_points)

    def max_residual(self, p: ModelParams) -> float:
        z = np.hstack([self.b_points, self.c_points])
        return float(max(np.max(np.abs(_double_contact_residual(p, row))) for row in z))

    def rows(self):
        for b, c, s in zip(self.b_points, self.c_points, self.speeds):
            yield float(b[0]), float(b[1]), float(c[0]), float(c[1]), float(s)


def _dc_valid(p: ModelParams, z: np.ndarray, merge: float) -> str | None:
    b, c = z[:2], z[2:]
    for x in (b, c):
        if min(x) < 0.0:
            return "left_phase_space"
        if float(mc.free_volume(p, x)) < sp.PACKING_NOISE:
            return "packing"
    # the equations are symmetric in (B, C); stop before the pair can swap
    if np.hypot(*(c - b)) < merge:
        return "pair_merged"
    return None


def _continue_double_contact(p: ModelParams, z0: np.ndarray, tangent: np.ndarray, h: float,
                             max_points: int, tol: float, h_min: float = 1e-6):
    """Pseudo-arclength continuation of the double-contact equations from ``z0``."""
    out = []
    z, t = z0.copy(), tangent / np.linalg.norm(tangent)
    reason = "max_points"
    while len(out) < max_points:
        step = h
        while True:
            guess = z + step * t
            w = guess.copy()
            ok = False
            for _ in range(12):
                r = _double_contact_residual(p, w)
                if not np.all(np.isfinite(r)):
                    break
                if np.max(np.abs(r)) <= tol:
                    ok = True
                    break
                jac = _residual_jacobian(p, w)
                a = np.vstack([jac, t])
                try:
                    w = w - np.linalg.solve(a, np.append(r, t @ (w - guess)))
                except np.linalg.LinAlgError:
                    break
            if ok and np.linalg.norm(w - z) < 3 * step:
                break
            step *= 0.5
            if step < h_min:
                return out, "breakdown"
        bad = _dc_valid(p, w, 2 * h)
        if bad:
            reason = bad
            break
        t_new = _null_tangent(_residual_jacobian(p, w))
        if t_new @ t < 0:
            t_new = -t_new
        out.append(w)
        z, t = w, t_new
    return out, reason


def _near_curves(curves: list[DoubleContactCurve], pts: np.ndarray, radius: float) -> bool:
    """Whether any of ``pts`` lies within ``radius`` of a traced B-polyline."""
    for cur in curves:
        a, b = cur.b_points[:-1], cur.b_points[1:]
        if not len(a):
            a = b = cur.b_points
        d = b - a
        dd = np.maximum(np.einsum("ij,ij->i", d, d), 1e-300)
        for x in pts:
            w = np.clip(np.einsum("ij,ij->i", x - a, d) / dd, 0.0, 1.0)
            if float(np.min(np.hypot(*(a + w[:, None] * d - x).T))) < radius:
                return True
    return False


def double_contact_locus(p: ModelParams, seeds: int = 64, offset: float = 0.02, h: float = 5e-3,
                         max_points: int = 2000, tol: float = 1e-12) -> list[DoubleContactCurve]:
    """First-family double-contact pairs traced by continuation.

    Seeds are placed next to each inflection branch on the side where the
    characteristic speed increases towards it. A seed rarefaction that runs
    into the branch provides one pair through :func:`find_double_contact`,
    which is then continued in both directions. A continuation that cannot
    converge reports ``breakdown`` in ``stop_reasons`` and keeps its last
    valid pair.
    """
    curves: list[DoubleContactCurve] = []
    for branch in named_inflection_branches(p).values():
        idx = np.linspace(0, len(branch) - 1, seeds).round().astype(int)
        for i in idx:
            point = branch[i]
            r = sp.oriented_eigenvectors(p, point, 1)
            for sign in (-1.0, 1.0):
                x = point + sign * offset * r
                if not mc.in_phase_space(p, x) or sp.inflection_ignored(p, x, 1):
                    continue
                if float(sp.inflection_indicator(p, x, 1)) <= 0.0:
                    continue
                try:
                    rc = rarefaction_integrate(p, x, 1)
                except (ValueError, sp.DegenerateEigenvector):
                    continue
                if rc.stop_reason != "inflection" or _near_curves(curves, rc.points, 1e-3):
                    continue
                # the integrator resolves the packing layer; the locus screens it out, so do the same
                if sp.inflection_ignored(p, rc.points[-1], 1):
                    continue
                # a fold needs the left-characteristic shock to be missing at the start
                if _fold_value(p, rc.points[0])[0] < 0.0:
                    continue
                try:
                    hit = find_double_contact(p, rc)
                except (ArithmeticError, NoCharacteristicShock):
                    continue
                if hit is None:
                    continue
                _, b, c = hit
                z0 = np.array([b[0], b[1], c[0], c[1]])
                if _dc_valid(p, z0, 2 * h) or _near_curves(curves, [z0[:2]], 1e-3):
                    continue
                t0 = _null_tangent(_residual_jacobian(p, z0))
                fwd, why_f = _continue_double_contact(p, z0, t0, h, max_points, tol)
                bwd, why_b = _continue_double_contact(p, z0, -t0, h, max_points, tol)
                z = np.array(bwd[::-1] + [z0] + fwd)
                speeds = np.array([_jump_speed(p, row[:2], row[2:]) for row in z])
                curves.append(DoubleContactCurve(z[:, :2], z[:, 2:], speeds, (why_b, why_f)))
    return curves


# ------------------------------------------------------------ self-similar profile

def sample_profile(solution: WaveCurveSolution, xi) -> np.ndarray:
    """States of the self-similar solution at ``xi = x / t``; shape ``(len(xi), 2)``.

    Shocks are jumps at their speed; inside a rarefaction the state is found by
    inverting the (monotone) characteristic speed along its stored path.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    out = np.empty((len(xi), 2))
    for k, z in enumerate(xi):
        state = np.asarray(solution.left_datum, dtype=float)
        for seg in solution.segments:
            if seg.kind == "rarefaction" and seg.path is not None:
                if z >= seg.speed_hi:
                    state = np.asarray(seg.right, dtype=float)
                    continue
                if z > seg.speed_lo:
                    lam = np.maximum.accumulate(seg.path_speeds)
                    state = np.array([np.interp(z, lam, seg.path[:, 0]),
                                      np.interp(z, lam, seg.path[:, 1])])
                break
            if z >= seg.speed_lo:
                state = np.asarray(seg.right, dtype=float)
            else:
                break
        out[k] = state
    return out
