"""Flux Jacobian, closed-form eigensystem, inflection and coincidence loci."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import model as mc
from ._contour import refined_contours
from .model import ModelParams, State

COINCIDENCE_RTOL = 1e-9
RANK_RTOL = 1e-8
GRAD_STEP = 1e-6


class DegenerateEigenvector(ArithmeticError):
    """No unique eigenvector direction (quasi-umbilic state or zero matrix)."""


@dataclass
class Jacobian2:
    j11: np.ndarray | float
    j12: np.ndarray | float
    j21: np.ndarray | float
    j22: np.ndarray | float

    def matrix(self) -> np.ndarray:
        """Stack the entries into ``(..., 2, 2)``."""
        m = np.array([[self.j11, self.j12], [self.j21, self.j22]], dtype=float)
        return np.moveaxis(m, (0, 1), (-2, -1))

    def norm(self):
        return np.sqrt(np.asarray(self.j11) ** 2 + np.asarray(self.j12) ** 2
                       + np.asarray(self.j21) ** 2 + np.asarray(self.j22) ** 2)


def jacobian(p: ModelParams, s, extended: bool = False) -> Jacobian2:
    """Closed-form Jacobian ``J_ij = v_i delta_ij + phi_i u_ij`` with
    ``u_ij = u_i' - Phi^T u' - u_j``.

    For ``n_i < 2`` the slip derivative is singular on the packing line, so
    such states are rejected.
    """
    phi1, phi2 = mc._split(s)
    if min(p.n) < 2.0 and np.any(mc.free_volume(p, s) <= 0.0):
        raise ValueError("Jacobian is singular at phi = phi_max when an exponent is below 2")
    u1, u2, v1, v2 = mc.velocities(p, s, extended)
    du1 = np.asarray(mc.slip_velocity_derivative(p, s, 1, extended))
    du2 = np.asarray(mc.slip_velocity_derivative(p, s, 2, extended))
    mix = phi1 * du1 + phi2 * du2
    u11 = du1 - mix - u1
    u12 = du1 - mix - u2
    u21 = du2 - mix - u1
    u22 = du2 - mix - u2
    return Jacobian2(mc._out(v1 + phi1 * u11), mc._out(phi1 * u12),
                     mc._out(phi2 * u21), mc._out(v2 + phi2 * u22))


def numeric_jacobian(p: ModelParams, s, h: float = 1e-6, extended: bool = False) -> Jacobian2:
    """Central-difference Jacobian of :func:`model.flux` (verification oracle).

    Inside the phase space the step shrinks to 1% of the distance to the
    nearest edge, so the stencil never straddles the packing line or an axis.
    """
    phi1, phi2 = mc._split(s)
    phi1, phi2 = np.asarray(phi1, dtype=float), np.asarray(phi2, dtype=float)
    if extended:
        h = np.full(np.broadcast(phi1, phi2).shape, h)
    else:
        edge = np.minimum(np.minimum(phi1, phi2), p.phi_max - phi1 - phi2)
        h = np.where(edge > 0, np.minimum(h, 0.01 * edge), h)
    fp1 = mc.flux_array(p, (phi1 + h, phi2), extended)
    fm1 = mc.flux_array(p, (phi1 - h, phi2), extended)
    fp2 = mc.flux_array(p, (phi1, phi2 + h), extended)
    fm2 = mc.flux_array(p, (phi1, phi2 - h), extended)
    d1 = (fp1 - fm1) / (2 * h)
    d2 = (fp2 - fm2) / (2 * h)
    return Jacobian2(mc._out(d1[0]), mc._out(d2[0]), mc._out(d1[1]), mc._out(d2[1]))


def matrix_eigenvalues(jac: Jacobian2):
    """Eigenvalues of a 2x2 matrix from its characteristic polynomial;
    independent of the model's closed form."""
    tr = np.asarray(jac.j11) + np.asarray(jac.j22)
    disc = (np.asarray(jac.j11) - np.asarray(jac.j22)) ** 2 + 4 * np.asarray(jac.j12) * np.asarray(jac.j21)
    with np.errstate(invalid="ignore"):
        root = np.sqrt(disc)
    return mc._out(0.5 * (tr - root)), mc._out(0.5 * (tr + root))


def discriminant(p: ModelParams, s, extended: bool = False):
    """``[(n1 phi1 - 1) u1 - (n2 phi2 - 1) u2]^2 + 4 n1 n2 phi1 phi2 u1 u2``."""
    phi1, phi2 = mc._split(s)
    u1, u2, _, _ = mc.velocities(p, s, extended)
    n1, n2 = p.n
    return mc._out(((n1 * phi1 - 1) * u1 - (n2 * phi2 - 1) * u2) ** 2
                   + 4 * n1 * n2 * phi1 * phi2 * u1 * u2)


def eigenvalues(p: ModelParams, s, extended: bool = False):
    """Ordered pair ``(lambda_1, lambda_2)``.

    Where the discriminant is negative (only possible in extended mode) both
    entries are NaN; use :func:`discriminant` to tell the two cases apart.
    """
    phi1, phi2 = mc._split(s)
    u1, u2, v1, v2 = mc.velocities(p, s, extended)
    n1, n2 = p.n
    mid = 0.5 * (v1 + v2) - 0.5 * (n1 * phi1 * u1 + n2 * phi2 * u2)
    disc = ((n1 * phi1 - 1) * u1 - (n2 * phi2 - 1) * u2) ** 2 + 4 * n1 * n2 * phi1 * phi2 * u1 * u2
    with np.errstate(invalid="ignore"):
        half = 0.5 * np.sqrt(np.where(disc >= 0.0, disc, np.nan))
    return mc._out(mid - half), mc._out(mid + half)


def edge_eigenvalues(p: ModelParams, s, tol: float = mc.PHASE_TOL):
    """``(lambda_a, lambda_b)`` on a coordinate axis; the pair is not ordered.

    ``lambda_a = (1 - (1 + n_i) phi) u_i`` and ``lambda_b = u_j - phi u_i`` on
    the axis of species ``i``. The origin is read on the species-2 axis, which
    gives ``lambda_a(O) = v_inf_2 = lambda_1(O)``.
    """
    phi1, phi2 = (float(x) for x in s)
    if abs(phi1) <= tol:
        i, phi = 2, phi2
    elif abs(phi2) <= tol:
        i, phi = 1, phi1
    else:
        raise ValueError(f"state {tuple(s)} is not on a coordinate axis")
    u = (mc.slip_velocity(p, s, 1), mc.slip_velocity(p, s, 2))
    ui, uj = u[i - 1], u[2 - i]
    return (1.0 - (1.0 + p.n[i - 1]) * phi) * ui, uj - phi * ui


def eigenvector_formula(p: ModelParams, s, lam):
    """Unnormalized right eigenvector as an explicit function of the eigenvalue.

    Vectorized; vanishes on an axis for the eigenvalue whose eigenvector is
    transversal to it.
    """
    phi1, phi2 = mc._split(s)
    _, _, v1, v2 = mc.velocities(p, s)
    d = (np.asarray(mc.slip_velocity_derivative(p, s, 2))
         - np.asarray(mc.slip_velocity_derivative(p, s, 1)))
    cross = phi1 * phi2 * d
    return np.array([phi1 * (v2 - lam) + cross, phi2 * (v1 - lam) - cross])


def _null_direction(m: np.ndarray, scale: float) -> np.ndarray:
    """Unit vector spanning ker(m) for a rank-one 2x2 matrix."""
    _, sv, vt = np.linalg.svd(m)
    if sv[0] <= 1e-14 * max(1.0, scale):
        raise DegenerateEigenvector("J - lambda I vanishes; every direction is an eigenvector")
    if sv[1] > 1e-6 * sv[0]:
        raise DegenerateEigenvector("J - lambda I has full rank; lambda is not an eigenvalue")
    return vt[1]


def eigenvector(p: ModelParams, s, lam: float, tol: float = 1e-13) -> np.ndarray:
    """Unit right eigenvector for eigenvalue ``lam`` at a single state.

    Uses the explicit formula and falls back to the null space of
    ``J - lam I`` where the formula collapses to zero.
    """
    r = eigenvector_formula(p, s, lam)
    nrm = float(np.hypot(*r))
    if nrm > tol:
        return r / nrm
    jac = jacobian(p, s)
    m = jac.matrix() - lam * np.eye(2)
    return _null_direction(m, float(jac.norm()))


def is_coincident(lam1, lam2, rtol: float = COINCIDENCE_RTOL):
    return np.abs(lam2 - lam1) <= rtol * np.maximum(1.0, np.abs(lam1) + np.abs(lam2))


@dataclass
class SpectralData:
    lambda_1: float
    lambda_2: float
    discriminant: float
    r_1: np.ndarray | None
    r_2: np.ndarray | None
    coincident: bool
    elliptic: bool = False

    @property
    def eigenvectors_reliable(self) -> bool:
        return not (self.coincident or self.elliptic) and self.r_1 is not None

    def to_dict(self) -> dict:
        def vec(r):
            return None if r is None else [float(r[0]), float(r[1])]
        return {
            "lambda_1": self.lambda_1,
            "lambda_2": self.lambda_2,
            "discriminant": self.discriminant,
            "r_1": vec(self.r_1),
            "r_2": vec(self.r_2),
            "coincident": self.coincident,
            "elliptic": self.elliptic,
            "eigenvectors_reliable": self.eigenvectors_reliable,
        }


def spectral_data(p: ModelParams, s, extended: bool = False) -> SpectralData:
    disc = float(discriminant(p, s, extended))
    if disc < 0.0:
        return SpectralData(float("nan"), float("nan"), disc, None, None, False, True)
    lam1, lam2 = (float(x) for x in eigenvalues(p, s, extended))
    coincident = bool(is_coincident(lam1, lam2))
    vecs = []
    for lam in (lam1, lam2):
        try:
            vecs.append(eigenvector(p, s, lam))
        except (DegenerateEigenvector, ValueError):
            vecs.append(None)
    return SpectralData(lam1, lam2, disc, vecs[0], vecs[1], coincident)


_ORIENTATION = {1: np.array([1.0, 1.0]), 2: np.array([1.0, -1.0])}


def oriented_eigenvectors(p: ModelParams, s, family: int) -> np.ndarray:
    """Unit eigenvector field of ``family`` with a globally continuous sign.

    Family 1 points toward increasing total concentration, family 2 toward
    increasing ``phi_1 - phi_2``; neither projection vanishes inside the phase
    space. Built from whichever row of ``J - lambda I`` is better conditioned,
    so it stays defined where the explicit formula collapses on the axes.
    """
    if family not in (1, 2):
        raise ValueError(f"family must be 1 or 2, got {family}")
    lam = eigenvalues(p, s)[family - 1]
    jac = jacobian(p, s)
    ra = np.array([np.broadcast_to(jac.j12, np.shape(lam)), lam - jac.j11])
    rb = np.array([lam - jac.j22, np.broadcast_to(jac.j21, np.shape(lam))])
    na = np.hypot(*ra)
    nb = np.hypot(*rb)
    r = np.where(na >= nb, ra, rb)
    nrm = np.maximum(np.hypot(*r), 1e-300)
    r = r / nrm
    proj = _ORIENTATION[family] @ r.reshape(2, -1)
    sign = np.where(proj.reshape(np.shape(lam)) < 0.0, -1.0, 1.0)
    return r * sign


def inflection_points_axes(p: ModelParams) -> tuple[State, State]:
    """Zeros of ``d lambda_a / d phi`` on the two axes, both of family 1."""
    return State(2.0 / (1.0 + p.n_1), 0.0), State(0.0, 2.0 / (1.0 + p.n_2))


def inflection_indicator(p: ModelParams, s, family: int, h: float = GRAD_STEP):
    """Genuine-nonlinearity indicator ``grad(lambda_i) . r_i`` with unit ``r_i``.

    The directional derivative is a central difference along ``r_i`` evaluated
    with the uncut flux, so states on the axes are handled as well.
    """
    phi1, phi2 = mc._split(s)
    r = oriented_eigenvectors(p, s, family)
    k = family - 1
    lo = eigenvalues(p, (phi1 - h * r[0], phi2 - h * r[1]), extended=True)[k]
    hi = eigenvalues(p, (phi1 + h * r[0], phi2 + h * r[1]), extended=True)[k]
    return mc._out((np.asarray(hi) - np.asarray(lo)) / (2.0 * h))


def _cell_grid(resolution: int) -> np.ndarray:
    return (np.arange(resolution) + 0.5) / resolution


PACKING_BAND = 0.01
PACKING_NOISE = 1e-3
SPEED_FLOOR = 1e-4


def inflection_ignored(p: ModelParams, s, family: int):
    """Where the inflection indicator is not trusted next to the packing line.

    Below free volume ``PACKING_NOISE`` the finite difference is dominated by
    rounding. Inside ``PACKING_BAND`` sign changes are also dropped where the
    speed is below ``SPEED_FLOOR * v_inf_1``: the flow is practically
    stationary there and thin layers of sign change carry no wave.
    """
    free = np.asarray(mc.free_volume(p, s))
    with np.errstate(all="ignore"):
        lam = np.asarray(eigenvalues(p, s)[family - 1])
    slow = np.abs(lam) < SPEED_FLOOR * p.v_inf_1
    out = (free < PACKING_NOISE) | ((free < PACKING_BAND) & slow)
    return bool(out) if out.ndim == 0 else out


def inflection_locus(p: ModelParams, family: int, resolution: int = 400,
                     min_length: float = 0.02) -> list[np.ndarray]:
    """Polylines where family ``family`` loses genuine nonlinearity.

    The indicator is sampled on a cell-centred grid over the phase space,
    leaving out the strip next to the packing line described in
    :func:`inflection_ignored`. For family 2 the contact line ``phi = phi*``,
    where the indicator vanishes identically, is dropped as well. Branches
    shorter than ``min_length`` are discarded.
    """
    if family not in (1, 2):
        raise ValueError(f"family must be 1 or 2, got {family}")
    xs = _cell_grid(resolution)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    inside = (X + Y) < p.phi_max
    Xs, Ys = np.where(inside, X, 0.1), np.where(inside, Y, 0.1)
    inside &= ~inflection_ignored(p, (Xs, Ys), family)
    with np.errstate(all="ignore"):
        g = np.where(inside, inflection_indicator(p, (Xs, Ys), family), np.nan)

    def func(pt):
        return float(inflection_indicator(p, (pt[0], pt[1]), family))

    branches = refined_contours(func, xs, xs, values=g, mask=inside)
    out = []
    star = _phi_star(p)
    for c in branches:
        if len(c) < 2:
            continue
        length = float(np.sum(np.hypot(*np.diff(c, axis=0).T)))
        if length < min_length:
            continue
        if family == 2 and np.all(np.abs(c.sum(axis=1) - star) < 2.0 / resolution):
            continue
        out.append(c)
    return out


def _phi_star(p: ModelParams) -> float:
    return 1.0 - (p.v_inf_2 / p.v_inf_1) ** (1.0 / (p.n_1 - p.n_2))


def r1_function(p: ModelParams, phi):
    """``(1 - n1 phi)(1 - phi)^(n1 - n2)``; equals ``v_inf_2/v_inf_1`` at a coincidence on the phi_1 axis."""
    phi = np.asarray(phi, dtype=float)
    return mc._out((1.0 - p.n_1 * phi) * (1.0 - phi) ** (p.n_1 - p.n_2))


def r2_function(p: ModelParams, phi):
    """``(1 - n2 phi)(1 - phi)^(n2 - n1)``; equals ``v_inf_1/v_inf_2`` at a coincidence on the phi_2 axis."""
    phi = np.asarray(phi, dtype=float)
    return mc._out((1.0 - p.n_2 * phi) * (1.0 - phi) ** (p.n_2 - p.n_1))


def r2_extremum(p: ModelParams) -> float | None:
    """Critical point of :func:`r2_function`; undefined when ``n1 - n2 = 1``."""
    denom = (p.n_1 - p.n_2 - 1.0) * p.n_2
    if denom == 0.0:
        return None
    return (p.n_1 - 2.0 * p.n_2) / denom


@dataclass
class CoincidencePoint:
    state: State
    axis: int
    quasi_umbilic: bool
    gap: float

    def to_dict(self) -> dict:
        return {"phi1": self.state.phi_1, "phi2": self.state.phi_2, "axis": self.axis,
                "quasi_umbilic": self.quasi_umbilic, "gap": self.gap}


@dataclass
class CoincidenceReport:
    points: list[CoincidencePoint] = field(default_factory=list)
    r2_extremum: float | None = None
    shortcut_prediction: int | None = None

    def on_axis(self, axis: int) -> list[CoincidencePoint]:
        return [c for c in self.points if c.axis == axis]

    @property
    def shortcut_consistent(self) -> bool | None:
        if self.shortcut_prediction is None:
            return None
        return self.shortcut_prediction == len(self.on_axis(2))

    def to_dict(self) -> dict:
        return {
            "points": [c.to_dict() for c in self.points],
            "r2_extremum": self.r2_extremum,
            "shortcut_prediction": self.shortcut_prediction,
            "shortcut_consistent": self.shortcut_consistent,
        }


def _shortcut_count(p: ModelParams) -> int | None:
    """Number of phi_2-axis coincidences predicted from the extremum of R2 alone."""
    w = p.v_inf_1 / p.v_inf_2
    if p.n_1 - p.n_2 == 1.0:
        return 2 if p.n_2 > w else 0
    phim = r2_extremum(p)
    if phim is None or not 0.0 < phim < 1.0:
        return None
    peak = r2_function(p, phim)
    if np.isclose(peak, w, rtol=1e-12):
        return 1
    return 2 if peak > w else 0


def _scan_roots(func, lo: float, hi: float, cells: int) -> list[float]:
    xs = np.linspace(lo, hi, cells + 1)
    vals = np.array([func(x) for x in xs])
    roots = []
    for a, b, fa, fb in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0.0:
            roots.append(brentq(func, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return roots


def coincidence_points(p: ModelParams, scan_cells: int = 2000) -> CoincidenceReport:
    """Equal-eigenvalue states on the two axes, with a non-diagonalizability test.

    On the phi_1 axis the root of ``R1 = v_inf_2/v_inf_1`` is unique in
    ``[0, 1/n1]``. On the phi_2 axis every root of ``R2 = v_inf_1/v_inf_2`` in
    ``(0, 1)`` is found by a sign scan, independent of the extremum shortcut
    (which is reported separately for comparison).
    """
    report = CoincidenceReport(r2_extremum=r2_extremum(p) if p.n_1 - p.n_2 != 1.0 else None,
                               shortcut_prediction=_shortcut_count(p))
    ratio = p.v_inf_2 / p.v_inf_1
    phi_u = brentq(lambda x: r1_function(p, x) - ratio, 0.0, 1.0 / p.n_1,
                   xtol=1e-16, rtol=4 * np.finfo(float).eps)
    found = [(State(phi_u, 0.0), 1)]
    w = 1.0 / ratio
    eps = 1e-9
    for phi in _scan_roots(lambda x: r2_function(p, x) - w, eps, 1.0 - eps, scan_cells):
        found.append((State(0.0, phi), 2))
    for st, axis in found:
        la, lb = edge_eigenvalues(p, st)
        report.points.append(CoincidencePoint(st, axis, quasi_umbilic_check(p, st), float(abs(la - lb))))
    return report


def quasi_umbilic_check(p: ModelParams, s, rtol: float = RANK_RTOL) -> bool:
    """True when the Jacobian at a coincidence point is a nontrivial Jordan block.

    ``J - lambda I`` is tested for rank one by its singular values. The zero
    matrix (all speeds vanish on the packing line) is diagonalizable and gives
    False. Raises ValueError for states with distinct eigenvalues.
    """
    lam1, lam2 = (float(x) for x in eigenvalues(p, s))
    if not is_coincident(lam1, lam2):
        raise ValueError(f"state {tuple(s)} is not a coincidence point "
                         f"(lambda_1={lam1!r}, lambda_2={lam2!r})")
    jac = jacobian(p, s)
    m = jac.matrix() - 0.5 * (lam1 + lam2) * np.eye(2)
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[0] <= 1e-14 * max(1.0, float(jac.norm())):
        return False
    return bool(sv[1] <= rtol * sv[0])


@dataclass
class DiscriminantMap:
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    boundary_adjacent: list[tuple[CoincidencePoint, bool]]

    @property
    def sign(self) -> np.ndarray:
        """+1 hyperbolic, -1 elliptic, 0 undefined (extended power not real)."""
        return np.where(np.isfinite(self.values), np.sign(self.values), 0).astype(int)

    def elliptic_inside_triangle(self, phi_max: float = 1.0) -> int:
        X, Y = np.meshgrid(self.xs, self.ys, indexing="ij")
        inside = (X > 0) & (Y > 0) & (X + Y < phi_max)
        return int(np.sum(inside & (self.values < 0)))


def extended_discriminant_map(p: ModelParams, window=(-0.2, 1.2, -0.2, 1.2),
                              resolution: int = 281, neighbourhood: int = 2) -> DiscriminantMap:
    """Sign of the discriminant of the uncut flux over a rectangular window.

    Each coincidence point is marked boundary-adjacent when an elliptic node
    lies within ``neighbourhood`` grid nodes of it.
    """
    x0, x1, y0, y1 = window
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    with np.errstate(all="ignore"):
        vals = np.asarray(discriminant(p, (X, Y), extended=True), dtype=float)
    adjacency = []
    for c in coincidence_points(p).points:
        i = int(np.argmin(np.abs(xs - c.state.phi_1)))
        j = int(np.argmin(np.abs(ys - c.state.phi_2)))
        block = vals[max(i - neighbourhood, 0):i + neighbourhood + 1,
                     max(j - neighbourhood, 0):j + neighbourhood + 1]
        adjacency.append((c, bool(np.any(block < 0))))
    return DiscriminantMap(xs, ys, vals, adjacency)
