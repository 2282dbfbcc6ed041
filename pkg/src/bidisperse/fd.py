"""Conservative first-order finite-volume solver for the sedimentation system.

Used as an independent check on the semi-analytical Riemann solutions. Fields
are arrays of shape ``(n_cells, 2)`` holding cell averages of ``(phi_1, phi_2)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import model as mc
from . import spectral as sp
from .model import ModelParams

SCHEMES = ("rusanov", "lax_friedrichs")


class SimulationError(RuntimeError):
    """The update produced non-finite values."""


@dataclass(frozen=True)
class Grid1D:
    x_lo: float
    x_hi: float
    n_cells: int

    def __post_init__(self):
        if self.n_cells < 1 or not self.x_hi > self.x_lo:
            raise ValueError(f"invalid grid [{self.x_lo}, {self.x_hi}] with {self.n_cells} cells")

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return self.x_lo + (np.arange(self.n_cells) + 0.5) * self.dx

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SimConfig:
    cfl: float = 0.45
    t_end: float = 0.5
    scheme: str = "rusanov"
    clamp: bool = True

    def __post_init__(self):
        if not 0.0 < self.cfl < 1.0:
            raise ValueError(f"cfl must lie in (0, 1), got {self.cfl}")
        if self.t_end < 0.0:
            raise ValueError(f"t_end must be non-negative, got {self.t_end}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")

    def to_dict(self) -> dict:
        return asdict(self)


def init_riemann(grid: Grid1D, s_minus, s_plus) -> np.ndarray:
    """``s_minus`` for ``x < 0`` and ``s_plus`` for ``x > 0``."""
    if not grid.x_lo < 0.0 < grid.x_hi:
        raise ValueError("the grid must contain x = 0")
    x = grid.centers
    cells = np.empty((grid.n_cells, 2))
    cells[x < 0.0] = np.asarray(s_minus, dtype=float)
    cells[x >= 0.0] = np.asarray(s_plus, dtype=float)
    return cells


def init_batch(p: ModelParams, grid: Grid1D, phi0, length: float = 1.0, packed=None) -> np.ndarray:
    """Settling column: clear liquid above ``x = 0``, ``phi0`` on ``[0, length]``
    and a packed bed below.

    The packed state defaults to ``phi0`` rescaled to ``phi_max`` (same
    composition, or pure species 2 when ``phi0`` is the origin). Its flux
    vanishes, so the bed acts as the closed bottom of the column.
    """
    phi0 = np.asarray(phi0, dtype=float)
    if not mc.in_phase_space(p, phi0):
        raise ValueError(f"initial state {tuple(phi0)} is outside the phase space")
    if not (grid.x_lo < 0.0 and grid.x_hi > length):
        raise ValueError("the grid must cover [0, length] with a margin on both sides")
    if packed is None:
        total = float(phi0.sum())
        packed = phi0 * (p.phi_max / total) if total > 0 else np.array([0.0, p.phi_max])
    packed = np.asarray(packed, dtype=float)
    if abs(float(mc.free_volume(p, packed))) > mc.PHASE_TOL:
        raise ValueError(f"packed state {tuple(packed)} is not on the packing line")
    x = grid.centers
    cells = np.zeros((grid.n_cells, 2))
    cells[(x >= 0.0) & (x <= length)] = phi0
    cells[x > length] = packed
    return cells


def spectral_radius(p: ModelParams, cells: np.ndarray) -> np.ndarray:
    lam1, lam2 = sp.eigenvalues(p, (cells[:, 0], cells[:, 1]))
    return np.maximum(np.abs(lam1), np.abs(lam2))


def _face_fluxes(p: ModelParams, cells: np.ndarray, dt: float, dx: float, scheme: str) -> np.ndarray:
    # outflow ghost cells on both ends
    u = np.vstack([cells[:1], cells, cells[-1:]])
    f = np.column_stack(mc.flux(p, (u[:, 0], u[:, 1])))
    jump = u[1:] - u[:-1]
    if scheme == "rusanov":
        rho = spectral_radius(p, u)
        a = np.maximum(rho[:-1], rho[1:])[:, None]
    else:
        a = dx / dt
    return 0.5 * (f[:-1] + f[1:]) - 0.5 * a * jump


def _clamp(p: ModelParams, cells: np.ndarray) -> tuple[np.ndarray, float]:
    out = np.maximum(cells, 0.0)
    total = out.sum(axis=1)
    over = total > p.phi_max
    out[over] *= (p.phi_max / total[over])[:, None]
    return out, float(np.abs(out - cells).sum())


def stable_dt(p: ModelParams, cells: np.ndarray, grid: Grid1D, cfl: float) -> float:
    rho = float(np.max(spectral_radius(p, cells)))
    return cfl * grid.dx / rho if rho > 0 else np.inf


def step(p: ModelParams, cells: np.ndarray, grid: Grid1D, config: SimConfig,
         dt: float | None = None, index: int = 0) -> tuple[np.ndarray, float, float]:
    """One conservative update. Returns ``(cells, dt, clamped_amount)``."""
    if dt is None:
        dt = stable_dt(p, cells, grid, config.cfl)
    if not np.isfinite(dt):
        return cells.copy(), dt, 0.0
    flux = _face_fluxes(p, cells, dt, grid.dx, config.scheme)
    new = cells - (dt / grid.dx) * (flux[1:] - flux[:-1])
    if not np.all(np.isfinite(new)):
        raise SimulationError(f"non-finite cell values at step {index}")
    clamped = 0.0
    if config.clamp:
        new, clamped = _clamp(p, new)
    return new, dt, clamped


@dataclass
class RunResult:
    t: float
    cells: np.ndarray
    steps: int
    clamped: float
    snapshots: dict[float, np.ndarray] = field(default_factory=dict)

    def mass(self, grid: Grid1D) -> np.ndarray:
        return self.cells.sum(axis=0) * grid.dx


def run(p: ModelParams, cells: np.ndarray, grid: Grid1D, config: SimConfig,
        snapshots=(), max_steps: int | None = None) -> RunResult:
    """Advance to ``config.t_end`` (or ``max_steps``); ``snapshots`` lists output times."""
    cells = np.array(cells, dtype=float)
    marks = sorted(float(t) for t in snapshots if 0.0 <= t <= config.t_end)
    shots: dict[float, np.ndarray] = {}
    t, n, clamped = 0.0, 0, 0.0
    while marks and marks[0] <= 0.0:
        shots[marks.pop(0)] = cells.copy()
    while t < config.t_end and (max_steps is None or n < max_steps):
        dt = stable_dt(p, cells, grid, config.cfl)
        stop = marks[0] if marks else config.t_end
        if not np.isfinite(dt) or t + dt >= stop:
            dt = stop - t
        cells, dt, c = step(p, cells, grid, config, dt=dt, index=n)
        t = stop if t + dt >= stop else t + dt
        n += 1
        clamped += c
        while marks and marks[0] <= t:
            shots[marks.pop(0)] = cells.copy()
    return RunResult(t, cells, n, clamped, shots)


def compare_profile(grid: Grid1D, cells: np.ndarray, t: float, solution) -> np.ndarray:
    """L1 distance per species to the self-similar solution at time ``t``."""
    from .riemann import sample_profile

    if t <= 0.0:
        raise ValueError("comparison needs t > 0")
    exact = sample_profile(solution, grid.centers / t)
    return np.abs(cells - exact).sum(axis=0) * grid.dx


def front_position(grid: Grid1D, cells: np.ndarray, species: int, level: float) -> float:
    """First position where species ``species`` crosses ``level`` (linear interpolation)."""
    y = cells[:, species - 1] - level
    idx = np.flatnonzero(np.sign(y[:-1]) != np.sign(y[1:]))
    if not len(idx):
        raise ValueError(f"no crossing of level {level}")
    k = int(idx[0])
    x = grid.centers
    w = y[k] / (y[k] - y[k + 1])
    return float(x[k] + w * (x[k + 1] - x[k]))
