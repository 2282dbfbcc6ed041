"""Model parameters, phase-space geometry and the bidisperse flux.

States are passed as ``(phi_1, phi_2)`` pairs. Every function accepts either
a :class:`State`, a plain tuple, or an array whose leading axis has length 2,
so the same code evaluates a single point or a whole grid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

PHASE_TOL = 1e-12


class State(NamedTuple):
    phi_1: float
    phi_2: float

    @property
    def total(self) -> float:
        return self.phi_1 + self.phi_2

    def as_array(self) -> np.ndarray:
        return np.array([self.phi_1, self.phi_2], dtype=float)


ORIGIN = State(0.0, 0.0)


@dataclass(frozen=True)
class ModelParams:
    """Stokes velocities ``v_inf_*``, Richardson-Zaki exponents ``n_*``."""

    v_inf_1: float
    v_inf_2: float
    n_1: float
    n_2: float
    phi_max: float = 1.0

    def __post_init__(self):
        for name in ("v_inf_1", "v_inf_2", "n_1", "n_2", "phi_max"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def v_inf(self) -> tuple[float, float]:
        return (self.v_inf_1, self.v_inf_2)

    @property
    def n(self) -> tuple[float, float]:
        return (self.n_1, self.n_2)

    def to_dict(self) -> dict:
        return {"v_inf": list(self.v_inf), "n": list(self.n), "phi_max": self.phi_max}

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        try:
            v1, v2 = data["v_inf"]
            n1, n2 = data["n"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed parameter object: {data!r}") from exc
        return cls(v1, v2, n1, n2, data.get("phi_max", 1.0))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_file(cls, path: str | Path) -> "ModelParams":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


PRESETS = {
    "example1": ModelParams(1.0, 0.5, 4.0, 3.0),
    "example2": ModelParams(1.0, 0.5, 4.6, 1.5),
}


def preset(name: str) -> ModelParams:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def _split(s):
    phi1, phi2 = s
    return np.asarray(phi1, dtype=float), np.asarray(phi2, dtype=float)


def _out(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def total_concentration(s) -> float | np.ndarray:
    phi1, phi2 = _split(s)
    return _out(phi1 + phi2)


def free_volume(p: ModelParams, s) -> np.ndarray:
    """``phi_max - phi`` evaluated as ``(phi_max - phi_1) - phi_2``.

    This ordering returns an exact zero for states built as ``(t, 1 - t)``,
    which keeps fractional powers of the free volume clean on the packing line.
    """
    phi1, phi2 = _split(s)
    return (p.phi_max - phi1) - phi2


def in_phase_space(p: ModelParams, s, tol: float = PHASE_TOL) -> bool | np.ndarray:
    phi1, phi2 = _split(s)
    ok = (phi1 >= -tol) & (phi2 >= -tol) & (free_volume(p, s) >= -tol)
    return bool(ok) if ok.ndim == 0 else ok


def _power(base: np.ndarray, expo: float, extended: bool) -> np.ndarray:
    """``base**expo`` with the cut-off / continuation conventions of the model."""
    base = np.asarray(base, dtype=float)
    if not extended:
        inside = (base >= 0.0) & (base <= 1.0)
        safe = np.where(inside, base, 1.0)
        with np.errstate(divide="ignore"):
            val = np.power(safe, expo)
        return np.where(inside, np.where(base == 0.0, 0.0 if expo > 0 else np.inf, val), 0.0)
    if float(expo).is_integer():
        with np.errstate(divide="ignore"):
            return np.power(base, expo)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(base >= 0.0, np.power(np.abs(base), expo), np.nan)


def _power_scalar(base: float, expo: float, extended: bool) -> float:
    """Scalar twin of :func:`_power` (same conventions, no array overhead)."""
    if base != base:
        return 0.0 if not extended else math.nan
    if not extended and (base < 0.0 or base > 1.0):
        return 0.0
    if base == 0.0:
        return 0.0 if expo > 0 else math.inf
    if base < 0.0 and not float(expo).is_integer():
        return math.nan
    return math.pow(base, expo)


def hindered_settling(p: ModelParams, phi, i: int, extended: bool = False):
    """Richardson-Zaki hindrance ``(1 - phi)**(n_i - 1)``, zero outside ``[0, phi_max]``."""
    n = p.n[_species(i)]
    x = p.phi_max - np.asarray(phi, dtype=float)
    return _out(_power(x, n - 1.0, extended))


def _species(i: int) -> int:
    if i not in (1, 2):
        raise ValueError(f"species index must be 1 or 2, got {i}")
    return i - 1


def _slip(p: ModelParams, s, i: int, extended: bool) -> np.ndarray:
    k = _species(i)
    return p.v_inf[k] * _power(free_volume(p, s), p.n[k] - 1.0, extended)


def slip_velocity(p: ModelParams, s, i: int, extended: bool = False):
    """Solid-fluid relative velocity ``u_i = v_inf_i * V_i(phi)``."""
    return _out(_slip(p, s, i, extended))


def slip_velocity_derivative(p: ModelParams, s, i: int, extended: bool = False):
    """``du_i/dphi = -v_inf_i (n_i - 1) (1 - phi)**(n_i - 2)``."""
    k = _species(i)
    n = p.n[k]
    phi1, phi2 = _split(s)
    if phi1.ndim == 0 and phi2.ndim == 0:
        free = (p.phi_max - float(phi1)) - float(phi2)
        return -p.v_inf[k] * (n - 1.0) * _power_scalar(free, n - 2.0, extended)
    with np.errstate(invalid="ignore"):
        d = -p.v_inf[k] * (n - 1.0) * _power(free_volume(p, s), n - 2.0, extended)
    return _out(d)


def velocities(p: ModelParams, s, extended: bool = False):
    """Return ``(u1, u2, v1, v2)`` at ``s``."""
    phi1, phi2 = _split(s)
    if phi1.ndim == 0 and phi2.ndim == 0:
        a, b = float(phi1), float(phi2)
        free = (p.phi_max - a) - b
        u1 = p.v_inf_1 * _power_scalar(free, p.n_1 - 1.0, extended)
        u2 = p.v_inf_2 * _power_scalar(free, p.n_2 - 1.0, extended)
        mix = a * u1 + b * u2
        return np.float64(u1), np.float64(u2), np.float64(u1 - mix), np.float64(u2 - mix)
    u1 = _slip(p, s, 1, extended)
    u2 = _slip(p, s, 2, extended)
    mix = phi1 * u1 + phi2 * u2
    return u1, u2, u1 - mix, u2 - mix


def absolute_velocity(p: ModelParams, s, i: int, extended: bool = False):
    """Absolute particle velocity ``v_i = u_i - Phi^T u``."""
    _species(i)
    _, _, v1, v2 = velocities(p, s, extended)
    return _out(v1 if i == 1 else v2)


def flux(p: ModelParams, s, extended: bool = False):
    """Flux ``(phi_1 v_1, phi_2 v_2)``; identically zero outside the phase space
    unless ``extended`` is set."""
    phi1, phi2 = _split(s)
    _, _, v1, v2 = velocities(p, s, extended)
    if phi1.ndim == 0 and phi2.ndim == 0:
        a, b = float(phi1), float(phi2)
        if not extended and not (a >= -PHASE_TOL and b >= -PHASE_TOL
                                 and (p.phi_max - a) - b >= -PHASE_TOL):
            return 0.0, 0.0
        return float(a * v1), float(b * v2)
    f1 = phi1 * v1
    f2 = phi2 * v2
    if not extended:
        inside = np.asarray(in_phase_space(p, s))
        f1 = np.where(inside, f1, 0.0)
        f2 = np.where(inside, f2, 0.0)
    return _out(f1), _out(f2)


def flux_array(p: ModelParams, s, extended: bool = False) -> np.ndarray:
    return np.array(flux(p, s, extended))


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    slip_inequality_holds: bool = True
    ordering_holds: bool = False

    @property
    def valid(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "violations": list(self.violations),
            "slip_inequality_holds": self.slip_inequality_holds,
            "ordering_holds": self.ordering_holds,
        }


def validate_params(p: ModelParams, samples: int = 201) -> ValidationReport:
    """Check the parameter inequalities (velocity ordering, exponent ordering,
    unit maximum packing).

    Also evaluates ``u_i'(1 - phi) - u_i < 0`` on a sample of ``phi`` and whether
    the strict-hyperbolicity ordering ``v_inf_1 > v_inf_2`` with ``n_1 < n_2``
    holds (it cannot when both orderings hold).

    Raises ValueError for non-finite or non-positive values.
    """
    values = {"v_inf_1": p.v_inf_1, "v_inf_2": p.v_inf_2, "n_1": p.n_1, "n_2": p.n_2,
              "phi_max": p.phi_max}
    for name, value in values.items():
        if not math.isfinite(value) or value <= 0.0:
            raise ValueError(f"parameter {name} must be finite and positive, got {value}")

    report = ValidationReport()
    if not p.v_inf_1 > p.v_inf_2:
        report.violations.append("velocity ordering: v_inf_1 > v_inf_2 > 0 violated")
    if not (p.n_1 > p.n_2 > 1.0):
        report.violations.append("exponent ordering: n_1 > n_2 > 1 violated")
    if p.phi_max != 1.0:
        report.violations.append("maximum packing: phi_max == 1 violated")

    phi = np.linspace(0.0, p.phi_max, samples, endpoint=False)
    s = (phi, np.zeros_like(phi))
    for i in (1, 2):
        u = _slip(p, s, i, False)
        du = np.asarray(slip_velocity_derivative(p, s, i))
        if not np.all(du * (1.0 - phi) - u < 0.0):
            report.slip_inequality_holds = False
    report.ordering_holds = p.v_inf_1 > p.v_inf_2 and p.n_1 < p.n_2
    return report
