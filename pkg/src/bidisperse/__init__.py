"""Riemann-problem toolkit for the two-species kinematic sedimentation model."""

__version__ = "0.1.0"

from .model import ModelParams, State, preset  # noqa: E402

__all__ = ["ModelParams", "State", "preset", "__version__"]
