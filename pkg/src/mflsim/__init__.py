"""Mean-field Langevin particle simulations.

Simulates one-dimensional mean-field Langevin equations through their
N-particle interacting system and compares the standard Euler scheme
against the non-Markovian (Leimkuhler--Matthews) Euler scheme, including
stationary-density error tables, weak/strong convergence order studies,
propagation-of-chaos sweeps and variation-process decay diagnostics.
"""

from .model import (
    ModelSpec,
    ModelError,
    Quadratic,
    CubicPerturbed,
    QuadraticInteraction,
    ZeroInteraction,
    build_model,
)
from .rng import NoiseSource
from .ensemble import ParticleEnsemble
from .integrators import SchemeConfig, simulate

__version__ = "0.1.0"

__all__ = [
    "ModelSpec",
    "ModelError",
    "Quadratic",
    "CubicPerturbed",
    "QuadraticInteraction",
    "ZeroInteraction",
    "build_model",
    "NoiseSource",
    "ParticleEnsemble",
    "SchemeConfig",
    "simulate",
    "__version__",
]
