"""Numerical recurrence checks for Brownian motion in random environments.

The package samples Gaussian environments (chiefly fractional Brownian
fields), evaluates the recurrence criteria that apply to them by quadrature
and Monte Carlo, and simulates the diffusion ``dY = dB - 1/2 grad W dt`` with
its random time change.
"""

__version__ = "0.1.0"

from .errors import ArgumentError, DomainError, NumericalError, RecenvError
from .kernels import (
    FractionalBrownianKernel,
    PushforwardKernel,
    ScalingSpec,
    TabulatedKernel,
    ZeroKernel,
    covariance_matrix,
    eval_kernel,
    pushforward_covariance,
)
from .geometry import (
    ShellGeometry,
    WeightedPointSet,
    radial_grid,
    shell_points,
    sphere_area,
    sphere_points,
)
from .field_sampler import (
    FieldSample,
    FieldSampler,
    Grid,
    empirical_covariance,
    gradient,
    interpolate,
    sample_field,
)

__all__ = [
    "ArgumentError",
    "DomainError",
    "NumericalError",
    "RecenvError",
    "FractionalBrownianKernel",
    "PushforwardKernel",
    "ScalingSpec",
    "TabulatedKernel",
    "ZeroKernel",
    "covariance_matrix",
    "eval_kernel",
    "pushforward_covariance",
    "ShellGeometry",
    "WeightedPointSet",
    "radial_grid",
    "shell_points",
    "sphere_area",
    "sphere_points",
    "FieldSample",
    "FieldSampler",
    "Grid",
    "empirical_covariance",
    "gradient",
    "interpolate",
    "sample_field",
]
