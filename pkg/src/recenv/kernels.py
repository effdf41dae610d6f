"""Covariance kernels of centered Gaussian environments.

The central kernel is the fractional Brownian field (fBf) with Hurst
parameter ``H``::

    K(x, y) = 1/2 (|x|^{2H} + |y|^{2H} - |x - y|^{2H})

which is pinned at the origin (``K(x, 0) = 0``) and homogeneous of degree
``2H``.  Kernels evaluate on arrays of points of shape ``(n, d)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.spatial.distance import cdist

from .errors import ArgumentError, DomainError


def _as_points(x, d: int) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != d:
        raise ArgumentError(f"expected points of dimension {d}, got shape {np.shape(x)}")
    return pts


def _norm_pow(pts: np.ndarray, p: float) -> np.ndarray:
    # 0 ** p == 0 for p > 0, the continuous limit at the origin
    return np.sqrt(np.einsum("ij,ij->i", pts, pts)) ** p


class CovarianceKernel:
    """Base class.  Subclasses implement :meth:`pairwise` and :meth:`matrix`."""

    kind: str = "abstract"
    d: int

    def pairwise(self, x, y) -> np.ndarray:
        """``K(x_i, y_i)`` for two equally long point arrays."""
        raise NotImplementedError

    def matrix(self, x, y) -> np.ndarray:
        """``K(x_i, y_j)`` as an ``(n, m)`` array."""
        raise NotImplementedError

    def cross_scaled(self, x, y, lam: float) -> np.ndarray:
        """``K(lam * x_i, y_j)`` as an ``(n, m)`` array."""
        return self.matrix(lam * _as_points(x, self.d), y)

    def spec(self) -> dict:
        return {"kind": self.kind, "d": self.d}

    def __call__(self, x, y) -> float:
        return eval_kernel(self, x, y)


@dataclass(frozen=True)
class FractionalBrownianKernel(CovarianceKernel):
    H: float
    d: int = 2
    kind = "fbf"

    def __post_init__(self):
        if not 0.0 < self.H < 1.0:
            raise ArgumentError(f"Hurst parameter must lie in (0, 1), got {self.H}")
        if self.d < 1:
            raise ArgumentError(f"dimension must be >= 1, got {self.d}")

    def pairwise(self, x, y):
        x = _as_points(x, self.d)
        y = _as_points(y, self.d)
        if len(x) != len(y):
            raise ArgumentError("pairwise evaluation needs equally many x and y points")
        p = 2.0 * self.H
        return 0.5 * (_norm_pow(x, p) + _norm_pow(y, p) - _norm_pow(x - y, p))

    def matrix(self, x, y):
        x = _as_points(x, self.d)
        y = _as_points(y, self.d)
        p = 2.0 * self.H
        nx = _norm_pow(x, p)
        ny = _norm_pow(y, p)
        return 0.5 * ((nx[:, None] + ny[None, :]) - cdist(x, y) ** p)

    def cross_scaled(self, x, y, lam):
        # Writes |lam x - y|^{2H} = (lam |x|)^{2H} (1 + u)^H so the large terms
        # cancel analytically; needed once lam^{2H} exceeds ~1e12.
        x = _as_points(x, self.d)
        y = _as_points(y, self.d)
        xx = np.einsum("ij,ij->i", x, x)
        yy = np.einsum("ij,ij->i", y, y)
        xy = x @ y.T
        safe = np.where(xx > 0.0, xx, 1.0)
        u = (yy[None, :] / lam**2 - 2.0 * xy / lam) / safe[:, None]
        u = np.maximum(u, -1.0)
        with np.errstate(divide="ignore"):
            rel = np.expm1(self.H * np.log1p(u))
        big = (lam**2 * xx) ** self.H
        out = 0.5 * (yy[None, :] ** self.H - big[:, None] * rel)
        out[xx == 0.0, :] = 0.0
        return out

    def spec(self):
        return {"kind": self.kind, "H": self.H, "d": self.d}


@dataclass(frozen=True)
class ZeroKernel(CovarianceKernel):
    d: int = 2
    kind = "zero"

    def pairwise(self, x, y):
        x = _as_points(x, self.d)
        y = _as_points(y, self.d)
        if len(x) != len(y):
            raise ArgumentError("pairwise evaluation needs equally many x and y points")
        return np.zeros(len(x))

    def matrix(self, x, y):
        return np.zeros((len(_as_points(x, self.d)), len(_as_points(y, self.d))))


@dataclass(frozen=True, eq=False)
class TabulatedKernel(CovarianceKernel):
    """Kernel given by a table on a rectangular grid of the joint ``(x, y)`` space.

    ``axes`` holds ``2d`` increasing coordinate arrays, the first ``d`` for
    ``x`` and the last ``d`` for ``y``; they must coincide so that the
    symmetrized evaluation ``(T(x, y) + T(y, x)) / 2`` stays on the table.
    Queries off the table raise :class:`DomainError`.
    """

    axes: Sequence[Sequence[float]]
    values: np.ndarray
    d: int = 2
    kind = "tabulated"
    _interp: RegularGridInterpolator = field(init=False, repr=False)

    def __post_init__(self):
        axes = [np.asarray(a, dtype=float) for a in self.axes]
        vals = np.asarray(self.values, dtype=float)
        if len(axes) != 2 * self.d:
            raise ArgumentError(f"tabulated kernel in d={self.d} needs {2 * self.d} axes, got {len(axes)}")
        for a, b in zip(axes[: self.d], axes[self.d:]):
            if a.shape != b.shape or not np.array_equal(a, b):
                raise ArgumentError("tabulated kernel needs identical x and y axes")
        if vals.shape != tuple(len(a) for a in axes):
            raise ArgumentError(f"table shape {vals.shape} does not match axes")
        object.__setattr__(self, "axes", tuple(axes))
        object.__setattr__(self, "values", vals)
        object.__setattr__(
            self, "_interp", RegularGridInterpolator(axes, vals, method="linear", bounds_error=True)
        )

    def _lookup(self, q: np.ndarray) -> np.ndarray:
        try:
            return self._interp(q)
        except ValueError as exc:
            raise DomainError(f"tabulated kernel queried outside its grid: {exc}") from None

    def pairwise(self, x, y):
        x = _as_points(x, self.d)
        y = _as_points(y, self.d)
        if len(x) != len(y):
            raise ArgumentError("pairwise evaluation needs equally many x and y points")
        return 0.5 * (self._lookup(np.hstack([x, y])) + self._lookup(np.hstack([y, x])))

    def matrix(self, x, y):
        x = _as_points(x, self.d)
        y = _as_points(y, self.d)
        xi = np.repeat(x, len(y), axis=0)
        yj = np.tile(y, (len(x), 1))
        return self.pairwise(xi, yj).reshape(len(x), len(y))

    def spec(self):
        return {
            "kind": self.kind,
            "d": self.d,
            "axes": [a.tolist() for a in self.axes],
            "values": self.values.tolist(),
        }


@dataclass(frozen=True)
class ScalingSpec:
    """Scaling ``T_t f(x) = base^{-alpha t} f(base^t x)``.

    ``base = 2`` gives the continuous family, ``base = r > 1`` with integer
    ``t`` the discrete one.
    """

    alpha: float
    base: float = 2.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ArgumentError(f"alpha must be positive, got {self.alpha}")
        if not self.base > 1:
            raise ArgumentError(f"base must exceed 1, got {self.base}")


@dataclass(frozen=True)
class PushforwardKernel(CovarianceKernel):
    """Covariance of ``T_t W`` when ``W`` has covariance ``base_kernel``."""

    base_kernel: CovarianceKernel
    scaling: ScalingSpec
    t: float
    kind = "pushforward"

    @property
    def d(self) -> int:  # type: ignore[override]
        return self.base_kernel.d

    @property
    def _lam(self) -> float:
        return self.scaling.base**self.t

    @property
    def _factor(self) -> float:
        return self.scaling.base ** (-2.0 * self.scaling.alpha * self.t)

    def pairwise(self, x, y):
        lam = self._lam
        x = _as_points(x, self.d)
        y = _as_points(y, self.d)
        return self._factor * self.base_kernel.pairwise(lam * x, lam * y)

    def matrix(self, x, y):
        lam = self._lam
        x = _as_points(x, self.d)
        y = _as_points(y, self.d)
        return self._factor * self.base_kernel.matrix(lam * x, lam * y)

    def spec(self):
        return {
            "kind": self.kind,
            "base_kernel": self.base_kernel.spec(),
            "alpha": self.scaling.alpha,
            "base": self.scaling.base,
            "t": self.t,
        }


def eval_kernel(kernel: CovarianceKernel, x, y) -> float:
    """Evaluate ``K(x, y)`` for two single points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (kernel.d,) or y.shape != (kernel.d,):
        raise ArgumentError(f"points must have shape ({kernel.d},), got {x.shape} and {y.shape}")
    return float(kernel.pairwise(x[None, :], y[None, :])[0])


def covariance_matrix(kernel: CovarianceKernel, points) -> np.ndarray:
    """Covariance matrix of the field at ``points``; symmetric by construction."""
    pts = _as_points(points, kernel.d)
    if len(pts) == 0:
        raise ArgumentError("covariance_matrix needs at least one point")
    m = kernel.matrix(pts, pts)
    upper = np.triu(m)
    return upper + np.triu(m, 1).T


def pushforward_covariance(kernel: CovarianceKernel, scaling: ScalingSpec, t: float) -> PushforwardKernel:
    return PushforwardKernel(kernel, scaling, float(t))


def kernel_from_spec(spec: dict) -> CovarianceKernel:
    """Build a kernel from its config dictionary, e.g. ``{"kind": "fbf", "H": 0.5, "d": 2}``."""
    kind = spec.get("kind")
    d = int(spec.get("d", 2))
    if kind == "fbf":
        return FractionalBrownianKernel(H=float(spec["H"]), d=d)
    if kind == "zero":
        return ZeroKernel(d=d)
    if kind == "tabulated":
        return TabulatedKernel(axes=spec["axes"], values=np.asarray(spec["values"]), d=d)
    raise ArgumentError(f"unknown kernel kind {kind!r}")
