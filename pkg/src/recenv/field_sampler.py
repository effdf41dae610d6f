"""Sampling Gaussian environments on finite point sets.

A sample is ``W = L xi`` with ``L`` the Cholesky factor of the covariance
matrix plus a diagonal jitter and ``xi`` standard normal from the stream
``(seed, "field")``.  Points with zero variance (the origin for pinned
kernels) are removed before factorization and receive the value 0 exactly.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import ArgumentError, DomainError, NumericalError
from .kernels import CovarianceKernel, covariance_matrix, kernel_from_spec
from .rng import stream

logger = logging.getLogger(__name__)

DEFAULT_JITTER = 1e-10
MAX_JITTER = 1e-6


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular grid ``lower + k * spacing``, ``k = 0..shape-1`` per axis."""

    lower: tuple[float, ...]
    spacing: tuple[float, ...]
    shape: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "spacing", tuple(float(v) for v in self.spacing))
        object.__setattr__(self, "shape", tuple(int(v) for v in self.shape))
        if not len(self.lower) == len(self.spacing) == len(self.shape):
            raise ArgumentError("grid lower, spacing and shape must have equal length")
        if any(s <= 0 for s in self.spacing) or any(n < 2 for n in self.shape):
            raise ArgumentError("grid needs positive spacing and >= 2 nodes per axis")

    @classmethod
    def centered(cls, half_width: float, nodes: int, d: int) -> "Grid":
        """Grid over ``[-L, L]^d`` with an odd node count, so the origin is a node exactly."""
        if nodes < 3 or nodes % 2 == 0:
            raise ArgumentError(f"centered grid needs an odd node count >= 3, got {nodes}")
        m = nodes // 2
        h = half_width / m
        return cls(lower=(-m * h,) * d, spacing=(h,) * d, shape=(nodes,) * d)

    @property
    def d(self) -> int:
        return len(self.shape)

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(lo + (n - 1) * h for lo, h, n in zip(self.lower, self.spacing, self.shape))

    def axes(self) -> list[np.ndarray]:
        # integer offsets keep the central node of a centered grid at exactly 0
        out = []
        for lo, h, n in zip(self.lower, self.spacing, self.shape):
            m = round(-lo / h)
            if abs(lo + m * h) < 1e-12 * h:
                out.append((np.arange(n) - m) * h)
            else:
                out.append(lo + np.arange(n) * h)
        return out

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def spec(self) -> dict:
        return {"lower": list(self.lower), "spacing": list(self.spacing), "shape": list(self.shape)}


@dataclass(frozen=True)
class FieldSample:
    """Values of an environment at a finite point set.

    ``values`` are ordered like ``points``; on a grid, ``points`` is
    ``grid.points()`` (C order).  ``pinned`` asserts ``W(0) = 0`` whenever the
    origin is a point; synthetic environments in tests may switch it off.
    """

    points: np.ndarray
    values: np.ndarray
    kernel: dict
    seed: int | None
    jitter: float
    grid: Grid | None = None
    pinned: bool = True

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if pts.ndim != 2 or vals.shape != (len(pts),):
            raise ArgumentError("field needs (n, d) points and n values")
        if not np.all(np.isfinite(vals)):
            raise NumericalError("field values must be finite")
        if self.grid is not None and len(pts) != int(np.prod(self.grid.shape)):
            raise ArgumentError("grid field must have one value per grid node")
        if self.pinned:
            origin = ~pts.any(axis=1)
            if np.any(vals[origin] != 0.0):
                raise ArgumentError("pinned field must vanish at the origin")
        pts.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @classmethod
    def from_function(cls, f, grid: Grid, pinned: bool = True, label: str = "function") -> "FieldSample":
        """Grid field with values ``f(points)`` (used for closed-form environments)."""
        pts = grid.points()
        return cls(pts, np.asarray(f(pts), dtype=float), {"kind": label}, None, 0.0, grid, pinned)

    def grid_values(self) -> np.ndarray:
        if self.grid is None:
            raise ArgumentError("field is not defined on a rectangular grid")
        return self.values.reshape(self.grid.shape)


class FieldSampler:
    """Factorizes ``covariance_matrix(kernel, points)`` once and draws many samples."""

    def __init__(self, kernel: CovarianceKernel, points, jitter: float = DEFAULT_JITTER, grid: Grid | None = None):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or len(pts) == 0:
            raise ArgumentError("sampling needs a nonempty (n, d) point array")
        if pts.shape[1] != kernel.d:
            raise ArgumentError(f"points have dimension {pts.shape[1]}, kernel has {kernel.d}")
        if jitter < 0:
            raise ArgumentError(f"jitter must be >= 0, got {jitter}")
        self.kernel = kernel
        self.points = pts
        self.grid = grid
        self.cov = covariance_matrix(kernel, pts)
        diag = np.diag(self.cov)
        if np.any(diag < 0):
            raise NumericalError("covariance matrix has a negative diagonal entry")
        self.active = np.flatnonzero(diag > 0.0)
        self.jitter, self.factor = self._factorize(jitter)

    def _factorize(self, jitter: float):
        sub = self.cov[np.ix_(self.active, self.active)]
        if len(self.active) == 0:
            return jitter, np.zeros((0, 0))
        # work on the correlation matrix: jitter is then relative to each variance,
        # which keeps multi-scale point sets (radii spanning 2^30) factorizable
        scale = np.sqrt(np.diag(sub))
        corr = sub / np.outer(scale, scale)
        eye = np.eye(len(sub))
        level = jitter
        while True:
            try:
                chol = scipy.linalg.cholesky(corr + level * eye, lower=True, check_finite=True)
                break
            except np.linalg.LinAlgError:
                nxt = DEFAULT_JITTER if level == 0 else level * 10.0
                if nxt > MAX_JITTER * (1 + 1e-9):
                    evmin = float(np.linalg.eigvalsh(corr)[0])
                    raise NumericalError(
                        f"Cholesky failed with jitter up to {level:g} on {len(sub)} points; "
                        f"smallest correlation eigenvalue {evmin:.3e}"
                    ) from None
                logger.info("Cholesky failed at jitter %g, retrying with %g", level, nxt)
                level = nxt
        return level, scale[:, None] * chol

    def draw(self, rng: np.random.Generator, count: int | None = None) -> np.ndarray:
        """One sample (shape ``(n,)``) or ``count`` samples (shape ``(count, n)``)."""
        k = 1 if count is None else count
        xi = rng.standard_normal((len(self.active), k))
        out = np.zeros((len(self.points), k))
        out[self.active] = self.factor @ xi
        return out[:, 0] if count is None else out.T

    def sample(self, seed: int) -> FieldSample:
        values = self.draw(stream(seed, "field"))
        return FieldSample(self.points, values, self.kernel.spec(), int(seed), self.jitter, self.grid)


def sample_field(kernel: CovarianceKernel, points, seed: int, jitter: float = DEFAULT_JITTER) -> FieldSample:
    """Draw one environment sample at ``points``; deterministic in all arguments."""
    return FieldSampler(kernel, points, jitter).sample(seed)


def sample_grid_field(kernel: CovarianceKernel, grid: Grid, seed: int, jitter: float = DEFAULT_JITTER) -> FieldSample:
    return FieldSampler(kernel, grid.points(), jitter, grid=grid).sample(seed)


@dataclass
class CovarianceCheck:
    empirical: np.ndarray
    exact: np.ndarray
    max_deviation: float
    band: float
    num_samples: int
    jitter: float = field(default=0.0)

    @property
    def within_band(self) -> bool:
        return self.max_deviation <= self.band


def empirical_covariance(kernel: CovarianceKernel, points, num_samples: int, seed: int) -> CovarianceCheck:
    """Compare the sample second moment of ``num_samples`` draws with the exact covariance.

    The band is ``4 max_ij sqrt(C_ii C_jj + C_ij^2) / sqrt(N)``, four standard
    deviations of the known-mean estimator ``(1/N) sum W_i W_j``.
    """
    if num_samples < 100:
        raise ArgumentError(f"num_samples must be >= 100, got {num_samples}")
    sampler = FieldSampler(kernel, points)
    draws = sampler.draw(stream(seed, "field.empirical"), num_samples)
    emp = draws.T @ draws / num_samples
    c = sampler.cov
    dev = float(np.max(np.abs(emp - c)))
    dg = np.diag(c)
    band = 4.0 * float(np.sqrt(np.max(np.abs(np.outer(dg, dg) + c**2)))) / np.sqrt(num_samples)
    return CovarianceCheck(emp, c, dev, band, num_samples, sampler.jitter)


def _require_grid(f: FieldSample) -> Grid:
    if f.grid is None:
        raise ArgumentError("interpolation needs a field on a rectangular grid")
    return f.grid


def _interp_many(grid: Grid, table: np.ndarray, x: np.ndarray) -> np.ndarray:
    lower = np.asarray(grid.lower)
    h = np.asarray(grid.spacing)
    shape = np.asarray(grid.shape)
    u = (x - lower) / h
    near = np.rint(u)
    # snap rounding noise so queries at nodes return node values exactly
    u = np.where(np.abs(u - near) <= 1e-12 * np.maximum(1.0, np.abs(near)), near, u)
    i = np.clip(np.floor(u).astype(np.int64), 0, shape - 2)
    frac = u - i
    out = np.zeros(len(x))
    d = grid.d
    for corner in range(1 << d):
        w = np.ones(len(x))
        idx = []
        for k in range(d):
            bit = (corner >> k) & 1
            w = w * (frac[:, k] if bit else 1.0 - frac[:, k])
            idx.append(i[:, k] + bit)
        out += w * table[tuple(idx)]
    return out


def _inside(grid: Grid, x: np.ndarray, margin: float) -> np.ndarray:
    lo = np.asarray(grid.lower) + margin
    hi = np.asarray(grid.upper) - margin
    return np.all((x >= lo) & (x <= hi), axis=-1)


def interpolate(field: FieldSample, x) -> np.ndarray | float:
    """Multilinear interpolation of a grid field at one point or an ``(m, d)`` array."""
    grid = _require_grid(field)
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != grid.d:
        raise ArgumentError(f"query dimension {pts.shape[1]} does not match grid dimension {grid.d}")
    if not np.all(_inside(grid, pts, 0.0)):
        raise DomainError("interpolation query outside the grid box")
    out = _interp_many(grid, field.grid_values(), pts)
    return float(out[0]) if single else out


def gradient(field: FieldSample, x, delta: float) -> np.ndarray:
    """Central-difference gradient of the interpolant with step ``delta``."""
    grid = _require_grid(field)
    if not delta > 0:
        raise ArgumentError(f"gradient step must be positive, got {delta}")
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if not np.all(_inside(grid, pts, delta)):
        raise DomainError("gradient query closer than delta to the grid boundary")
    out = _grad_many(grid, field.grid_values(), pts, delta)
    return out[0] if single else out


def _grad_many(grid: Grid, table: np.ndarray, pts: np.ndarray, delta: float) -> np.ndarray:
    out = np.empty_like(pts)
    for k in range(grid.d):
        step = np.zeros(grid.d)
        step[k] = delta
        out[:, k] = (_interp_many(grid, table, pts + step) - _interp_many(grid, table, pts - step)) / (2.0 * delta)
    return out


def write_field(field: FieldSample, stem) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` (header ``x1,...,xd,value``) and ``<stem>.json``."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    csv_path = stem.with_suffix(".csv")
    json_path = stem.with_suffix(".json")
    header = ",".join([f"x{i + 1}" for i in range(field.d)] + ["value"])
    np.savetxt(csv_path, np.column_stack([field.points, field.values]), delimiter=",",
               header=header, comments="", fmt="%.17g")
    sidecar = {
        "kernel": field.kernel,
        "seed": field.seed,
        "jitter": field.jitter,
        "grid": None if field.grid is None else field.grid.spec(),
        "pinned": field.pinned,
    }
    json_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def read_field(stem) -> FieldSample:
    stem = Path(stem)
    meta = json.loads(stem.with_suffix(".json").read_text())
    data = np.loadtxt(stem.with_suffix(".csv"), delimiter=",", skiprows=1, ndmin=2)
    grid = None if meta["grid"] is None else Grid(**meta["grid"])
    return FieldSample(data[:, :-1], data[:, -1], meta["kernel"], meta["seed"], meta["jitter"],
                       grid, meta.get("pinned", True))


def field_kernel(field: FieldSample) -> CovarianceKernel:
    """Rebuild the kernel a sample was drawn from."""
    return kernel_from_spec(field.kernel)
