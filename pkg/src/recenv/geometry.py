"""Shells, spheres and radial grids with quadrature weights.

``E_n`` is either the ball ``{|x| < r^n}`` or the box ``{max_i |x_i| < r^n}``
and ``D_n = E_n minus E_{n-1}``.  The sphere measure is the unnormalized
surface measure on ``S^{d-1}`` with total mass ``sphere_area(d)``.

For ``d <= 3`` every rule is deterministic.  Beyond that the rules fall back
to seeded (stratified) Monte Carlo with equal weights inside each stratum.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import product
from math import gamma, pi

import numpy as np

from .errors import ArgumentError
from .rng import stream


class Family(str, Enum):
    BALL = "ball"
    BOX = "box"


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere ``S^{d-1}`` in ``R^d``."""
    if d < 1:
        raise ArgumentError(f"dimension must be >= 1, got {d}")
    return 2.0 * pi ** (d / 2.0) / gamma(d / 2.0)


def circle_factor(d: int) -> float:
    """``c_d``: 1 for ``d = 2``, otherwise the surface area of ``S^{d-2}``."""
    if d < 2:
        raise ArgumentError(f"c_d needs d >= 2, got {d}")
    return 1.0 if d == 2 else sphere_area(d - 1)


@dataclass(frozen=True)
class WeightedPointSet:
    points: np.ndarray
    weights: np.ndarray
    domain: str
    mc: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pts.ndim != 2 or len(pts) != len(w):
            raise ArgumentError("points must be (n, d) with one weight per point")
        if np.any(w <= 0):
            raise ArgumentError("quadrature weights must be positive")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)

    def integrate(self, values) -> float:
        """Quadrature of the nodal ``values``."""
        return float(np.dot(self.weights, values))

    def integrate_with_error(self, values) -> tuple[float, float]:
        """Quadrature and a standard-error estimate (0 for deterministic rules)."""
        values = np.asarray(values, dtype=float)
        est = float(np.dot(self.weights, values))
        if not self.mc or len(values) < 2:
            return est, 0.0
        # equal-weight MC: spread of measure * f over the nodes
        contrib = self.weights * len(values) * values
        return est, float(np.std(contrib, ddof=1) / np.sqrt(len(values)))


@dataclass(frozen=True)
class ShellGeometry:
    family: Family
    r: float
    n: int
    d: int

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not self.r > 1:
            raise ArgumentError(f"shell ratio r must exceed 1, got {self.r}")
        if self.d < 2:
            raise ArgumentError(f"shell dimension must be >= 2, got {self.d}")

    @property
    def inner(self) -> float:
        return self.r ** (self.n - 1)

    @property
    def outer(self) -> float:
        return self.r**self.n

    def gauge(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if self.family is Family.BALL:
            return np.linalg.norm(pts, axis=-1)
        return np.max(np.abs(pts), axis=-1)

    def contains(self, points) -> np.ndarray:
        g = self.gauge(points)
        return (g >= self.inner) & (g < self.outer)

    def volume(self) -> float:
        if self.family is Family.BALL:
            unit_ball = sphere_area(self.d) / self.d
            return unit_ball * (self.outer**self.d - self.inner**self.d)
        return (2 * self.outer) ** self.d - (2 * self.inner) ** self.d


def _gauss(a: float, b: float, m: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(m)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _target_count(resolution: int) -> int:
    return max(64, resolution * resolution // 10)


def _ball_shell(geom: ShellGeometry, resolution: int, seed: int) -> WeightedPointSet:
    d = geom.d
    if d <= 3:
        s, ws = _gauss(geom.inner, geom.outer, max(4, resolution // 10))
        sph = sphere_points(d, resolution)
        pts = (s[:, None, None] * sph.points[None, :, :]).reshape(-1, d)
        w = ((ws * s ** (d - 1))[:, None] * sph.weights[None, :]).ravel()
        return WeightedPointSet(pts, w, "shell")
    # stratified in s^d so every stratum carries the same volume
    count = _target_count(resolution)
    rng = stream(seed, "geometry.ball_shell", d, geom.n)
    lo, hi = geom.inner**d, geom.outer**d
    u = (np.arange(count) + rng.uniform(size=count)) / count
    s = (lo + u * (hi - lo)) ** (1.0 / d)
    s = np.clip(s, geom.inner, np.nextafter(geom.outer, 0.0))
    g = rng.standard_normal((count, d))
    dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
    w = np.full(count, geom.volume() / count)
    return WeightedPointSet(s[:, None] * dirs, w, "shell", mc=True)


def _box_blocks(geom: ShellGeometry):
    lo, hi = geom.inner, geom.outer
    pieces = [(-hi, -lo), (-lo, lo), (lo, hi)]
    for combo in product(range(3), repeat=geom.d):
        if all(c == 1 for c in combo):
            continue
        yield [pieces[c] for c in combo]


def _box_shell(geom: ShellGeometry, resolution: int, seed: int) -> WeightedPointSet:
    d = geom.d
    blocks = list(_box_blocks(geom))
    pts_all, w_all = [], []
    if d <= 3:
        m = max(2, int(round((_target_count(resolution) / len(blocks)) ** (1.0 / d))))
        for block in blocks:
            rules = [_gauss(a, b, m) for a, b in block]
            grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
            wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
            pts_all.append(np.stack([g.ravel() for g in grids], axis=1))
            w_all.append(np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1))
        return WeightedPointSet(np.concatenate(pts_all), np.concatenate(w_all), "shell")
    rng = stream(seed, "geometry.box_shell", d, geom.n)
    total = _target_count(resolution)
    vols = np.array([np.prod([b - a for a, b in block]) for block in blocks])
    counts = np.maximum(1, np.round(total * vols / vols.sum()).astype(int))
    for block, vol, k in zip(blocks, vols, counts):
        lo = np.array([a for a, _ in block])
        hi = np.array([b for _, b in block])
        pts = lo + rng.uniform(size=(k, d)) * (hi - lo)
        pts_all.append(pts)
        w_all.append(np.full(k, vol / k))
    pts = np.concatenate(pts_all)
    # uniform draws can land on the excluded inner face with probability 0;
    # guard anyway so membership is a hard guarantee
    keep = geom.contains(pts)
    return WeightedPointSet(pts[keep], np.concatenate(w_all)[keep], "shell", mc=True)


def shell_points(geom: ShellGeometry, resolution: int, seed: int = 0) -> WeightedPointSet:
    """Quadrature rule on the shell ``D_n``.

    Ball shells in ``d <= 3`` use a Gauss-Legendre radial rule times
    :func:`sphere_points`; box shells split ``[-r^n, r^n]^d`` into ``3^d``
    sub-boxes and apply tensor Gauss-Legendre on the ``3^d - 1`` outer ones.
    All nodes are interior, so they pass :meth:`ShellGeometry.contains`.
    """
    if resolution < 4:
        raise ArgumentError(f"shell resolution must be >= 4, got {resolution}")
    if geom.family is Family.BALL:
        return _ball_shell(geom, resolution, seed)
    return _box_shell(geom, resolution, seed)


def _fibonacci_sphere(n: int) -> np.ndarray:
    golden = pi * (3.0 - np.sqrt(5.0))
    k = np.arange(n)
    z = 1.0 - (2.0 * k + 1.0) / n
    rho = np.sqrt(1.0 - z * z)
    phi = golden * k
    pts = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def sphere_points(d: int, resolution: int, seed: int = 0) -> WeightedPointSet:
    """Equal-weight rule on ``S^{d-1}`` with total mass ``sphere_area(d)``.

    ``d = 2``: equally spaced angles starting at ``e_1``.  ``d = 3``: Fibonacci
    lattice.  ``d >= 4``: normalized Gaussian directions from the seeded stream.
    """
    if d < 2:
        raise ArgumentError(f"sphere_points needs d >= 2, got {d}")
    if resolution < 8:
        raise ArgumentError(f"sphere resolution must be >= 8, got {resolution}")
    if d == 2:
        theta = 2.0 * pi * np.arange(resolution) / resolution
        pts = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        w = np.full(resolution, 2.0 * pi / resolution)
        return WeightedPointSet(pts, w, "sphere")
    if d == 3:
        w = np.full(resolution, 4.0 * pi / resolution)
        return WeightedPointSet(_fibonacci_sphere(resolution), w, "sphere")
    g = stream(seed, "geometry.sphere", d).standard_normal((resolution, d))
    pts = g / np.linalg.norm(g, axis=1, keepdims=True)
    w = np.full(resolution, sphere_area(d) / resolution)
    return WeightedPointSet(pts, w, "sphere", mc=True)


def radial_grid(s_min: float, s_max: float, count: int) -> WeightedPointSet:
    """Log-spaced nodes on ``[s_min, s_max]`` with trapezoid weights for ``ds``.

    The trapezoid rule is applied in ``u = log s``, so ``ds = s du`` and the
    rule is exact for ``f(s) = 1/s``.  Points are returned as a ``(count, 1)``
    array.
    """
    if not (1.0 <= s_min < s_max) or not np.isfinite(s_max):
        raise ArgumentError(f"radial grid needs 1 <= s_min < s_max, got [{s_min}, {s_max}]")
    if count < 2:
        raise ArgumentError(f"radial grid needs count >= 2, got {count}")
    u = np.linspace(np.log(s_min), np.log(s_max), count)
    s = np.exp(u)
    s[0], s[-1] = s_min, s_max
    du = u[1] - u[0]
    w = np.full(count, du)
    w[0] = w[-1] = 0.5 * du
    return WeightedPointSet(s[:, None], w * s, "radial")


def radial_sphere_points(d: int, radii, sphere_resolution: int, seed: int = 0) -> np.ndarray:
    """Points ``s * theta`` for every radius ``s`` (outer loop) and sphere node ``theta``."""
    sph = sphere_points(d, sphere_resolution, seed)
    radii = np.asarray(radii, dtype=float)
    return (radii[:, None, None] * sph.points[None, :, :]).reshape(-1, d)


def shell_family_points(family, r: float, d: int, n_max: int, resolution: int, seed: int = 0) -> np.ndarray:
    """Concatenated quadrature nodes of ``D_1, ..., D_{n_max}``."""
    if n_max < 1:
        raise ArgumentError(f"n_max must be >= 1, got {n_max}")
    return np.concatenate(
        [shell_points(ShellGeometry(family, r, n, d), resolution, seed).points for n in range(1, n_max + 1)]
    )
