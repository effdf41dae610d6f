"""Euler-Maruyama simulation of Brownian motion in an environment.

The process ``Y`` solves ``dY = dB - 1/2 grad W(Y) dt`` where ``grad W`` is the
central-difference gradient of the multilinear interpolant of a sampled grid
field, so the mollification scale is the grid spacing.  The random clock
``tau_t = int_0^t exp(-W(Y_s)) ds`` and its inverse ``A`` turn ``Y`` into
``X(t) = Y(A_t)``; the two share their recurrence class.

Each trial draws its noise from the stream ``(seed, "diffusion", env, trial)``
and trials are processed in fixed blocks, so results do not depend on the
number of worker threads.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

from .errors import ArgumentError
from .field_sampler import FieldSample, FieldSampler, Grid, _grad_many, _inside, _interp_many
from .kernels import CovarianceKernel
from .reports import Verdict, wilson_interval
from .rng import stream

logger = logging.getLogger(__name__)

BLOCK = 1024
NOISE_CHUNK = 512


class Exit(IntEnum):
    ACTIVE = 0
    INNER = 1
    OUTER = 2
    HORIZON = 3
    GRID = 4


@dataclass(frozen=True)
class SimConfig:
    h: float
    T: float
    x0: tuple[float, ...]
    L: float = 12.0
    delta: float | None = None
    trials: int = 1000
    seed: int = 0
    rho_in: float | None = None
    rho_out: float | None = None
    grid_nodes: int = 61

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        if not (self.h > 0 and self.T > 0):
            raise ArgumentError("step h and horizon T must be positive")
        if self.h > 1e-2 * self.T * (1 + 1e-12):
            raise ArgumentError(f"step h={self.h} must be at most T/100")
        if self.trials < 1:
            raise ArgumentError("trials must be >= 1")
        if self.delta is not None and not self.delta > 0:
            raise ArgumentError("gradient step delta must be positive")
        r0 = math.hypot(*self.x0)
        if self.rho_in is not None and not self.rho_in > 0:
            raise ArgumentError("rho_in must be positive")
        if self.rho_out is not None:
            if not r0 < self.rho_out:
                raise ArgumentError(f"start |x0|={r0} must lie inside rho_out={self.rho_out}")
            if self.rho_out > self.L:
                raise ArgumentError(f"rho_out={self.rho_out} exceeds the grid half-width L={self.L}")
            if self.rho_in is not None and not self.rho_in < self.rho_out:
                raise ArgumentError("rho_in must be smaller than rho_out")

    @property
    def d(self) -> int:
        return len(self.x0)

    @property
    def steps(self) -> int:
        return int(round(self.T / self.h))


@dataclass
class DiffusionPath:
    times: np.ndarray
    Y: np.ndarray
    exit: Exit


@dataclass
class EndpointBatch:
    Y: np.ndarray
    stop_time: np.ndarray
    status: np.ndarray
    paths: list[DiffusionPath] | None = None


def _delta(field: FieldSample | None, cfg: SimConfig) -> float:
    if cfg.delta is not None:
        return cfg.delta
    return min(field.grid.spacing) if field is not None else 0.0


def _run_block(field: FieldSample | None, cfg: SimConfig, env: int, trial_ids, record: bool) -> EndpointBatch:
    d = cfg.d
    n = len(trial_ids)
    x0 = np.asarray(cfg.x0)
    Y = np.tile(x0, (n, 1))
    status = np.zeros(n, dtype=np.int8)
    stop = np.zeros(n)
    if cfg.rho_in is not None and x0 @ x0 <= cfg.rho_in**2:
        status[:] = Exit.INNER
    delta = _delta(field, cfg)
    if field is not None:
        if field.grid is None or field.d != d:
            raise ArgumentError("simulation needs a grid field of matching dimension")
        grid, table = field.grid, field.grid_values()
        if not _inside(grid, x0[None, :], delta)[0]:
            raise ArgumentError("start point closer than delta to the grid boundary")
    rngs = [stream(cfg.seed, "diffusion", env, int(i)) for i in trial_ids]
    hist = [[x0.copy()] for _ in range(n)] if record else None
    sqrt_h = math.sqrt(cfg.h)
    rin2 = None if cfg.rho_in is None else cfg.rho_in**2
    rout2 = None if cfg.rho_out is None else cfg.rho_out**2
    active = np.flatnonzero(status == Exit.ACTIVE)
    k = 0
    while k < cfg.steps and active.size:
        m = min(NOISE_CHUNK, cfg.steps - k)
        noise = np.stack([rngs[i].standard_normal((m, d)) for i in active])
        rows = np.arange(len(active))
        for j in range(m):
            idx = active[rows]
            Ya = Y[idx]
            Ya = Ya + sqrt_h * noise[rows, j]
            if field is not None:
                Ya = Ya - 0.5 * cfg.h * _grad_many(grid, table, Y[idx], delta)
            Y[idx] = Ya
            if record:
                for q, p in zip(idx, Ya):
                    hist[q].append(p.copy())
            r2 = np.sum(Ya * Ya, axis=1)
            code = np.zeros(len(idx), dtype=np.int8)
            if field is not None:
                code[~_inside(grid, Ya, delta)] = Exit.GRID
            if rout2 is not None:
                code[r2 >= rout2] = Exit.OUTER
            if rin2 is not None:
                code[r2 <= rin2] = Exit.INNER
            done = code != Exit.ACTIVE
            if done.any():
                status[idx[done]] = code[done]
                stop[idx[done]] = (k + j + 1) * cfg.h
                rows = rows[~done]
                if rows.size == 0:
                    break
        k += m
        active = np.flatnonzero(status == Exit.ACTIVE)
    left = status == Exit.ACTIVE
    status[left] = Exit.HORIZON
    stop[left] = cfg.steps * cfg.h
    paths = None
    if record:
        paths = []
        for q in range(n):
            arr = np.asarray(hist[q])
            paths.append(DiffusionPath(np.arange(len(arr)) * cfg.h, arr, Exit(int(status[q]))))
    return EndpointBatch(Y, stop, status, paths)


def simulate_endpoints(field: FieldSample | None, cfg: SimConfig, env: int = 0, threads: int = 1,
                       record: bool = False) -> EndpointBatch:
    """Run ``cfg.trials`` independent paths and return their stopping states.

    ``field=None`` means the flat environment ``W = 0`` (plain Brownian motion).
    """
    ids = np.arange(cfg.trials)
    blocks = [ids[i:i + BLOCK] for i in range(0, len(ids), BLOCK)]
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda b: _run_block(field, cfg, env, b, record), blocks))
    else:
        parts = [_run_block(field, cfg, env, b, record) for b in blocks]
    return EndpointBatch(
        np.concatenate([p.Y for p in parts]),
        np.concatenate([p.stop_time for p in parts]),
        np.concatenate([p.status for p in parts]),
        [q for p in parts for q in p.paths] if record else None,
    )


def simulate_Y(field: FieldSample | None, cfg: SimConfig, trial: int = 0, env: int = 0) -> DiffusionPath:
    """One recorded Euler-Maruyama path of ``Y`` (trial ``trial`` of environment ``env``)."""
    return _run_block(field, cfg, env, [trial], record=True).paths[0]


@dataclass
class TimeChange:
    tau: np.ndarray
    log_tau_offset: float
    path_times: np.ndarray
    clock: np.ndarray
    A: np.ndarray
    X: np.ndarray

    def inverse(self, u) -> np.ndarray:
        """``A_u``: piecewise-linear inverse of ``tau``."""
        return np.interp(u, self.tau, self.path_times)


def time_change(path: DiffusionPath, field: FieldSample | None) -> TimeChange:
    """Clock ``tau`` along a path (trapezoid rule), its inverse ``A``, and ``X = Y o A``.

    ``exp(-W)`` is evaluated relative to ``min W`` so it cannot overflow; the
    offset is kept in ``log_tau_offset``.  ``X`` is returned on a uniform grid
    of the new time with as many points as the path.
    """
    times = np.asarray(path.times, dtype=float)
    if len(times) == 0:
        raise ArgumentError("time change needs a nonempty path")
    if field is None:
        w = np.zeros(len(times))
    else:
        w = _interp_many(field.grid, field.grid_values(), np.atleast_2d(path.Y))
    shift = float(w.min())
    e = np.exp(-(w - shift))
    inc = 0.5 * np.diff(times) * (e[1:] + e[:-1])
    scale = math.exp(-shift)
    tau = scale * np.concatenate([[0.0], np.cumsum(inc)])
    if len(times) == 1:
        return TimeChange(tau, -shift, times, tau.copy(), times.copy(), np.atleast_2d(path.Y).copy())
    clock = np.linspace(0.0, tau[-1], len(times))
    A = np.interp(clock, tau, times)
    X = np.column_stack([np.interp(A, times, path.Y[:, k]) for k in range(path.Y.shape[1])])
    return TimeChange(tau, -shift, times, clock, A, X)


def brownian_hitting_probability(d: int, rho_in: float, rho_out: float, r0: float) -> float:
    """Probability that Brownian motion from radius ``r0`` hits ``rho_in`` before ``rho_out``."""
    if r0 <= rho_in:
        return 1.0
    if d == 2:
        return math.log(rho_out / r0) / math.log(rho_out / rho_in)
    e = 2 - d
    return (r0**e - rho_out**e) / (rho_in**e - rho_out**e)


@dataclass
class HittingStats:
    p_hat: float
    ci_low: float
    ci_high: float
    hits: int
    outer: int
    censored_horizon: int
    censored_grid: int
    trials: int
    mean_hit_time: float | None
    verdict: Verdict
    mollification: float | None = None

    @property
    def censored_fraction(self) -> float:
        return (self.censored_horizon + self.censored_grid) / self.trials

    def to_dict(self) -> dict:
        return {
            "p_hat": self.p_hat, "ci_low": self.ci_low, "ci_high": self.ci_high,
            "hits": self.hits, "outer_exits": self.outer,
            "censored_horizon": self.censored_horizon, "censored_grid": self.censored_grid,
            "censored_fraction": self.censored_fraction, "trials": self.trials,
            "mean_hit_time": self.mean_hit_time, "verdict": self.verdict.value,
            "mollification_scale": self.mollification,
        }


def hitting_stats(field: FieldSample | None, cfg: SimConfig, env: int = 0, threads: int = 1) -> HittingStats:
    """Fraction of decided paths that hit ``rho_in`` before leaving ``rho_out``.

    Paths stopped by the horizon or the grid boundary are censored and
    counted separately; more than half censored makes the result inconclusive.
    """
    if cfg.rho_in is None or cfg.rho_out is None:
        raise ArgumentError("hitting statistics need both rho_in and rho_out")
    batch = simulate_endpoints(field, cfg, env, threads)
    st = batch.status
    hits = int(np.count_nonzero(st == Exit.INNER))
    outer = int(np.count_nonzero(st == Exit.OUTER))
    hor = int(np.count_nonzero(st == Exit.HORIZON))
    grd = int(np.count_nonzero(st == Exit.GRID))
    decided = hits + outer
    p = hits / decided if decided else float("nan")
    lo, hi = wilson_interval(hits, decided)
    mean_t = float(batch.stop_time[st == Exit.INNER].mean()) if hits else None
    censored = (hor + grd) / cfg.trials
    verdict = Verdict.INCONCLUSIVE if censored > 0.5 or decided == 0 else Verdict.COMPLETED
    moll = min(field.grid.spacing) if field is not None else None
    return HittingStats(p, lo, hi, hits, outer, hor, grd, cfg.trials, mean_t, verdict, moll)


@dataclass
class RecurrenceStats:
    rows: list[dict]
    pooled: HittingStats
    baseline: float | None
    above_baseline: int
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"environments": self.rows, "pooled": self.pooled.to_dict(), "baseline": self.baseline,
                "environments_above_baseline": self.above_baseline, "notes": self.notes}


def recurrence_mc(kernel: CovarianceKernel | None, cfg: SimConfig, env_seeds, threads: int = 1) -> RecurrenceStats:
    """Hitting statistics across sampled environments on ``[-L, L]^d``.

    ``kernel=None`` runs every environment with ``W = 0``, giving the
    Brownian baseline.
    """
    env_seeds = [int(s) for s in env_seeds]
    if not env_seeds:
        raise ArgumentError("recurrence_mc needs at least one environment seed")
    d = cfg.d
    sampler = None
    if kernel is not None:
        if kernel.d != d:
            raise ArgumentError(f"kernel dimension {kernel.d} does not match start point dimension {d}")
        grid = Grid.centered(cfg.L, cfg.grid_nodes, d)
        sampler = FieldSampler(kernel, grid.points(), grid=grid)
    rows, per = [], []
    for env, seed in enumerate(env_seeds):
        fld = sampler.sample(seed) if sampler is not None else None
        stats = hitting_stats(fld, cfg, env, threads)
        per.append(stats)
        rows.append({"env_seed": seed, "p_hat": stats.p_hat, "ci_lo": stats.ci_low, "ci_hi": stats.ci_high,
                     "censored_frac": stats.censored_fraction,
                     "jitter": None if sampler is None else sampler.jitter})
        logger.info("environment %d (seed %d): p_hat=%.4f", env, seed, stats.p_hat)
    hits = sum(s.hits for s in per)
    outer = sum(s.outer for s in per)
    hor = sum(s.censored_horizon for s in per)
    grd = sum(s.censored_grid for s in per)
    total = sum(s.trials for s in per)
    decided = hits + outer
    lo, hi = wilson_interval(hits, decided)
    hit_t = [s.mean_hit_time * s.hits for s in per if s.hits]
    pooled = HittingStats(
        hits / decided if decided else float("nan"), lo, hi, hits, outer, hor, grd, total,
        sum(hit_t) / hits if hits else None,
        Verdict.INCONCLUSIVE if (hor + grd) > 0.5 * total or not decided else Verdict.COMPLETED,
        per[0].mollification,
    )
    baseline = None
    if cfg.rho_in is not None and cfg.rho_out is not None:
        baseline = brownian_hitting_probability(d, cfg.rho_in, cfg.rho_out, math.hypot(*cfg.x0))
    above = sum(1 for s in per if baseline is not None and s.p_hat > baseline)
    notes = ["finite-window hitting frequencies only suggest the recurrence class; they are observations, not tests"]
    if kernel is not None:
        notes.append("drift uses the central-difference gradient of the multilinear grid interpolant; "
                     "mollification scale equals the grid spacing")
    return RecurrenceStats(rows, pooled, baseline, above, notes)


def with_trials(cfg: SimConfig, trials: int) -> SimConfig:
    return replace(cfg, trials=trials)
