"""Batch front-end: ``recenv <command> --config path.json [--seed N] [--threads K] [--out dir]``.

Exit status: 0 satisfied or completed, 2 violated, 3 inconclusive, 1 error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import __version__
from .criteria import (
    angular_kernel_integral,
    ergodic_consistency,
    lemma11_occurrences,
    selfsimilar_conditions,
    semi_selfsimilar_conditions,
    shell_integral,
    t0_compute,
)
from .diffusion import SimConfig, hitting_stats, recurrence_mc, simulate_endpoints, time_change
from .errors import RecenvError
from .field_sampler import FieldSample, FieldSampler, Grid
from .geometry import (
    ShellGeometry,
    shell_family_points,
    shell_points,
    sphere_points,
)
from .kernels import (
    CovarianceKernel,
    FractionalBrownianKernel,
    ScalingSpec,
    covariance_matrix,
    kernel_from_spec,
)
from .reports import Comparison, CriterionReport, Verdict, combine, dumps, to_jsonable
from .rng import stream

logger = logging.getLogger("recenv")

COMMANDS = ("kernel-check", "sample", "conditions", "shell-integral", "lemma11", "ergodic",
            "simulate", "recurrence-mc")
# dense Cholesky sampling beyond this many nodes is too slow for a batch run
FIELD_POINT_CAP = 6000
EXIT_CODES = {Verdict.SATISFIED: 0, Verdict.COMPLETED: 0, Verdict.VIOLATED: 2, Verdict.INCONCLUSIVE: 3}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True)


class KernelConfig(_Strict):
    kind: Literal["fbf", "zero", "tabulated"]
    d: int = Field(2, ge=2)
    H: Optional[float] = Field(None, gt=0.0, lt=1.0)
    axes: Optional[list[list[float]]] = None
    values: Optional[list] = None

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "fbf" and self.H is None:
            raise ValueError("fbf kernel needs H")
        if self.kind == "tabulated" and (self.axes is None or self.values is None):
            raise ValueError("tabulated kernel needs axes and values")
        return self


class GeometryConfig(_Strict):
    domain: Literal["sphere", "shell"] = "sphere"
    family: Literal["ball", "box"] = "ball"
    r: float = Field(2.0, gt=1.0)
    n: int = 1
    resolution: int = Field(200, ge=4)
    sphere_resolution: int = Field(2000, ge=8)


class ThresholdConfig(_Strict):
    a: float = 0.0
    epsilon: float = Field(1e-6, gt=0.0)
    c: float = 0.0
    tail_tol: float = Field(0.01, gt=0.0)


class ScalingConfig(_Strict):
    alpha: Optional[float] = Field(None, gt=0.0)
    base: Optional[float] = Field(None, gt=1.0)


class DecayConfig(_Strict):
    t_max: float = Field(20.0, gt=0.0)
    t_step: float = Field(0.5, gt=0.0)
    resolution: int = Field(200, ge=8)


class ShellIntegralConfig(_Strict):
    R: float = Field(..., gt=1.0)
    radial_resolution: int = Field(2001, ge=2)
    sphere_resolution: int = Field(200, ge=8)
    environment: Literal["zero", "borderline", "field"] = "field"


class Lemma11Config(_Strict):
    n_max: int = Field(6, ge=1)
    resolution: int = Field(20, ge=4)
    environment: Literal["zero", "borderline", "field"] = "field"


class ErgodicConfig(_Strict):
    T: float = Field(30.0, gt=0.0)
    t_step: float = Field(0.2, gt=0.0)
    sphere_resolution: int = Field(24, ge=8)
    environments: int = Field(200, ge=1)
    trials: int = Field(10000, ge=100)


class SampleConfig(_Strict):
    target: Literal["shell", "sphere", "grid"] = "shell"
    L: float = Field(10.0, gt=0.0)
    grid_nodes: int = Field(41, ge=3)


class SimulationConfig(_Strict):
    h: float = Field(1e-3, gt=0.0)
    T: float = Field(300.0, gt=0.0)
    x0: list[float]
    L: float = Field(12.0, gt=0.0)
    delta: Optional[float] = Field(None, gt=0.0)
    trials: int = Field(1000, ge=1)
    rho_in: Optional[float] = Field(None, gt=0.0)
    rho_out: Optional[float] = Field(None, gt=0.0)
    grid_nodes: int = Field(61, ge=3)
    record_paths: int = Field(0, ge=0)
    environment: Literal["zero", "field"] = "field"


class SeedConfig(_Strict):
    master: int = Field(0, ge=0)
    environments: Optional[list[int]] = None
    count: Optional[int] = Field(None, ge=1)

    def environment_seeds(self, default: int) -> list[int]:
        if self.environments is not None:
            return list(self.environments)
        n = self.count if self.count is not None else default
        return [self.master + i for i in range(n)]


class RunConfig(_Strict):
    command: Optional[Literal[COMMANDS]] = None  # type: ignore[valid-type]
    kernel: Optional[KernelConfig] = None
    geometry: GeometryConfig = GeometryConfig()
    thresholds: ThresholdConfig = ThresholdConfig()
    scaling: ScalingConfig = ScalingConfig()
    decay: DecayConfig = DecayConfig()
    shell_integral: Optional[ShellIntegralConfig] = None
    lemma11: Lemma11Config = Lemma11Config()
    ergodic: ErgodicConfig = ErgodicConfig()
    sample: SampleConfig = SampleConfig()
    sim: Optional[SimulationConfig] = None
    seeds: SeedConfig = SeedConfig()
    output: str = "recenv-out"


class ConfigError(RecenvError):
    pass


# --------------------------------------------------------------------------
# helpers


def _kernel(cfg: RunConfig) -> CovarianceKernel:
    if cfg.kernel is None:
        raise ConfigError("config field 'kernel' is required for this command")
    return kernel_from_spec(cfg.kernel.model_dump(exclude_none=True))


def _scaling(cfg: RunConfig, kernel: CovarianceKernel, base: float) -> ScalingSpec:
    alpha = cfg.scaling.alpha
    if alpha is None:
        if not isinstance(kernel, FractionalBrownianKernel):
            raise ConfigError("config field 'scaling.alpha' is required for non-fbf kernels")
        alpha = kernel.H
    return ScalingSpec(alpha, cfg.scaling.base if cfg.scaling.base is not None else base)


def _closed_form(kind: str, d: int):
    if kind == "zero":
        return lambda p: np.zeros(len(p))
    return lambda p: (d - 2) * np.log(np.linalg.norm(p, axis=1))


class Outputs:
    """Files to write once the command has finished."""

    def __init__(self):
        self.files: dict[str, str] = {}

    def curve(self, name: str, arr, header=("t", "value")):
        self.files[f"curves/{name}.csv"] = _csv(arr, header)

    def text(self, rel: str, content: str):
        self.files[rel] = content


def _cell(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def _csv(rows, header) -> str:
    if isinstance(rows, np.ndarray):
        rows = np.atleast_2d(rows.astype(float))
    lines = [",".join(header)]
    lines += [",".join(_cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# commands


def cmd_kernel_check(cfg: RunConfig, out: Outputs, threads: int) -> CriterionReport:
    kernel = _kernel(cfg)
    d = kernel.d
    rng = stream(cfg.seeds.master, "cli.kernel_check")
    x = rng.standard_normal((1000, d))
    y = rng.standard_normal((1000, d))
    comps = []

    def add(name, value, thr, ok):
        comps.append(Comparison(name, float(value), thr, "<=", Verdict.SATISFIED if ok else Verdict.VIOLATED))

    sym = float(np.max(np.abs(kernel.pairwise(x, y) - kernel.pairwise(y, x))))
    add("symmetry max |K(x,y)-K(y,x)|", sym, 0.0, sym == 0.0)
    if kernel.kind in ("fbf", "zero"):
        zero = np.zeros_like(x)
        pin = float(max(np.abs(kernel.pairwise(x, zero)).max(), np.abs(kernel.pairwise(zero, y)).max()))
        add("zero pinning max |K(x,0)|", pin, 0.0, pin == 0.0)
    if isinstance(kernel, FractionalBrownianKernel):
        ref = np.linalg.norm(x, axis=1) ** (2 * kernel.H)
        diag = float(np.max(np.abs(kernel.pairwise(x, x) - ref) / ref))
        add("diagonal relative error of K(x,x) vs |x|^2H", diag, 1e-12, diag <= 1e-12)
        worst = 0.0
        for lam in (0.5, 2.0, 7.0):
            lhs = kernel.pairwise(lam * x, lam * y)
            rhs = lam ** (2 * kernel.H) * kernel.pairwise(x, y)
            tol = 1e-12 * np.abs(rhs) + 1e-14
            worst = max(worst, float(np.max(np.abs(lhs - rhs) / tol)))
        add("homogeneity error / tolerance", worst, 1.0, worst <= 1.0)
    pts = rng.standard_normal((64, d))
    try:
        np.linalg.cholesky(covariance_matrix(kernel, pts) + 1e-10 * np.eye(64))
        psd = True
    except np.linalg.LinAlgError:
        psd = False
    add("Cholesky of 64-point covariance + 1e-10 I fails", 0.0 if psd else 1.0, 0.0, psd)
    return CriterionReport("kernel_check", {"kernel": kernel.spec(), "pairs": 1000}, {},
                           comps, combine(c.verdict for c in comps))


def cmd_sample(cfg: RunConfig, out: Outputs, threads: int) -> CriterionReport:
    kernel = _kernel(cfg)
    d, g, s = kernel.d, cfg.geometry, cfg.sample
    grid = None
    if s.target == "shell":
        pts = shell_points(ShellGeometry(g.family, g.r, g.n, d), g.resolution, cfg.seeds.master).points
    elif s.target == "sphere":
        pts = sphere_points(d, g.sphere_resolution, cfg.seeds.master).points
    else:
        nodes = s.grid_nodes if s.grid_nodes % 2 else s.grid_nodes + 1
        grid = Grid.centered(s.L, nodes, d)
        pts = grid.points()
    fld = FieldSampler(kernel, pts, grid=grid).sample(cfg.seeds.master)
    tmp = _TempField(fld)
    out.text("field.csv", tmp.csv)
    out.text("field.json", tmp.sidecar)
    return CriterionReport("sample", {"kernel": kernel.spec(), "target": s.target, "points": len(pts)},
                           {"min": float(fld.values.min()), "max": float(fld.values.max()),
                            "mean": float(fld.values.mean())},
                           error_estimates={"jitter": fld.jitter})


class _TempField:
    """Serialized form of a field without touching the disk."""

    def __init__(self, fld: FieldSample):
        header = ",".join([f"x{i + 1}" for i in range(fld.d)] + ["value"])
        rows = np.column_stack([fld.points, fld.values])
        self.csv = header + "\n" + "\n".join(",".join(f"{v:.17g}" for v in r) for r in rows) + "\n"
        self.sidecar = json.dumps({"kernel": fld.kernel, "seed": fld.seed, "jitter": fld.jitter,
                                   "grid": None if fld.grid is None else fld.grid.spec(),
                                   "pinned": fld.pinned}, indent=2, sort_keys=True) + "\n"


def cmd_conditions(cfg: RunConfig, out: Outputs, threads: int) -> CriterionReport:
    kernel = _kernel(cfg)
    g, th, dec = cfg.geometry, cfg.thresholds, cfg.decay
    parts = []
    if g.domain == "sphere":
        scaling = _scaling(cfg, kernel, 2.0)
        t_grid = np.arange(0.0, dec.t_max + 0.5 * dec.t_step, dec.t_step)
        main = selfsimilar_conditions(kernel, scaling, g.sphere_resolution, t_grid, th.epsilon,
                                      th.tail_tol, dec.resolution, cfg.seeds.master)
    else:
        scaling = _scaling(cfg, kernel, g.r)
        geom = ShellGeometry(g.family, g.r, 1, kernel.d)
        n_grid = np.arange(0, int(math.floor(dec.t_max)) + 1)
        main = semi_selfsimilar_conditions(kernel, geom, scaling, g.resolution, n_grid, th.epsilon,
                                           th.tail_tol, max(8, dec.resolution // 5), cfg.seeds.master)
    parts.append(main)
    decay = main.values["mixing_decay_curve"]
    out.curve("decay", decay["curves"]["decay"])
    values = {"conditions": main.to_dict()}
    first = main.values.get("condition_i_sphere") or main.values.get("condition_i_shell")
    values["condition_i_value"] = first["values"]["infimum"]
    if isinstance(kernel, FractionalBrownianKernel):
        ang = angular_kernel_integral(kernel.H, kernel.d)
        values["angular_integral"] = ang.to_dict()
        ang_verdict = Verdict.SATISFIED if ang.positive else Verdict.VIOLATED
        parts.append(CriterionReport("angular_integral", {}, verdict=ang_verdict))
    if th.a > 0:
        values["t0"] = t0_compute(th.a, scaling.alpha, kernel.d)
    else:
        values["t0"] = None
    return CriterionReport("conditions", {"kernel": kernel.spec(), "domain": g.domain}, values,
                           verdict=combine(p.verdict for p in parts), notes=main.notes)


def cmd_shell_integral(cfg: RunConfig, out: Outputs, threads: int) -> CriterionReport:
    si = cfg.shell_integral
    if si is None:
        raise ConfigError("config field 'shell_integral' is required for this command")
    if si.environment == "field":
        kernel = _kernel(cfg)
        d = kernel.d

        def env(p):
            if len(p) > FIELD_POINT_CAP:
                raise ConfigError(f"field environment needs {len(p)} nodes, cap is {FIELD_POINT_CAP}; "
                                  "lower shell_integral.radial_resolution or sphere_resolution")
            return FieldSampler(kernel, p).sample(cfg.seeds.master).values
    else:
        d = cfg.kernel.d if cfg.kernel is not None else 2
        env = _closed_form(si.environment, d)
    rep = shell_integral(env, d, si.R, si.radial_resolution, si.sphere_resolution, cfg.seeds.master)
    rep.inputs["environment"] = si.environment
    out.curve("shell_integral", rep.curves["I_of_R"], ("R", "I"))
    return rep


def cmd_lemma11(cfg: RunConfig, out: Outputs, threads: int) -> CriterionReport:
    g, lm = cfg.geometry, cfg.lemma11
    if lm.environment == "field":
        kernel = _kernel(cfg)
        d = kernel.d
    else:
        d = cfg.kernel.d if cfg.kernel is not None else 2
    pts = shell_family_points(g.family, g.r, d, lm.n_max, lm.resolution, cfg.seeds.master)
    if lm.environment == "field":
        fld = FieldSampler(kernel, pts).sample(cfg.seeds.master)
    else:
        fld = FieldSample(pts, _closed_form(lm.environment, d)(pts), {"kind": lm.environment}, None, 0.0)
    rep = lemma11_occurrences(fld, g.family, g.r, d, cfg.thresholds.c, lm.n_max)
    rep.inputs["environment"] = lm.environment
    out.curve("shell_infimum", rep.curves["shell_infimum"], ("n", "inf_W"))
    out.curve("threshold", rep.curves["threshold"], ("n", "threshold"))
    return rep


def cmd_ergodic(cfg: RunConfig, out: Outputs, threads: int) -> CriterionReport:
    kernel = _kernel(cfg)
    e = cfg.ergodic
    alpha = _scaling(cfg, kernel, 2.0).alpha
    t_grid = np.arange(0.0, e.T + 0.5 * e.t_step, e.t_step)
    seeds = cfg.seeds.environment_seeds(e.environments)
    rep = ergodic_consistency(kernel, alpha, t_grid, e.sphere_resolution, cfg.thresholds.a,
                              seeds, e.trials, cfg.seeds.master)
    out.curve("mean_M", rep.curves["mean_M"], ("t", "mean_M"))
    return rep


def _sim_config(cfg: RunConfig) -> SimulationConfig:
    if cfg.sim is None:
        raise ConfigError("config field 'sim' is required for this command")
    return cfg.sim


def _make_sim(s: SimulationConfig, seed: int) -> SimConfig:
    return SimConfig(h=s.h, T=s.T, x0=tuple(s.x0), L=s.L, delta=s.delta, trials=s.trials, seed=seed,
                     rho_in=s.rho_in, rho_out=s.rho_out, grid_nodes=s.grid_nodes)


def cmd_simulate(cfg: RunConfig, out: Outputs, threads: int) -> CriterionReport:
    s = _sim_config(cfg)
    sim = _make_sim(s, cfg.seeds.master)
    fld = None
    if s.environment == "field":
        kernel = _kernel(cfg)
        grid = Grid.centered(s.L, s.grid_nodes, sim.d)
        fld = FieldSampler(kernel, grid.points(), grid=grid).sample(cfg.seeds.master)
    values = {}
    if sim.rho_in is not None and sim.rho_out is not None:
        values["hitting"] = hitting_stats(fld, sim, 0, threads).to_dict()
        verdict = Verdict(values["hitting"]["verdict"])
    else:
        batch = simulate_endpoints(fld, sim, 0, threads)
        disp = np.sum((batch.Y - np.asarray(sim.x0)) ** 2, axis=1)
        values["mean_square_displacement"] = float(disp.mean())
        values["msd_stderr"] = float(disp.std(ddof=1) / math.sqrt(len(disp))) if len(disp) > 1 else None
        verdict = Verdict.COMPLETED
    if s.record_paths:
        rec = simulate_endpoints(fld, SimConfig(**{**sim.__dict__, "trials": s.record_paths}), 0, threads,
                                 record=True)
        monotone = []
        for i, path in enumerate(rec.paths):
            tc = time_change(path, fld)
            monotone.append(bool(np.all(np.diff(tc.tau) > 0)))
            out.text(f"paths/path_{i}.csv", _csv(np.column_stack([path.times, path.Y]),
                                                 ["t"] + [f"x{k + 1}" for k in range(sim.d)]))
            out.text(f"paths/path_{i}_X.csv", _csv(np.column_stack([tc.clock, tc.X]),
                                                   ["t"] + [f"x{k + 1}" for k in range(sim.d)]))
        values["tau_strictly_increasing"] = monotone
    values["mollification_scale"] = None if fld is None else min(fld.grid.spacing)
    return CriterionReport("simulate", {"environment": s.environment}, values, verdict=verdict,
                           notes=["drift is the gradient of the grid interpolant, a numerical stand-in "
                                  "for the non-differentiable environment"] if fld is not None else [])


def cmd_recurrence_mc(cfg: RunConfig, out: Outputs, threads: int) -> CriterionReport:
    s = _sim_config(cfg)
    sim = _make_sim(s, cfg.seeds.master)
    kernel = _kernel(cfg) if s.environment == "field" else None
    seeds = cfg.seeds.environment_seeds(10)
    stats = recurrence_mc(kernel, sim, seeds, threads)
    rows = [[r["env_seed"], r["p_hat"], r["ci_lo"], r["ci_hi"], r["censored_frac"]] for r in stats.rows]
    out.text("recurrence.csv", _csv(rows, ("env_seed", "p_hat", "ci_lo", "ci_hi", "censored_frac")))
    return CriterionReport("recurrence_mc", {"environment": s.environment, "env_seeds": seeds},
                           stats.to_dict(), verdict=stats.pooled.verdict, notes=stats.notes)


DISPATCH = {
    "kernel-check": cmd_kernel_check,
    "sample": cmd_sample,
    "conditions": cmd_conditions,
    "shell-integral": cmd_shell_integral,
    "lemma11": cmd_lemma11,
    "ergodic": cmd_ergodic,
    "simulate": cmd_simulate,
    "recurrence-mc": cmd_recurrence_mc,
}


# --------------------------------------------------------------------------
# entry point


def format_validation_error(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"config field '{loc}': {err['msg']}")
    return "\n".join(lines)


def load_config(path: Path, overrides: dict) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top-level JSON value must be an object")
    if "seed" in overrides:
        raw.setdefault("seeds", {})["master"] = overrides["seed"]
    if "out" in overrides:
        raw["output"] = overrides["out"]
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(format_validation_error(exc)) from None


def run(command: str, cfg: RunConfig, threads: int = 1) -> tuple[int, dict, Outputs]:
    """Execute one command; return exit status, report payload and pending output files."""
    if cfg.command is not None and cfg.command != command:
        raise ConfigError(f"config field 'command': {cfg.command!r} does not match requested {command!r}")
    out = Outputs()
    report = DISPATCH[command](cfg, out, threads)
    payload = {
        "tool": "recenv",
        "version": __version__,
        "command": command,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "config": to_jsonable(cfg.model_dump(mode="json")),
        "verdict": Verdict(report.verdict).value,
        "report": report.to_dict(),
    }
    return EXIT_CODES[Verdict(report.verdict)], payload, out


def write_outputs(outdir: Path, payload: dict, out: Outputs) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.json").write_text(dumps(payload))
    for rel, content in out.files.items():
        p = outdir / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(content)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="recenv", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, type=Path, help="JSON run configuration")
    p.add_argument("--seed", type=int, help="override seeds.master")
    p.add_argument("--threads", type=int, help="worker threads (default: $RECENV_THREADS or 1)")
    p.add_argument("--out", help="override the output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("RECENV_THREADS", "1"))
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    try:
        cfg = load_config(args.config, overrides)
        status, payload, out = run(args.command, cfg, max(1, threads))
        write_outputs(Path(cfg.output), payload, out)
    except RecenvError as exc:
        print(f"recenv: error: {exc}", file=sys.stderr)
        return 1
    print(f"{args.command}: {payload['verdict']} -> {Path(cfg.output) / 'report.json'}")
    return status


if __name__ == "__main__":
    sys.exit(main())
