"""``pia-fit`` command-line tool.

Exit codes: 0 converged, 1 usage or configuration error, 2 iteration cap
reached, 3 diverged.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import datasets, io, spectral
from .iterate import (CONVERGED, DIVERGED, MAX_ITERS, FitProblem, InvalidWeightsError,
                      curve_problem, direct_ls, max_deviation, run, surface_problem)
from .spectral import WeightSet
from .splines import curvature_samples, eval_curve, eval_surface

log = logging.getLogger("mlspia")

EXIT_OK, EXIT_USAGE, EXIT_MAX_ITERS, EXIT_DIVERGED = 0, 1, 2, 3
STATUS_EXIT = {CONVERGED: EXIT_OK, MAX_ITERS: EXIT_MAX_ITERS, DIVERGED: EXIT_DIVERGED}
TABLE1_FRACTIONS = ("m/12", "m/10", "m/8", "m/6", "m/4", "m/2", "2m/3")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    mode: str
    input: str | None = None
    format: str | None = None
    example: str | None = None
    size: list | None = None
    degree: int = 3
    ctrl: int | None = None
    ctrl_u: int | None = None
    ctrl_v: int | None = None
    weights: str = "optimal"
    omega: float | None = None
    gamma: float | None = None
    upsilon: float | None = None
    mu: float | None = None
    init: str = "II"
    tol: float = 1e-7
    max_iters: int = 100_000
    samples: int | None = None
    seed: int = 0
    out_dir: str = "out"
    repeats: int = 10
    fractions: list = field(default_factory=lambda: list(TABLE1_FRACTIONS))

    def __post_init__(self):
        for name in ("ctrl", "ctrl_u", "ctrl_v", "samples"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ConfigError(f"--{name.replace('_', '-')} must be positive")
        if self.tol <= 0:
            raise ConfigError("--tol must be positive")
        if self.max_iters < 0 or self.degree < 1 or self.repeats < 1:
            raise ConfigError("--max-iters, --degree and --repeats must be positive")
        if self.init not in ("I", "II"):
            raise ConfigError("--init must be I or II")
        if self.weights not in ("optimal", "manual"):
            raise ConfigError("--weights must be optimal or manual")

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in doc.items() if k in names})

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class FitReport:
    config: dict
    spectral: list
    weights: dict
    method: str
    status: str
    iterations: int
    history: list
    control_points: list
    E_final: float
    max_deviation_vs_ls: float | None
    wall_clock: float

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "FitReport":
        return cls(**doc)


def load_data(cfg: RunConfig) -> np.ndarray:
    if cfg.input:
        return io.load_points(cfg.input, cfg.format)
    if cfg.example:
        size = None
        if cfg.size:
            size = cfg.size[0] if len(cfg.size) == 1 else tuple(cfg.size)
        return datasets.gen_example(cfg.example, size, cfg.seed)
    raise ConfigError("need --input or --example")


def _manual_weights(cfg: RunConfig) -> WeightSet:
    missing = [n for n in ("omega", "gamma", "upsilon") if getattr(cfg, n) is None]
    if missing:
        raise ConfigError(f"manual weights need --{', --'.join(missing)}")
    return WeightSet(cfg.omega, cfg.gamma, cfg.upsilon, cfg.mu)


def build_problem(cfg: RunConfig, data: np.ndarray | None = None, n: int | None = None) -> FitProblem:
    Q = load_data(cfg) if data is None else data
    try:
        if Q.ndim == 3:
            n1 = cfg.ctrl_u or cfg.ctrl
            n2 = cfg.ctrl_v or cfg.ctrl
            if n1 is None or n2 is None:
                raise ConfigError("surface fits need --ctrl-u/--ctrl-v (or --ctrl)")
            problem = surface_problem(Q, n1, n2, cfg.degree, tol=cfg.tol, max_iter=cfg.max_iters)
        else:
            n = n or cfg.ctrl
            if n is None:
                raise ConfigError("curve fits need --ctrl")
            problem = curve_problem(Q, n, cfg.degree, tol=cfg.tol, max_iter=cfg.max_iters)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.weights == "manual":
        w = _manual_weights(cfg)
        if w.mu is None:
            w = spectral.with_mu(w, problem.weights.mu)
        problem.weights = w
        ok, reason = spectral.validate_weights(w, problem.sigma_bound())
        if not ok:
            raise ConfigError(f"weights outside the convergence region (0<omega<2, upsilon>0, gamma bounds): {reason}")
    return problem


def _report(cfg, problem, result, elapsed, method="mlspia") -> FitReport:
    try:
        dev = max_deviation(result.ctrl, direct_ls(problem), problem.knots)
    except Exception:  # noqa: BLE001 - deviation is informational
        dev = None
    return FitReport(
        config=cfg.as_dict(),
        spectral=[s.as_dict() for s in problem.spectra],
        weights=problem.weights.as_dict(),
        method=method,
        status=result.status,
        iterations=result.iterations,
        history=[[r.k, r.error] for r in result.history],
        control_points=result.ctrl.tolist(),
        E_final=result.final_error,
        max_deviation_vs_ls=dev,
        wall_clock=elapsed,
    )


def _write_fit_artifacts(cfg: RunConfig, problem: FitProblem, result, report: FitReport) -> Path:
    out = Path(cfg.out_dir)
    io.save_json(out / "report.json", report.as_dict())
    io.atomic_write(out / "history.csv", io.history_to_csv(result.history))
    io.atomic_write(out / "control_points.csv", io.points_to_csv(result.ctrl))
    if problem.is_surface:
        k = cfg.samples or 64
        ts = np.linspace(0.0, 1.0, k)
        S = eval_surface(result.ctrl, *problem.knots, ts, ts)
        io.atomic_write(out / "control_net.json", io.grid_to_json(result.ctrl))
        io.atomic_write(out / "surface_samples.csv", io.points_to_csv(S))
    else:
        k = cfg.samples or 512
        ts = np.linspace(0.0, 1.0, k)
        C = eval_curve(result.ctrl, problem.knots[0], ts)
        io.atomic_write(out / "curve_samples.csv", io.points_to_csv(C))
        if problem.knots[0].degree >= 2 and C.shape[1] in (2, 3):
            rows = ["t,x,y" + (",z" if C.shape[1] == 3 else "") + ",curvature\n"]
            for t, pt, kappa in curvature_samples(result.ctrl, problem.knots[0], k):
                kap = "" if kappa is None else io._fmt(kappa)
                rows.append(",".join([io._fmt(t), *map(io._fmt, pt), kap]) + "\n")
            io.atomic_write(out / "curvature.csv", "".join(rows))
    return out


def cmd_fit(cfg: RunConfig, write: bool = True) -> FitReport:
    problem = build_problem(cfg)
    if cfg.mode == "fit-surface" and not problem.is_surface:
        raise ConfigError("fit-surface needs grid input")
    if cfg.mode == "fit-curve" and problem.is_surface:
        raise ConfigError("fit-curve needs point-list input")
    t0 = time.perf_counter()
    result = run(problem, cfg.init)
    elapsed = time.perf_counter() - t0
    report = _report(cfg, problem, result, elapsed)
    if write:
        _write_fit_artifacts(cfg, problem, result, report)
    return report


def _timed(problem, init, method, repeats):
    times = []
    result = None
    for _ in range(repeats):
        t0 = time.process_time()
        result = run(problem, init, method)
        times.append(time.process_time() - t0)
    return result, float(np.mean(times))


def cmd_compare(cfg: RunConfig, write: bool = True) -> dict:
    """LSPIA at its optimal step against MLSPIA at its optimal weights."""
    problem = build_problem(cfg)
    ml, ml_cpu = _timed(problem, cfg.init, "mlspia", cfg.repeats)
    ls, ls_cpu = _timed(problem, cfg.init, "lspia", cfg.repeats)
    doc = {
        "config": cfg.as_dict(),
        "spectral": [s.as_dict() for s in problem.spectra],
        "weights": problem.weights.as_dict(),
        "mlspia": {"iterations": ml.iterations, "status": ml.status, "cpu_time": ml_cpu,
                   "E_final": ml.final_error},
        "lspia": {"iterations": ls.iterations, "status": ls.status, "cpu_time": ls_cpu,
                  "E_final": ls.final_error},
        "max_deviation": max_deviation(ml.ctrl, ls.ctrl, problem.knots, cfg.samples),
    }
    if write:
        io.save_json(Path(cfg.out_dir) / "compare.json", doc)
    return doc


def cmd_analyze(cfg: RunConfig, write: bool = True) -> dict:
    """Singular values, optimal weights, predicted radii and a check of the dense spectrum."""
    problem = build_problem(cfg)
    w = problem.weights
    singulars = [s.singular_values for s in problem.spectra]
    if problem.is_surface:
        singulars = np.outer(*singulars).ravel()
    else:
        singulars = singulars[0]
    doc = {
        "config": cfg.as_dict(),
        "spectral": [s.as_dict() for s in problem.spectra],
        "weights": w.as_dict(),
        "valid": spectral.validate_weights(w, problem.sigma_bound())[0],
        "predicted_rate": spectral.theoretical_radius(w, singulars),
        "predicted_lspia_rate": spectral.lspia_radius(w.mu, singulars) if w.mu else None,
    }
    if problem.is_surface:
        doc["h_verification"] = "skipped: surface operator not assembled densely"
    else:
        B = problem.bases[0]
        if sum(B.shape) <= spectral.MAX_DENSE_H:
            H = spectral.iteration_matrix(B, w)
            eig = np.linalg.eigvals(H)
            s = problem.spectra[0]
            n_unit = B.shape[1] - s.rank
            mods = np.sort(np.abs(eig))[::-1][n_unit:]  # drop null-space unit eigenvalues
            doc["h_verification"] = {"dense_radius": float(mods[0]), "size": int(H.shape[0])}
        else:
            doc["h_verification"] = f"skipped: m+n={sum(B.shape)} exceeds cap {spectral.MAX_DENSE_H}"
    if write:
        io.save_json(Path(cfg.out_dir) / "analyze.json", doc)
    return doc


def _fraction(expr: str, m: int) -> int:
    num, _, den = expr.partition("/")
    k = num.replace("m", "") or "1"
    return (int(k) * m) // int(den)


def cmd_table1(cfg: RunConfig, write: bool = True) -> dict:
    """Iteration counts for strategies I and II across control counts."""
    data = load_data(cfg)
    if data.ndim == 3:
        raise ConfigError("table1 is implemented for curve data")
    m = data.shape[0]
    rows = {"I": [], "II": []}
    counts = []
    for frac in cfg.fractions:
        n = _fraction(frac, m)
        counts.append(n)
        problem = build_problem(cfg, data, n)
        for strategy in ("I", "II"):
            rows[strategy].append(run(problem, strategy).iterations)
    doc = {"config": cfg.as_dict(), "m": m, "fractions": list(cfg.fractions), "n": counts, "iterations": rows}
    if write:
        out = Path(cfg.out_dir)
        io.save_json(out / "table1.json", doc)
        lines = ["init," + ",".join(map(str, counts)) + "\n"]
        lines += [f"{k}," + ",".join(map(str, v)) + "\n" for k, v in rows.items()]
        io.atomic_write(out / "table1.csv", "".join(lines))
    return doc


def cmd_generate(cfg: RunConfig, write: bool = True) -> np.ndarray:
    if not cfg.example:
        raise ConfigError("generate needs --example")
    pts = load_data(cfg)
    if write:
        out = Path(cfg.out_dir)
        if pts.ndim == 3:
            io.atomic_write(out / f"{cfg.example}.json", io.grid_to_json(pts))
        else:
            io.atomic_write(out / f"{cfg.example}.csv", io.points_to_csv(pts))
    return pts


COMMANDS = {
    "fit-curve": cmd_fit,
    "fit-surface": cmd_fit,
    "compare": cmd_compare,
    "analyze": cmd_analyze,
    "table1": cmd_table1,
    "generate": cmd_generate,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pia-fit", description="Least-squares B-spline fitting by LSPIA/MLSPIA iteration.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="mode", required=True, parser_class=_Parser)
    for mode in COMMANDS:
        p = sub.add_parser(mode)
        src = p.add_argument_group("data")
        src.add_argument("--input", help="points CSV (x,y[,z]) or grid JSON")
        src.add_argument("--format", choices=("csv", "json"))
        src.add_argument("--example", choices=datasets.EXAMPLES)
        src.add_argument("--size", type=int, nargs="+", help="m, or m1 m2 for grids")
        src.add_argument("--seed", type=int, default=0)
        p.add_argument("--degree", type=int, default=3)
        p.add_argument("--ctrl", type=int)
        p.add_argument("--ctrl-u", type=int)
        p.add_argument("--ctrl-v", type=int)
        p.add_argument("--weights", choices=("optimal", "manual"), default="optimal")
        p.add_argument("--omega", type=float)
        p.add_argument("--gamma", type=float)
        p.add_argument("--upsilon", type=float)
        p.add_argument("--mu", type=float)
        p.add_argument("--init", choices=("I", "II"), default="II")
        p.add_argument("--tol", type=float, default=1e-7)
        p.add_argument("--max-iters", type=int, default=100_000)
        p.add_argument("--samples", type=int)
        p.add_argument("--repeats", type=int, default=10, help="timed runs averaged by compare")
        p.add_argument("--fractions", nargs="+", default=list(TABLE1_FRACTIONS),
                       help="control counts for table1, e.g. m/12 2m/3")
        p.add_argument("--out-dir", default="out")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    doc = {k: v for k, v in vars(args).items() if k != "verbose"}
    return RunConfig.from_dict(doc)


def execute(cfg: RunConfig) -> int:
    result = COMMANDS[cfg.mode](cfg)
    if isinstance(result, FitReport):
        print(f"{result.status}: {result.iterations} iterations, E={result.E_final:.3e}")
        return STATUS_EXIT[result.status]
    if cfg.mode == "compare":
        print(f"MLSPIA {result['mlspia']['iterations']} vs LSPIA {result['lspia']['iterations']} iterations, "
              f"max deviation {result['max_deviation']:.3e}")
        statuses = {result["mlspia"]["status"], result["lspia"]["status"]}
        return max(STATUS_EXIT[s] for s in statuses)
    if cfg.mode == "analyze":
        sp = result["spectral"][0]
        print(f"sigma_max={sp['sigma_max']:.12g} sigma_min={sp['sigma_min']:.12g} rank={sp['rank']}")
        print("weights: " + ", ".join(f"{k}={v:.12g}" for k, v in result["weights"].items() if v is not None))
    elif cfg.mode == "table1":
        print("n:  " + " ".join(f"{n:6d}" for n in result["n"]))
        for k, v in result["iterations"].items():
            print(f"{k:3s} " + " ".join(f"{x:6d}" for x in v))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        cfg = config_from_args(args)
        return execute(cfg)
    except (ConfigError, InvalidWeightsError, io.PointFileError, FileNotFoundError) as exc:
        print(f"pia-fit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
