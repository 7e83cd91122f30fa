"""End-to-end runs: Bezier guess vs. baseline guess, each refined by shooting."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import BvpError, ConfigError, ShootingError
from .guess import OptimizerConfig, QuadratureRule, optimize_control_points
from .orbit import (
    CaseCatalog,
    TwoBodyParams,
    builtin_catalog,
    canonical_scaling,
    cross_product_baseline_guess,
    error_pct,
    velocity_unit,
)
from .problem import make_paper_1d_problem
from .shooting import IntegratorConfig, ShootingConfig, integrate_ivp, shoot

ONE_D_ID = "1d"
#: Exact initial derivative of the 1-D example, x(t) = t^2 + 16/t.
ONE_D_EXACT_SLOPE = -14.0
METHODS = ("proposed", "general")

REPORT_COLUMNS = [
    "case", "method", "converged",
    "guess_x", "guess_y", "guess_z",
    "sol_x", "sol_y", "sol_z",
    "err_pct_x", "err_pct_y", "err_pct_z",
    "iter_bracket", "iter_root",
    "bezier_s", "shoot_s", "total_s",
    "terminal_residual_km",
]


@dataclass
class ShootingSettings:
    tol_bc_1d: float = 1e-8
    tol_bc_km: float = 1e-3
    fd_step: float = 1e-7
    max_newton: int = 50
    max_expansions: int = 80
    baseline_1d_guess: float = 0.0
    baseline_speed: str = "unit"


@dataclass
class HarnessConfig:
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    quad_nodes: int = 32
    shooting: ShootingSettings = field(default_factory=ShootingSettings)
    catalog: CaseCatalog = field(default_factory=builtin_catalog)
    include_1d: bool = True
    mu: float = 398600.0

    @property
    def params(self) -> TwoBodyParams:
        return TwoBodyParams(self.mu)

    def rule(self) -> QuadratureRule:
        return QuadratureRule.gauss_legendre(self.quad_nodes)

    def case_ids(self) -> list[str]:
        return ([ONE_D_ID] if self.include_1d else []) + self.catalog.ids()


def _section(cls, data, name):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError, BvpError) as exc:
        raise ConfigError(f"invalid {name!r} section: {exc}") from exc


def config_from_dict(data: dict) -> HarnessConfig:
    """Build a config from the JSON layout ``{integrator, optimizer, quadrature, shooting, cases}``."""
    allowed = {"integrator", "optimizer", "quadrature", "shooting", "cases", "include_1d", "mu"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
    quadrature = data.get("quadrature") or {}
    nodes = quadrature.get("nodes", 32)
    if not isinstance(nodes, int) or nodes < 2:
        raise ConfigError("quadrature.nodes must be an integer >= 2")
    cases = data.get("cases")
    catalog = builtin_catalog() if cases is None else CaseCatalog.from_dicts(cases)
    config = HarnessConfig(
        integrator=_section(IntegratorConfig, data.get("integrator"), "integrator"),
        optimizer=_section(OptimizerConfig, data.get("optimizer"), "optimizer"),
        quad_nodes=nodes,
        shooting=_section(ShootingSettings, data.get("shooting"), "shooting"),
        catalog=catalog,
        include_1d=bool(data.get("include_1d", True)),
        mu=float(data.get("mu", 398600.0)),
    )
    if config.shooting.baseline_speed not in ("unit", "circular"):
        raise ConfigError("shooting.baseline_speed must be 'unit' or 'circular'")
    if not config.mu > 0:
        raise ConfigError("mu must be positive")
    return config


def load_config(path) -> HarnessConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a JSON object")
    return config_from_dict(data)


@dataclass
class RunReport:
    case_id: str
    method: str
    guess: list
    solution: list
    guess_error_pct: list
    bezier_time_s: float
    shooting_time_s: float
    total_time_s: float
    iterations_bracket: int
    iterations_root: int
    converged: bool
    terminal_residual: float
    failure: str = ""

    def csv_row(self) -> dict:
        row = {"case": self.case_id, "method": self.method, "converged": self.converged}
        for prefix, values in (("guess", self.guess), ("sol", self.solution), ("err_pct", self.guess_error_pct)):
            for axis, value in zip("xyz", list(values) + [None] * 3):
                row[f"{prefix}_{axis}"] = "" if value is None else repr(float(value))
        row.update(
            iter_bracket=self.iterations_bracket,
            iter_root=self.iterations_root,
            bezier_s=repr(self.bezier_time_s),
            shoot_s=repr(self.shooting_time_s),
            total_s=repr(self.total_time_s),
            terminal_residual_km=repr(self.terminal_residual),
        )
        return row

    @classmethod
    def from_csv_row(cls, row: dict) -> "RunReport":
        def vec(prefix):
            return [float(row[f"{prefix}_{a}"]) for a in "xyz" if row[f"{prefix}_{a}"] != ""]

        return cls(
            case_id=row["case"],
            method=row["method"],
            guess=vec("guess"),
            solution=vec("sol"),
            guess_error_pct=vec("err_pct"),
            bezier_time_s=float(row["bezier_s"]),
            shooting_time_s=float(row["shoot_s"]),
            total_time_s=float(row["total_s"]),
            iterations_bracket=int(row["iter_bracket"]),
            iterations_root=int(row["iter_root"]),
            converged=row["converged"] == "True",
            terminal_residual=float(row["terminal_residual_km"]),
        )


def _ms(seconds: float) -> float:
    return round(seconds, 4)


def improvement_pct(general_total: float, proposed_total: float) -> float:
    """Relative time saved by the proposed pipeline, in percent."""
    return 100.0 * (general_total - proposed_total) / general_total


@dataclass
class _Setup:
    problem: object
    velocity_scale: float
    residual_scale: float
    shooting: ShootingConfig
    x_i: np.ndarray
    x_f: np.ndarray


def _setup(case_id: str, config: HarnessConfig) -> _Setup:
    s = config.shooting
    if case_id == ONE_D_ID:
        sc = ShootingConfig(tol_bc=s.tol_bc_1d, fd_step=s.fd_step, max_newton=s.max_newton,
                            max_expansions=s.max_expansions)
        problem = make_paper_1d_problem()
        return _Setup(problem, 1.0, 1.0, sc, problem.x_i, problem.x_f)
    try:
        case = config.catalog[case_id]
    except KeyError:
        raise ConfigError(f"unknown case {case_id!r}; known: {config.case_ids()}") from None
    du, _ = canonical_scaling(config.params, case.r_i_km)
    sc = ShootingConfig(tol_bc=s.tol_bc_km / du, fd_step=s.fd_step, max_newton=s.max_newton,
                        max_expansions=s.max_expansions)
    return _Setup(case.problem(config.params), velocity_unit(config.params, case), du, sc,
                  np.array(case.r_i_km), np.array(case.r_f_km))


def bezier_guess(case_id: str, config: Optional[HarnessConfig] = None):
    """Bezier guess for a case, as ``(GuessResult, guess in physical units)``."""
    config = config or HarnessConfig()
    setup = _setup(case_id, config)
    result = optimize_control_points(setup.problem, config.rule(), config.optimizer)
    return result, result.xdot_i_guess * setup.velocity_scale


def baseline_guess(case_id: str, config: HarnessConfig) -> np.ndarray:
    """Baseline guess in physical units."""
    if case_id == ONE_D_ID:
        return np.array([config.shooting.baseline_1d_guess])
    case = config.catalog[case_id]
    return cross_product_baseline_guess(config.params, case.r_i_km, case.r_f_km, config.shooting.baseline_speed)


def run_case(case_id: str, method: str, config: Optional[HarnessConfig] = None) -> RunReport:
    """Guess (Bezier or baseline) then shoot; non-convergence is recorded, not raised."""
    config = config or HarnessConfig()
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {method!r}")
    setup = _setup(case_id, config)
    bezier_time = 0.0
    failure = ""
    if method == "proposed":
        result = optimize_control_points(setup.problem, config.rule(), config.optimizer)
        bezier_time = result.elapsed_s
        guess = result.xdot_i_guess * setup.velocity_scale
        if not result.converged:
            failure = "optimizer did not converge; "
    else:
        guess = baseline_guess(case_id, config)
    try:
        outcome = shoot(setup.problem, guess / setup.velocity_scale, setup.shooting, config.integrator)
    except ShootingError as exc:
        outcome = exc.outcome
        failure += str(exc)
        if outcome is None:
            raise
    solution = outcome.xdot_i * setup.velocity_scale
    shoot_time = _ms(outcome.wall_time_s)
    bezier_time = _ms(bezier_time)
    return RunReport(
        case_id=case_id,
        method=method,
        guess=[float(v) for v in guess],
        solution=[float(v) for v in solution],
        guess_error_pct=[float(v) for v in error_pct(guess, solution)],
        bezier_time_s=bezier_time,
        shooting_time_s=shoot_time,
        total_time_s=_ms(bezier_time + shoot_time),
        iterations_bracket=outcome.iterations_bracket,
        iterations_root=outcome.iterations_root,
        converged=outcome.converged,
        terminal_residual=float(outcome.terminal_residual * setup.residual_scale),
        failure=failure or outcome.failure,
    )


def _run_pair(args):
    case_id, method, config = args
    return run_case(case_id, method, config)


def run_suite(config: Optional[HarnessConfig] = None, jobs: int = 1) -> list[RunReport]:
    """Every case under both methods, in catalog order (1-D first)."""
    config = config or HarnessConfig()
    tasks = [(cid, method, config) for cid in config.case_ids() for method in METHODS]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_pair, tasks))
    return [_run_pair(t) for t in tasks]


def summary_rows(reports: list[RunReport]) -> list[dict]:
    """One row per case pairing both methods, with improvement and branch check."""
    by_case: dict[str, dict[str, RunReport]] = {}
    for r in reports:
        by_case.setdefault(r.case_id, {})[r.method] = r
    rows = []
    for case_id, pair in by_case.items():
        prop, gen = pair.get("proposed"), pair.get("general")
        row = {
            "case": case_id,
            "proposed_converged": prop.converged if prop else None,
            "general_converged": gen.converged if gen else None,
            "proposed_iterations": (prop.iterations_bracket, prop.iterations_root) if prop else None,
            "general_iterations": (gen.iterations_bracket, gen.iterations_root) if gen else None,
            "improvement_pct": None,
            "same_solution": None,
        }
        if prop and gen and prop.converged and gen.converged:
            if gen.total_time_s > 0:
                row["improvement_pct"] = round(improvement_pct(gen.total_time_s, prop.total_time_s), 2)
            row["same_solution"] = bool(np.allclose(prop.solution, gen.solution, rtol=1e-4, atol=1e-6))
        rows.append(row)
    return rows


def write_reports(reports: list[RunReport], out_dir) -> dict:
    """Write ``report.csv``, ``report.json`` and ``summary.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "report.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        for r in reports:
            writer.writerow(r.csv_row())
    json_path = out / "report.json"
    json_path.write_text(json.dumps([asdict(r) for r in reports], indent=2))
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(summary_rows(reports), indent=2))
    return {"csv": csv_path, "json": json_path, "summary": summary_path}


def read_report_csv(path) -> list[RunReport]:
    with Path(path).open(newline="") as fh:
        return [RunReport.from_csv_row(row) for row in csv.DictReader(fh)]


def export_trajectory(case_id: str, source: str, samples: int = 101,
                      config: Optional[HarnessConfig] = None, path=None) -> list[list[float]]:
    """Plot-ready samples of the Bezier approximation or the shot trajectory.

    ``bezier`` rows are ``(s, t, x...)`` at uniform s; ``integrated`` rows are
    ``(t, x..., xdot...)`` at uniform t from the dense output.  Physical units.
    Written as CSV with a header when ``path`` is given.
    """
    config = config or HarnessConfig()
    if samples < 2:
        raise ConfigError("need at least two samples")
    setup = _setup(case_id, config)
    problem = setup.problem
    m = problem.dimension
    axes = "xyz" if m == 3 else [str(j + 1) for j in range(m)]
    time_scale = 1.0 if case_id == ONE_D_ID else setup.residual_scale / setup.velocity_scale
    result = optimize_control_points(problem, config.rule(), config.optimizer)

    if source in ("bezier", "bezier_approx"):
        s = np.linspace(0.0, 1.0, samples)
        t = result.form.time_curve(s)[:, 0] * time_scale
        x = result.form.state_curve(s) * setup.residual_scale
        x[0], x[-1] = setup.x_i, setup.x_f
        rows = np.column_stack([s, t, x])
        header = ["s", "t"] + [f"x_{a}" for a in axes]
    elif source == "integrated":
        try:
            outcome = shoot(problem, result.xdot_i_guess, setup.shooting, config.integrator)
        except ShootingError as exc:
            raise BvpError(f"case {case_id} is unsolved: {exc}") from exc
        if not outcome.converged:
            raise BvpError(f"case {case_id} is unsolved: {outcome.failure}")
        traj = integrate_ivp(problem, outcome.xdot_i, config.integrator)
        t = np.linspace(problem.t_i, problem.t_f, samples)
        x, xdot = traj.sample(t)
        x = x * setup.residual_scale
        x[0] = setup.x_i
        xdot[0] = outcome.xdot_i
        rows = np.column_stack([t * time_scale, x, xdot * setup.velocity_scale])
        header = ["t"] + [f"x_{a}" for a in axes] + [f"xdot_{a}" for a in axes]
    else:
        raise ConfigError(f"unknown trajectory source {source!r}")

    if path is not None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows([[repr(float(v)) for v in row] for row in rows])
    return rows.tolist()


def any_unconverged(reports: list[RunReport]) -> bool:
    return any(not r.converged for r in reports)


def format_table(reports: list[RunReport]) -> str:
    lines = [f"{'case':>5} {'method':>9} {'conv':>5} {'brk':>4} {'root':>4} "
             f"{'bezier_s':>9} {'shoot_s':>9} {'total_s':>9}  solution"]
    for r in reports:
        sol = ", ".join(f"{v:.4f}" for v in r.solution)
        lines.append(
            f"{r.case_id:>5} {r.method:>9} {str(r.converged):>5} {r.iterations_bracket:>4} "
            f"{r.iterations_root:>4} {r.bezier_time_s:>9.4f} {r.shooting_time_s:>9.4f} "
            f"{r.total_time_s:>9.4f}  ({sol})"
        )
    return "\n".join(lines)


__all__ = [
    "HarnessConfig", "ShootingSettings", "RunReport", "REPORT_COLUMNS", "ONE_D_ID",
    "config_from_dict", "load_config", "run_case", "run_suite", "write_reports",
    "read_report_csv", "export_trajectory", "improvement_pct", "summary_rows",
    "bezier_guess", "baseline_guess", "format_table",
]
