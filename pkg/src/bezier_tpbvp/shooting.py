"""Shooting on the unknown initial derivative.

The second-order problem is augmented to ``y = (x, x')`` and integrated with a
Dormand-Prince 5(4) pair.  Scalar problems use an expanding bracket around the
guess followed by Brent's method; vector problems use damped Newton with a
forward-difference Jacobian.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import OdeSolution, RK45

from .errors import DomainError, DynamicsDomainError, IntegrationError, ShootingError
from .problem import BvpProblem


@dataclass
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0 or self.max_steps <= 0:
            raise DomainError("integrator tolerances and max_steps must be positive")


@dataclass
class ShootingConfig:
    """Tolerances and iteration limits for both shooting variants.

    ``tol_bc`` is in the problem's state units.  ``fd_step`` scales the
    Jacobian perturbation ``h_j = fd_step * (1 + |v_j|)``.
    """

    tol_bc: float = 1e-8
    max_expansions: int = 80
    expansion_factor: float = math.sqrt(2.0)
    max_root_iterations: int = 200
    fd_step: float = 1e-7
    max_newton: int = 50
    max_backtracks: int = 20
    damping: float = 0.5
    max_condition: float = 1e14


@dataclass
class Trajectory:
    """Integrator step points plus a dense interpolant over ``[t_i, t_f]``."""

    t: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    dense: OdeSolution = field(repr=False)
    n_steps: int = 0

    def sample(self, times) -> tuple[np.ndarray, np.ndarray]:
        """States ``(x, x')`` at the requested times, shaped ``(N, m)`` each."""
        y = np.atleast_2d(self.dense(np.asarray(times, dtype=float)).T)
        m = self.x.shape[1]
        return y[:, :m], y[:, m:]

    @property
    def final_state(self) -> np.ndarray:
        return self.x[-1]


@dataclass
class ShootingOutcome:
    xdot_i: np.ndarray
    iterations_bracket: int
    iterations_root: int
    terminal_residual: float
    converged: bool
    wall_time_s: float
    n_fev: int = 0
    n_fev_bracket: int = 0
    n_fev_jacobian: int = 0
    n_fev_backtrack: int = 0
    failure: str = ""


def integrate_ivp(
    problem: BvpProblem, xdot_i, config: Optional[IntegratorConfig] = None
) -> Trajectory:
    """Integrate from ``(t_i, x_i, xdot_i)`` to ``t_f``.

    Raises :class:`IntegrationError` on step exhaustion or solver failure and
    :class:`DynamicsDomainError` if the path leaves the admissible set.
    """
    config = config or IntegratorConfig()
    m = problem.dimension
    xdot_i = np.atleast_1d(np.asarray(xdot_i, dtype=float))
    if xdot_i.shape != (m,) or not np.all(np.isfinite(xdot_i)):
        raise DomainError(f"initial derivative must be a finite vector of length {m}")

    def rhs(t, y):
        return np.concatenate([y[m:], problem.acceleration(t, y[:m], y[m:])])

    y0 = np.concatenate([problem.x_i, xdot_i])
    solver = RK45(rhs, problem.t_i, y0, problem.t_f, rtol=config.rtol, atol=config.atol)
    ts = [problem.t_i]
    ys = [y0.copy()]
    interpolants = []
    while solver.status == "running":
        if len(interpolants) >= config.max_steps:
            raise IntegrationError(f"exceeded {config.max_steps} steps before t_f")
        message = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"integrator failed at t={solver.t}: {message}")
        ts.append(solver.t)
        ys.append(solver.y.copy())
        interpolants.append(solver.dense_output())
    y = np.array(ys)
    return Trajectory(
        t=np.array(ts),
        x=y[:, :m],
        xdot=y[:, m:],
        dense=OdeSolution(ts, interpolants),
        n_steps=len(interpolants),
    )


def terminal_miss(problem: BvpProblem, xdot_i, config: Optional[IntegratorConfig] = None) -> np.ndarray:
    """``x(t_f; xdot_i) - x_f``."""
    return integrate_ivp(problem, xdot_i, config).final_state - problem.x_f


class _CountedMiss:
    """Terminal-miss function that tallies evaluations by phase."""

    def __init__(self, problem, integrator):
        self.problem = problem
        self.integrator = integrator
        self.counts = {"bracket": 0, "jacobian": 0, "backtrack": 0, "root": 0}

    def __call__(self, v, phase):
        self.counts[phase] += 1
        return terminal_miss(self.problem, np.atleast_1d(v), self.integrator)

    @property
    def total(self):
        return sum(self.counts.values())


def _outcome(miss, v, residual, converged, started, iterations_bracket, iterations_root, failure=""):
    c = miss.counts
    return ShootingOutcome(
        xdot_i=np.atleast_1d(np.asarray(v, dtype=float)).copy(),
        iterations_bracket=iterations_bracket,
        iterations_root=iterations_root,
        terminal_residual=float(residual),
        converged=converged,
        wall_time_s=time.perf_counter() - started,
        n_fev=miss.total,
        n_fev_bracket=c["bracket"],
        n_fev_jacobian=c["jacobian"],
        n_fev_backtrack=c["backtrack"],
        failure=failure,
    )


def _brent(fun, a, b, fa, fb, ftol, max_iter):
    """Brent's method on a sign-changing bracket; returns (root, f(root), iterations)."""
    if abs(fa) < abs(fb):
        a, b, fa, fb = b, a, fb, fa
    c, fc = a, fa
    d = e = b - a
    iterations = 0
    while abs(fb) > ftol:
        if iterations >= max_iter:
            raise ShootingError(f"root phase did not converge in {max_iter} iterations")
        if fb * fc > 0.0:
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol = 2.0 * np.finfo(float).eps * abs(b)
        m = 0.5 * (c - b)
        if abs(m) <= tol:
            # bracket collapsed to rounding level without meeting ftol
            break
        if abs(e) >= tol and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                q, r = fa / fc, fb / fc
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            else:
                p = -p
            if 2.0 * p < min(3.0 * m * q - abs(tol * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = e = m
        else:
            d = e = m
        a, fa = b, fb
        b = b + (d if abs(d) > tol else math.copysign(tol, m))
        fb = fun(b)
        iterations += 1
    return b, fb, iterations


def shoot_1d(
    problem: BvpProblem,
    guess: float,
    config: Optional[ShootingConfig] = None,
    integrator: Optional[IntegratorConfig] = None,
) -> ShootingOutcome:
    """Bracket-then-Brent shooting for scalar problems.

    The bracket phase widens ``guess -/+ dx`` by ``expansion_factor`` per trial
    starting from ``dx = |guess|/50`` (``1/50`` for a zero guess) until the
    miss changes sign; ``iterations_bracket`` counts the trials.
    """
    if problem.dimension != 1:
        raise DomainError("shoot_1d requires a scalar problem")
    config = config or ShootingConfig()
    started = time.perf_counter()
    miss = _CountedMiss(problem, integrator)
    guess = float(np.asarray(guess).reshape(-1)[0])

    def F(v, phase):
        return float(miss(v, phase)[0])

    fx = F(guess, "bracket")
    if abs(fx) <= config.tol_bc:
        return _outcome(miss, guess, abs(fx), True, started, 0, 0)

    dx = abs(guess) / 50.0 if guess != 0.0 else 1.0 / 50.0
    expansions = 0
    bracket = None
    while bracket is None:
        if expansions >= config.max_expansions:
            raise ShootingError(
                f"no sign change within {config.max_expansions} bracket expansions",
                _outcome(miss, guess, abs(fx), False, started, expansions, 0, "bracket"),
            )
        a, b = guess - dx, guess + dx
        expansions += 1
        try:
            fa = F(a, "bracket")
            fb = F(b, "bracket")
        except (IntegrationError, DynamicsDomainError):
            dx *= config.expansion_factor
            continue
        if fa * fx <= 0.0:
            bracket = (a, guess, fa, fx)
        elif fb * fx <= 0.0:
            bracket = (guess, b, fx, fb)
        dx *= config.expansion_factor

    a, b, fa, fb = bracket
    for v, fv in ((a, fa), (b, fb)):
        if abs(fv) <= config.tol_bc:
            return _outcome(miss, v, abs(fv), True, started, expansions, 0)

    try:
        root, froot, iterations = _brent(
            lambda v: F(v, "root"), a, b, fa, fb, config.tol_bc, config.max_root_iterations
        )
    except ShootingError as exc:
        best, fbest = (a, fa) if abs(fa) < abs(fb) else (b, fb)
        raise ShootingError(
            str(exc),
            _outcome(miss, best, abs(fbest), False, started, expansions, miss.counts["root"], "stagnation"),
        ) from exc
    converged = abs(froot) <= config.tol_bc
    return _outcome(
        miss, root, abs(froot), converged, started, expansions, iterations,
        "" if converged else "stagnation",
    )


def _fd_jacobian(miss, v, f0, config):
    m = v.size
    J = np.empty((f0.size, m))
    for j in range(m):
        h = config.fd_step * (1.0 + abs(v[j]))
        vp = v.copy()
        vp[j] += h
        J[:, j] = (miss(vp, "jacobian") - f0) / (vp[j] - v[j])
    return J


def shoot_nd(
    problem: BvpProblem,
    guess,
    config: Optional[ShootingConfig] = None,
    integrator: Optional[IntegratorConfig] = None,
) -> ShootingOutcome:
    """Damped Newton on ``F(v) = x(t_f; v) - x_f``.

    Each step costs one forward-difference Jacobian (m integrations) and at
    least one trial integration; trials are halved up to ``max_backtracks``
    times until ``|F|`` decreases.  ``iterations_root`` counts accepted steps.
    The initial evaluation at the guess is booked as the bracket phase, so
    ``iterations_root == n_fev - n_fev_bracket - n_fev_jacobian - n_fev_backtrack``.
    """
    config = config or ShootingConfig()
    started = time.perf_counter()
    miss = _CountedMiss(problem, integrator)
    v = np.atleast_1d(np.asarray(guess, dtype=float)).copy()
    if v.shape != (problem.dimension,):
        raise DomainError(f"guess must have length {problem.dimension}")

    def fail(reason, v, norm, steps):
        return ShootingError(reason, _outcome(miss, v, norm, False, started, 0, steps, reason))

    try:
        f = miss(v, "bracket")
    except (IntegrationError, DynamicsDomainError) as exc:
        raise fail(f"integration from the guess failed: {exc}", v, math.inf, 0) from exc
    norm = float(np.linalg.norm(f))
    steps = 0
    while norm > config.tol_bc:
        if steps >= config.max_newton:
            raise fail(f"no convergence in {config.max_newton} Newton steps", v, norm, steps)
        try:
            J = _fd_jacobian(miss, v, f, config)
        except (IntegrationError, DynamicsDomainError) as exc:
            raise fail(f"Jacobian integration failed: {exc}", v, norm, steps) from exc
        if not np.all(np.isfinite(J)) or np.linalg.cond(J) > config.max_condition:
            raise fail("singular Jacobian", v, norm, steps)
        delta = np.linalg.solve(J, f)
        lam = 1.0
        for attempt in range(config.max_backtracks + 1):
            trial = v - lam * delta
            try:
                f_trial = miss(trial, "backtrack")
                trial_norm = float(np.linalg.norm(f_trial))
            except (IntegrationError, DynamicsDomainError):
                trial_norm = math.inf
            if trial_norm < norm:
                break
            lam *= config.damping
        else:
            raise fail("damping underflow", v, norm, steps)
        # the accepted trial is the step's own evaluation, not a backtrack
        miss.counts["backtrack"] -= 1
        miss.counts["root"] += 1
        v, f, norm = trial, f_trial, trial_norm
        steps += 1
    return _outcome(miss, v, norm, True, started, 0, steps)


def shoot(problem: BvpProblem, guess, config=None, integrator=None) -> ShootingOutcome:
    """Dispatch to :func:`shoot_1d` or :func:`shoot_nd` by problem dimension."""
    if problem.dimension == 1:
        return shoot_1d(problem, guess, config, integrator)
    return shoot_nd(problem, guess, config, integrator)
