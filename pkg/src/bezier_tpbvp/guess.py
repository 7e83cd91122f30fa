"""Initial-derivative guesses from a quadratic Bezier least-squares fit.

Both the time ``t(s)`` and the state ``x(s)`` are written as quadratic Bezier
curves whose end control points are the boundary conditions.  The two
intermediate control points ``(t_1, x_1)`` are chosen to minimize

    L = int_0^1 g_s(s)^T g_s(s) ds,
    g_s = (x'' t' - t'' x') / t'^3 - f(t(s), x(s), x'/t'),

(primes are s-derivatives), and the shooting guess is ``x'(0) / t'(0)``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .bezier import BezierCurve, eval_curve, eval_derivatives
from .errors import DomainError, TimeDegeneracyError
from .problem import BvpProblem

#: Finite stand-in for L at candidates where the residual is undefined.
PENALTY = 1e12
#: Relative floor on t'(s), as a fraction of the time span.
MONOTONE_RTOL = 1e-9


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature on ``[0, 1]`` with weights summing to one."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size < 2:
            raise DomainError("quadrature needs at least two nodes with matching weights")
        if np.any(nodes <= 0.0) or np.any(nodes >= 1.0) or np.any(weights <= 0.0):
            raise DomainError("quadrature nodes must lie in (0, 1) with positive weights")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise DomainError(f"quadrature weights sum to {weights.sum()!r}, expected 1")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def gauss_legendre(cls, n: int = 32) -> "QuadratureRule":
        """n-point Gauss-Legendre rule mapped to ``[0, 1]``; exact to degree 2n - 1."""
        if n < 2:
            raise DomainError("Gauss-Legendre rule needs n >= 2")
        x, w = np.polynomial.legendre.leggauss(n)
        return cls(nodes=0.5 * (x + 1.0), weights=0.5 * w)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


@dataclass(frozen=True)
class SDomainForm:
    """Quadratic time and state curves sharing the parameter s."""

    time_curve: BezierCurve
    state_curve: BezierCurve

    def __post_init__(self):
        if self.time_curve.degree != 2 or self.state_curve.degree != 2:
            raise DomainError("only quadratic s-domain forms are supported")
        if self.time_curve.dimension != 1:
            raise DomainError("time curve must be scalar")

    @classmethod
    def from_parameters(cls, problem: BvpProblem, params) -> "SDomainForm":
        """Build the form from the packed free parameters ``(t_1, x_1)``."""
        params = np.asarray(params, dtype=float)
        m = problem.dimension
        if params.shape != (1 + m,):
            raise DomainError(f"expected {1 + m} free parameters, got shape {params.shape}")
        time_curve = BezierCurve([problem.t_i, params[0], problem.t_f])
        state_curve = BezierCurve(np.vstack([problem.x_i, params[1:], problem.x_f]))
        return cls(time_curve, state_curve)

    @classmethod
    def midpoint(cls, problem: BvpProblem) -> "SDomainForm":
        """Form with the intermediate control points at the boundary midpoints."""
        t_1 = 0.5 * (problem.t_i + problem.t_f)
        x_1 = 0.5 * (problem.x_i + problem.x_f)
        return cls.from_parameters(problem, np.concatenate([[t_1], x_1]))

    @property
    def free_parameters(self) -> np.ndarray:
        return np.concatenate([self.time_curve.control_points[1], self.state_curve.control_points[1]])

    @property
    def t_1(self) -> float:
        return float(self.time_curve.control_points[1, 0])

    @property
    def x_1(self) -> np.ndarray:
        return self.state_curve.control_points[1].copy()

    def monotone_floor(self) -> float:
        t_cp = self.time_curve.control_points[:, 0]
        return MONOTONE_RTOL * (t_cp[-1] - t_cp[0])


def _curve_terms(form: SDomainForm, s):
    t = eval_curve(form.time_curve, s)[..., 0]
    x = eval_curve(form.state_curve, s)
    t1, t2 = eval_derivatives(form.time_curve, s)
    x1, x2 = eval_derivatives(form.state_curve, s)
    return t, x, t1[..., 0], t2[..., 0], x1, x2


def _residual_from_terms(problem, t, x, tp, tpp, xp, xpp):
    xdot = xp / tp[..., None]
    xddot = (xpp * tp[..., None] - tpp[..., None] * xp) / tp[..., None] ** 3
    return xddot - problem.dynamics(t, x, xdot)


def s_domain_residual(form: SDomainForm, problem: BvpProblem, s) -> np.ndarray:
    """Residual of the dynamics along the curves at parameter(s) ``s``.

    Raises :class:`TimeDegeneracyError` where ``t'(s)`` is not above the
    monotonicity floor and propagates dynamics-domain errors.
    """
    t, x, tp, tpp, xp, xpp = _curve_terms(form, s)
    tp_arr = np.atleast_1d(tp)
    if np.any(tp_arr <= form.monotone_floor()):
        raise TimeDegeneracyError(f"t'(s) = {tp_arr.min():.3e} is not strictly positive")
    xdot = xp / np.asarray(tp)[..., None]
    problem.acceleration(t, x, xdot)  # admissibility check
    return _residual_from_terms(problem, np.asarray(t), x, np.asarray(tp), np.asarray(tpp), xp, xpp)


def evaluate_L(form: SDomainForm, problem: BvpProblem, rule: QuadratureRule) -> float:
    """Quadrature of ``g_s^T g_s`` over ``[0, 1]``.

    Returns :data:`PENALTY` when ``t'`` falls below the monotonicity floor or
    the state is inadmissible at any node, so optimizers retreat instead of
    seeing NaN.
    """
    s = rule.nodes
    t, x, tp, tpp, xp, xpp = _curve_terms(form, s)
    if np.any(tp <= form.monotone_floor()) or not np.all(problem.is_admissible(t, x)):
        return PENALTY
    g = _residual_from_terms(problem, t, x, tp, tpp, xp, xpp)
    value = rule.integrate(np.einsum("ij,ij->i", g, g))
    if not np.isfinite(value):
        return PENALTY
    return value


def extract_initial_guess(form: SDomainForm) -> np.ndarray:
    """``x'(0) / t'(0)``, i.e. ``(x_1 - x_0) / (t_1 - t_0)`` for quadratic curves."""
    tp0 = eval_derivatives(form.time_curve, 0.0)[0][0]
    if tp0 <= form.monotone_floor():
        raise TimeDegeneracyError(f"t'(0) = {tp0!r}; cannot extract an initial derivative")
    return eval_derivatives(form.state_curve, 0.0)[0] / tp0


@dataclass
class OptimizerConfig:
    """Nelder-Mead settings; ``max_evals=None`` means ``2000 * (1 + m)``."""

    fatol: float = 1e-10
    xatol: float = 1e-8
    max_evals: Optional[int] = None


@dataclass
class GuessResult:
    t_1: float
    x_1: np.ndarray
    L_min: float
    xdot_i_guess: np.ndarray
    optimizer_evals: int
    converged: bool
    form: SDomainForm = field(repr=False)
    elapsed_s: float = 0.0


def optimize_control_points(
    problem: BvpProblem,
    rule: Optional[QuadratureRule] = None,
    config: Optional[OptimizerConfig] = None,
    initial: Optional[np.ndarray] = None,
) -> GuessResult:
    """Minimize L over ``(t_1, x_1)`` with Nelder-Mead from the boundary midpoints."""
    rule = rule or QuadratureRule.gauss_legendre()
    config = config or OptimizerConfig()
    m = problem.dimension
    max_evals = config.max_evals or 2000 * (1 + m)
    x0 = SDomainForm.midpoint(problem).free_parameters if initial is None else np.asarray(initial, float)

    def objective(params):
        return evaluate_L(SDomainForm.from_parameters(problem, params), problem, rule)

    start = time.perf_counter()
    res = minimize(
        objective,
        x0,
        method="Nelder-Mead",
        options={"xatol": config.xatol, "fatol": config.fatol, "maxfev": max_evals, "maxiter": max_evals},
    )
    elapsed = time.perf_counter() - start
    form = SDomainForm.from_parameters(problem, res.x)
    return GuessResult(
        t_1=form.t_1,
        x_1=form.x_1,
        L_min=float(res.fun),
        xdot_i_guess=extract_initial_guess(form),
        optimizer_evals=int(res.nfev),
        converged=bool(res.success) and res.fun < PENALTY,
        form=form,
        elapsed_s=elapsed,
    )
