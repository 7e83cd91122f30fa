"""Second-order two-point boundary value problems and their residual."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, DynamicsDomainError

Dynamics = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
Admissible = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class BvpProblem:
    """``x'' = f(t, x, x')`` on ``[t_i, t_f]`` with ``x(t_i) = x_i``, ``x(t_f) = x_f``.

    ``dynamics`` must broadcast over leading axes: ``t`` of shape ``(...)`` and
    ``x``, ``xdot`` of shape ``(..., m)`` give an acceleration of shape
    ``(..., m)``.  ``admissible(t, x)`` returns a boolean of shape ``(...)``
    marking states where the dynamics are defined; the default accepts all.
    """

    dynamics: Dynamics
    t_i: float
    t_f: float
    x_i: np.ndarray
    x_f: np.ndarray
    admissible: Optional[Admissible] = None
    units: str = ""
    name: str = field(default="", compare=False)

    def __post_init__(self):
        x_i = np.atleast_1d(np.array(self.x_i, dtype=float))
        x_f = np.atleast_1d(np.array(self.x_f, dtype=float))
        if x_i.ndim != 1 or x_i.shape != x_f.shape:
            raise DomainError(
                f"boundary states must be equal-length vectors, got {x_i.shape} and {x_f.shape}"
            )
        if not (np.isfinite(self.t_i) and np.isfinite(self.t_f)) or self.t_f <= self.t_i:
            raise DomainError(f"need t_f > t_i, got [{self.t_i}, {self.t_f}]")
        x_i.setflags(write=False)
        x_f.setflags(write=False)
        object.__setattr__(self, "x_i", x_i)
        object.__setattr__(self, "x_f", x_f)
        object.__setattr__(self, "t_i", float(self.t_i))
        object.__setattr__(self, "t_f", float(self.t_f))

    @property
    def dimension(self) -> int:
        return self.x_i.shape[0]

    def is_admissible(self, t, x) -> np.ndarray:
        if self.admissible is None:
            return np.ones(np.shape(t), dtype=bool)
        return np.asarray(self.admissible(t, x), dtype=bool)

    def acceleration(self, t, x, xdot) -> np.ndarray:
        """Evaluate ``f`` after checking admissibility."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        xdot = np.asarray(xdot, dtype=float)
        ok = self.is_admissible(t, x)
        if not np.all(ok):
            bad_t = t[~ok] if t.ndim else t
            raise DynamicsDomainError(
                f"{self.name or 'problem'}: dynamics undefined at t={bad_t}"
            )
        return np.asarray(self.dynamics(t, x, xdot), dtype=float)


def residual(problem: BvpProblem, t, x, xdot, xddot) -> np.ndarray:
    """Time-domain residual ``g = x'' - f(t, x, x')``; zero on exact solutions."""
    return np.asarray(xddot, dtype=float) - problem.acceleration(t, x, xdot)


def _paper_1d_dynamics(t, x, xdot):
    t = np.asarray(t, dtype=float)
    return (32.0 + 2.0 * t[..., None] ** 3 - x * xdot) / 8.0


def make_paper_1d_problem() -> BvpProblem:
    """``x'' = (32 + 2 t**3 - x x') / 8`` on ``[1, 3]``, ``x(1) = 17``, ``x(3) = 43/3``.

    The exact solution is ``x(t) = t**2 + 16/t`` (see :func:`paper_1d_exact`).
    """
    return BvpProblem(
        dynamics=_paper_1d_dynamics,
        t_i=1.0,
        t_f=3.0,
        x_i=[17.0],
        x_f=[43.0 / 3.0],
        units="dimensionless",
        name="1d",
    )


def paper_1d_exact(t):
    """Exact ``(x, x', x'')`` of the 1-D example at times ``t``."""
    t = np.asarray(t, dtype=float)
    return t**2 + 16.0 / t, 2.0 * t - 16.0 / t**2, 2.0 + 32.0 / t**3
