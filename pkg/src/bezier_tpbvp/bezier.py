"""Bernstein basis and non-rational Bezier curves with analytic s-derivatives.

Curves are evaluated with the closed-form Bernstein sum up to degree 10 and
with de Casteljau's algorithm above that.  All evaluators accept either a
scalar parameter or an array of parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

#: Highest degree evaluated by the explicit Bernstein sum.
CLOSED_FORM_MAX_DEGREE = 10


def binomial(n: int, k: int) -> int:
    """Binomial coefficient by multiplicative recurrence (exact integers)."""
    if k < 0 or k > n:
        return 0
    k = min(k, n - k)
    c = 1
    for j in range(1, k + 1):
        c = c * (n - k + j) // j
    return c


def _check_parameter(s):
    s_arr = np.asarray(s, dtype=float)
    if np.any(~np.isfinite(s_arr)) or np.any(s_arr < 0.0) or np.any(s_arr > 1.0):
        raise DomainError(f"curve parameter outside [0, 1]: {s!r}")
    return s_arr


def bernstein(n: int, k: int, s):
    """Bernstein polynomial ``C(n, k) s**k (1 - s)**(n - k)``.

    ``0**0`` is taken as 1, so the endpoints are exact.
    """
    if n < 0 or k < 0 or k > n:
        raise DomainError(f"invalid Bernstein index n={n}, k={k}")
    s_arr = _check_parameter(s)
    # numpy already defines 0.0**0 == 1.0
    value = binomial(n, k) * s_arr**k * (1.0 - s_arr) ** (n - k)
    return float(value) if value.ndim == 0 else value


def basis_matrix(n: int, s) -> np.ndarray:
    """Rows of ``[b_{n,0}(s), ..., b_{n,n}(s)]`` for each parameter in ``s``."""
    s_arr = np.atleast_1d(_check_parameter(s))
    k = np.arange(n + 1)
    coeffs = np.array([binomial(n, j) for j in k], dtype=float)
    return coeffs * s_arr[:, None] ** k * (1.0 - s_arr[:, None]) ** (n - k)


def _de_casteljau(points: np.ndarray, s: np.ndarray) -> np.ndarray:
    # points: (n+1, d), s: (N,) -> (N, d)
    work = np.broadcast_to(points, (s.size,) + points.shape).copy()
    u = s[:, None, None]
    for r in range(points.shape[0] - 1, 0, -1):
        work = (1.0 - u) * work[:, :r] + u * work[:, 1 : r + 1]
    return work[:, 0]


def _evaluate_points(points: np.ndarray, s: np.ndarray) -> np.ndarray:
    n = points.shape[0] - 1
    if n <= CLOSED_FORM_MAX_DEGREE:
        return basis_matrix(n, s) @ points
    return _de_casteljau(points, s)


@dataclass(frozen=True)
class BezierCurve:
    """Degree-n Bezier curve over ``n + 1`` control points of dimension d.

    ``control_points`` is stored as a read-only ``(n + 1, d)`` float array.  A
    1-D sequence is interpreted as scalar control points (d = 1).
    """

    control_points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.control_points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] < 1:
            raise DomainError(
                f"need at least two control points of equal dimension, got shape {pts.shape}"
            )
        if not np.all(np.isfinite(pts)):
            raise DomainError("control points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "control_points", pts)

    @property
    def degree(self) -> int:
        return self.control_points.shape[0] - 1

    @property
    def dimension(self) -> int:
        return self.control_points.shape[1]

    def __call__(self, s):
        return eval_curve(self, s)

    def derivatives(self, s):
        return eval_derivatives(self, s)


def _shape_output(values: np.ndarray, s) -> np.ndarray:
    # scalar s -> (d,), array s -> (N, d)
    return values[0] if np.ndim(s) == 0 else values


def eval_curve(curve: BezierCurve, s) -> np.ndarray:
    """Point ``B(s) = sum_k b_{n,k}(s) P_k``; exact control points at s = 0 and 1."""
    s_arr = np.atleast_1d(_check_parameter(s))
    pts = curve.control_points
    values = _evaluate_points(pts, s_arr)
    # endpoint interpolation must hold bit-for-bit
    values[s_arr == 0.0] = pts[0]
    values[s_arr == 1.0] = pts[-1]
    return _shape_output(values, s)


def eval_derivatives(curve: BezierCurve, s) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivatives with respect to ``s`` (hodograph form).

    ``B'(s) = n sum_k b_{n-1,k}(s) (P_{k+1} - P_k)`` and likewise for ``B''``
    with second differences; ``B''`` is zero for a linear curve.
    """
    s_arr = np.atleast_1d(_check_parameter(s))
    pts = curve.control_points
    n = curve.degree
    first = n * _evaluate_points(np.diff(pts, axis=0), s_arr)
    if n >= 2:
        second = n * (n - 1) * _evaluate_points(np.diff(pts, n=2, axis=0), s_arr)
    else:
        second = np.zeros_like(first)
    return _shape_output(first, s), _shape_output(second, s)
