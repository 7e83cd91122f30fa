"""Bezier-curve initial guesses for shooting on two-point boundary value problems."""

from .bezier import BezierCurve, bernstein, binomial, eval_curve, eval_derivatives
from .errors import (
    BvpError,
    ConfigError,
    DomainError,
    DynamicsDomainError,
    IntegrationError,
    ShootingError,
    TimeDegeneracyError,
)
from .guess import (
    GuessResult,
    OptimizerConfig,
    QuadratureRule,
    SDomainForm,
    evaluate_L,
    extract_initial_guess,
    optimize_control_points,
    s_domain_residual,
)
from .orbit import (
    CaseCatalog,
    OrbitCase,
    TwoBodyParams,
    builtin_catalog,
    canonical_scaling,
    cross_product_baseline_guess,
    two_body_dynamics,
)
from .problem import BvpProblem, make_paper_1d_problem, residual
from .shooting import (
    IntegratorConfig,
    ShootingConfig,
    ShootingOutcome,
    integrate_ivp,
    shoot,
    shoot_1d,
    shoot_nd,
    terminal_miss,
)

__version__ = "0.1.0"
