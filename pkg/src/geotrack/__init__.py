"""Asymptotic tracking controllers for left-invariant driftless systems on
compact matrix Lie groups."""

__version__ = "0.1.0"

from .liecore import (  # noqa: E402
    AlgebraBasis,
    AlgebraElement,
    Family,
    GroupElement,
    GroupSpec,
    LieError,
    Ad_matrix,
    ad_matrix,
    bracket,
    expm,
    killing_gram,
    orthonormalize_killing,
    project_to_group,
    standard_basis,
)
from .systems import ControlSystem, preset_system, system_report  # noqa: E402
from .reference import build_reference_plan, eval_controls, eval_reference, eval_xi  # noqa: E402
from .tracking import FeedbackContext, body_velocity_W, feedback_a, recover_tracking  # noqa: E402
from .integrate import IntegratorConfig, Method, integrate, integrate_many, lambda_stack, step  # noqa: E402
from .analysis import (  # noqa: E402
    center_check,
    critical_probe,
    hessian_at_center,
    monitor_run,
    residual_original_system,
    tracking_error,
)
