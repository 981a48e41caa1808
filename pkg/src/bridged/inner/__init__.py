"""Inner optimisation problems whose solutions are the conditionally
deterministic latent variables of the bridged models."""
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

# Defaults for the iterative solvers.
INNER_TOL = 1e-8
INNER_MAX_ITER = 10_000
BOX_MARGIN = 1e-10


@dataclass
class InnerSolution:
    """Result of an inner solve.

    ``z`` is the optimal latent value, ``objective`` the primal objective at
    ``z``, ``dual`` the dual variables (when the solver has them),
    ``iterations`` the solver's iteration count and ``residual`` its
    convergence measure. Problem-specific by-products go in ``extras``.
    """

    z: np.ndarray
    objective: float
    dual: Optional[np.ndarray] = None
    iterations: int = 0
    residual: float = 0.0
    extras: dict = field(default_factory=dict)

    def __getitem__(self, key: str) -> Any:
        return self.extras[key]


from bridged.inner.lqe import dual_ascent_lqe, lqe_dual_value, lqe_primal_value  # noqa: E402
from bridged.inner.svm import svm_dual_solve, svm_dual_value, svm_primal_value  # noqa: E402
from bridged.inner.admm import laplacian_projection_admm, is_laplacian  # noqa: E402
from bridged.inner.flow import FlowNetwork, max_flow_solve, min_cut_capacity  # noqa: E402
from bridged.inner.cox import cox_profile_hazard, cox_loglik  # noqa: E402

__all__ = [
    "InnerSolution",
    "dual_ascent_lqe",
    "lqe_dual_value",
    "lqe_primal_value",
    "svm_dual_solve",
    "svm_dual_value",
    "svm_primal_value",
    "laplacian_projection_admm",
    "is_laplacian",
    "FlowNetwork",
    "max_flow_solve",
    "min_cut_capacity",
    "cox_profile_hazard",
    "cox_loglik",
]
