"""Bridged models: a prior, an inner problem and the likelihood at its solution."""
from bridged.models.base import (
    IDENTITY,
    SOFTPLUS,
    BridgedModel,
    ParamVector,
    PriorOnlyModel,
    envelope_subgradient,
)
from bridged.models.bmmc import BMMCModel, GibbsHingeModel
from bridged.models.cox import CoxModel
from bridged.models.flow import FlowModel
from bridged.models.harmonization import (
    HarmonizationModel,
    PrecomputedProjectionTable,
    default_grid,
)
from bridged.models.lqe import LQEModel, feasible_alpha_tilde, propriety_dual_bound_check
from bridged.models.oracles import (
    FactorModel,
    TRegressionModel,
    factor_model_oracle,
    factor_model_zhat,
    t_regression_oracle,
    t_regression_zhat,
)

__all__ = [
    "IDENTITY",
    "SOFTPLUS",
    "BridgedModel",
    "ParamVector",
    "PriorOnlyModel",
    "envelope_subgradient",
    "BMMCModel",
    "GibbsHingeModel",
    "CoxModel",
    "FlowModel",
    "HarmonizationModel",
    "PrecomputedProjectionTable",
    "default_grid",
    "LQEModel",
    "feasible_alpha_tilde",
    "propriety_dual_bound_check",
    "FactorModel",
    "TRegressionModel",
    "factor_model_oracle",
    "factor_model_zhat",
    "t_regression_oracle",
    "t_regression_zhat",
]
