from ._kernel import BACKEND
from .bounds import (
    TheoryParams,
    concentration_radius,
    detection_delay_bound,
    false_alarm_prior_bound,
    split_penalty,
    stirling_log_term,
)
from .detector import (
    DetectorConfig,
    Forecaster,
    ForecasterBank,
    Verdict,
    closed_form_cumulative_loss,
    detect_stream,
    forecaster_loss,
    laplace_predict,
)
from .priors import ConstantPrior, ReciprocalPrior, TheoryPrior, prior_weight

__all__ = [
    "BACKEND",
    "ConstantPrior",
    "DetectorConfig",
    "Forecaster",
    "ForecasterBank",
    "ReciprocalPrior",
    "TheoryParams",
    "TheoryPrior",
    "Verdict",
    "closed_form_cumulative_loss",
    "concentration_radius",
    "detect_stream",
    "detection_delay_bound",
    "false_alarm_prior_bound",
    "forecaster_loss",
    "laplace_predict",
    "prior_weight",
    "split_penalty",
    "stirling_log_term",
]
