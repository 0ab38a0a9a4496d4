"""Extended Lorentz cones L(p,q), M(p,q) and certification of their positive operators."""
from .cones import (
    ConeDims,
    DimensionError,
    PointPQ,
    Tolerances,
    build_J,
    dual_pairing,
    in_L,
    in_M,
    in_M_quadratic,
    quadratic_form,
)
from .posop import (
    AnalyzeConfig,
    Operator,
    Status,
    Verdict,
    analyze,
    exact_oracle,
    sufficient_lambda,
)

__all__ = [
    "AnalyzeConfig", "ConeDims", "DimensionError", "Operator", "PointPQ", "Status",
    "Tolerances", "Verdict", "analyze", "build_J", "dual_pairing", "exact_oracle",
    "in_L", "in_M", "in_M_quadratic", "quadratic_form", "sufficient_lambda",
]
