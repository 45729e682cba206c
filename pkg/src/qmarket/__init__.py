"""Open-quantum-system model of a market price: master-equation dynamics,
structural checks and precision metrics."""

from .dynamics import (
    GKSLForm,
    StepSchedule,
    apply_classical_generator,
    apply_generator,
    apply_shift_L,
    euler_step,
    exact_propagate_small,
    gksl_standard_form,
    heisenberg_step,
    is_classical_evolution,
    is_completely_positive,
    simulate,
)
from .market_model import (
    EnvironmentState,
    LindbladCoefficients,
    OperatorSet,
    PriceObservable,
    dirac_state,
    environment_coefficients,
    gaussian_state,
    make_misaligned_observable,
    make_price_observable,
    make_shift_operators,
)
from .matrix_core import frobenius_norm, haar_random_unitary, hermitian_eigen
from .metrics import (
    MetricsRecord,
    OrbitSignature,
    contraction_check,
    excess_kurtosis,
    frobenius_distance_to_max_entropy,
    offdiagonal_power,
    orbit_signature,
    precision_entropy_metric,
    precision_variance_metric,
    shannon_entropy_prices,
    toeplitz_stationary,
    von_neumann_entropy,
)

__version__ = "0.1.0"

__all__ = [
    "EnvironmentState",
    "GKSLForm",
    "LindbladCoefficients",
    "MetricsRecord",
    "OperatorSet",
    "OrbitSignature",
    "PriceObservable",
    "StepSchedule",
    "apply_classical_generator",
    "apply_generator",
    "apply_shift_L",
    "contraction_check",
    "dirac_state",
    "environment_coefficients",
    "euler_step",
    "exact_propagate_small",
    "excess_kurtosis",
    "frobenius_distance_to_max_entropy",
    "frobenius_norm",
    "gaussian_state",
    "gksl_standard_form",
    "haar_random_unitary",
    "heisenberg_step",
    "hermitian_eigen",
    "is_classical_evolution",
    "is_completely_positive",
    "make_misaligned_observable",
    "make_price_observable",
    "make_shift_operators",
    "offdiagonal_power",
    "orbit_signature",
    "precision_entropy_metric",
    "precision_variance_metric",
    "shannon_entropy_prices",
    "simulate",
    "toeplitz_stationary",
    "von_neumann_entropy",
]
