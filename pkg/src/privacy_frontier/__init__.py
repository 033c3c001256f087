"""Differentially private publication as a production technology.

Mechanisms trace a frontier between privacy loss ``epsilon`` and accuracy
``I``; a utilitarian planner picks the point where the frontier's slope equals
society's willingness to accept privacy loss.
"""

__version__ = "0.1.0"

from .histogram import (
    DataDomain,
    Histogram,
    QueryWorkload,
    exact_answer,
    l1_distance,
    total_count,
    workload_sensitivity,
)
from .mechanisms import (
    BudgetLedger,
    MechanismOutput,
    StrategyDecomposition,
    laplace_mechanism,
    matrix_mechanism,
    matrix_mechanism_accuracy,
    pseudo_inverse,
    randomized_response_publish,
    rr_estimator,
)
from .noise import NoiseSource, sample_laplace
from .frontier import (
    FrontierCurve,
    FrontierPoint,
    frontier_curve,
    matrix_mechanism_mrt,
    rr_accuracy,
    rr_epsilon_of_rho,
    rr_frontier_slope,
    rr_rho_of_epsilon,
    rr_variance,
)
from .social import (
    PreferenceProfile,
    UtilityCurvatureSpec,
    data_utility_weight,
    optimal_epsilon,
    swf,
    wta,
)
from .title1 import (
    DistrictRecord,
    Title1Calibration,
    load_districts,
    mean_squared_sppe,
    per_student_cost,
    simulate_allocation,
    title1_accuracy,
    title1_optimal_epsilon,
    title1_rmse,
    title1_wta,
)
