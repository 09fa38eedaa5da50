"""Variable selection for regression with error-prone covariates.

Implements the corrected-score boosting path (MEBoost) for linear and
Poisson models, the naive Lasso and corrected-moments Lasso comparators,
cross-validated model selection, a reproducible simulation harness, and a
CSV analysis command line.
"""

from .boost import (
    BoostConfig,
    CoefficientPath,
    PathStep,
    StationaryScoreError,
    default_l1_grid,
    interpolate_path,
    meboost_path,
    read_path_csv,
    threshold_set,
    write_path_csv,
)
from .cocolasso import (
    CorrectedMoments,
    ProjectionDiagnostics,
    ProjectionError,
    cocolasso_path,
    corrected_moments,
    nearest_pd_projection,
    project_moments,
)
from .datagen import (
    SCENARIO_LABELS,
    ErrorGenerator,
    ScenarioSpec,
    SimulatedDataset,
    build_block_covariance,
    default_scenario_spec,
    generate_replication,
    generate_scenario,
    sample_mvn,
)
from .metrics import (
    AggregatedMetrics,
    FitMetrics,
    aggregate_replications,
    evaluate_fit,
    path_metrics_on_grid,
    select_min_mse,
    select_min_mse_m,
)
from .quadlasso import (
    CDResult,
    LassoPath,
    QuadProblem,
    coordinate_descent_quadratic,
    kkt_violation,
    lambda_grid,
    naive_lasso_path,
    soft_threshold,
    solve_quadratic_path,
)
from .scores import (
    EXP_OVERFLOW,
    SIGMA2_FLOOR,
    MeasurementErrorModel,
    ModelState,
    ScoreOverflowError,
    corrected_loglik_linear,
    corrected_score_linear,
    corrected_score_poisson,
    corrected_variance_linear,
    naive_score_linear,
    reliability_to_error_variance,
)
from .selection import (
    CVResult,
    FoldRecord,
    cv_select_lasso,
    cv_select_meboost,
    kfold_split,
    poisson_deviance,
)

__version__ = "0.1.0"
