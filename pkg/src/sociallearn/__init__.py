"""Non-Bayesian social learning over time-varying graphs with decaying weights."""

__version__ = "0.1.0"

from .beliefs import (
    BeliefState,
    ObservationStream,
    PushSumState,
    Scenario,
    Trajectory,
    log_linear_step,
    push_sum_step,
    record_points,
    run_simulation,
)
from .ergodicity import (
    BackwardProduct,
    ErgodicityDiagnostics,
    absolute_probability_residual,
    belief_rate_estimate,
    ergodicity_coefficient,
    mixing_envelope,
    track_product,
)
from .errors import (
    ConfigError,
    ContractViolation,
    DegenerateScenarioError,
    DimensionError,
    ParameterError,
    SocialLearningError,
)
from .graphs import (
    ConnectivityCertificate,
    EdgeSet,
    GraphSchedule,
    complete_edges,
    edges_at,
    is_strongly_connected,
    path_edges,
    ring_edges,
    verify_b_connectivity,
)
from .hypotheses import (
    AgentModel,
    CategoricalDistribution,
    HypothesisSet,
    IdentifiabilityReport,
    kl_divergence,
    optimal_sets,
)
from .weights import (
    LambdaSchedule,
    ScheduleVerdict,
    WeightMatrix,
    WeightPolicy,
    build_weight_matrix,
    classify_schedule,
)
