"""condsel: rank candidate vision models for an unseen task from a handful
of unlabeled images.

Tasks are represented by per-block conductance profiles of a model's
encoder; a target-conditioned directional divergence compares them, and
softmin-weighted aggregation of source-task ranks predicts the target's
model ranking.
"""

__version__ = "0.1.0"

from .attribution import (
    AttributionConfig,
    BlockConductance,
    BlockSpec,
    ToyNetwork,
    conductance_vector,
    forward,
    layer_conductance,
    objective,
    random_network,
)
from .divergence import (
    DivergenceRecord,
    SalientSet,
    SimilarityDistribution,
    TailBoundReport,
    asymmetry_witness,
    directional_divergence,
    relative_deviation,
    salient_set,
    set_restricted_divergence,
    similarity_weights,
    verify_tail_bound,
)
from .harness import (
    EvalReport,
    RunConfig,
    SyntheticWorld,
    evaluate_baseline,
    generate_synthetic_world,
    leave_one_out,
    predict_target,
    subsample,
    sweep_eta_gamma,
    sweep_n_src,
)
from .metrics import (
    MetricResult,
    aggregate,
    kendall_tau_at_k,
    ndcg_at_k,
    score_ranking,
    spearman,
    topk_intersection,
)
from .ranking import (
    AccuracyTable,
    PredictedRanking,
    baseline_avgrank,
    baseline_inb,
    ground_truth_ranks,
    predicted_rank,
    rank_table,
    ranking,
)
from .representation import (
    ImportanceDistribution,
    TaskRepresentation,
    importance,
    normalize,
    task_representation,
)
from .storage import (
    ConductanceBundle,
    load_accuracy_table,
    load_bundle,
    load_bundle_dir,
    load_network,
    save_accuracy_table,
    save_bundle,
    save_network,
)
