"""Clustering-based subteam replacement in attributed social networks."""

from .encoder import (
    ClusterModel,
    EncoderDims,
    EncoderParams,
    build_containers,
    default_cluster_count,
    encode,
    gcn_layer_forward,
    hard_assign,
    init_params,
    load_checkpoint,
    row_softmax,
    save_checkpoint,
    soft_assign,
)
from .errors import (
    ConvergenceError,
    NonFiniteLossError,
    ParseError,
    RefusalError,
    ValidationError,
    ZeroSelfKernelError,
)
from .evaluate import (
    EvalCaps,
    EvalReport,
    TestSplit,
    disparity_marg,
    disparity_sp,
    evaluate_case_metrics,
    feature_subsample,
    run_comparison,
)
from .graph import (
    SocialNetwork,
    Team,
    TeamGraph,
    generate_synthetic,
    induced_subgraph,
    load_network,
    load_teams,
    normalize_adjacency,
    planted_blocks,
    save_network,
    save_teams,
)
from .kernels import (
    KernelConfig,
    LabeledGraph,
    graph_edit_distance,
    kernel_baseline_replace,
    marginalized_kernel,
    random_walk_kernel,
    shortest_path_kernel,
    team_kernel_graph,
)
from .objectives import (
    LossReport,
    LossWeights,
    clustering_loss,
    contrastive_loss,
    cosine,
    pair_sim,
    skill_loss,
    structural_loss,
    team_embedding,
    total_loss,
)
from .recommender import ReplacementResult, exhaustive_oracle, recommend
from .trainer import (
    SampleBatch,
    TrainConfig,
    gradient_check,
    gradient_check_report,
    sample_subteam,
    split_teams,
    train,
    write_train_log,
)

__version__ = "0.1.0"
