"""Pool-based active-learning engine with cold-start medoid sampling."""

from .acquire import (
    DiscriminatorConfig,
    Selection,
    select_dal,
    select_dropout_perceptron,
    select_hard_mining,
    select_random,
)
from .alloop import (
    CurvePoint,
    IterationRecord,
    ModelConfig,
    RunResult,
    aggregate,
    f1_binary,
    run_al,
)
from .cluster import DunnStats, KMeansResult, dunn, inertia_monotone_check, kmeans
from .core import (
    ALRunConfig,
    BinaryTask,
    Dataset,
    EmbeddingMatrix,
    Pools,
    SampleRecord,
    Strategy,
    fork_seed,
    l2_normalize,
    l2_normalize_rows,
    rng_fork,
)
from .distill import (
    DistillReport,
    ProjectionHead,
    distill,
    identity_projection,
    project,
    read_projection,
    write_projection,
)
from .embed_io import (
    SyntheticSpec,
    generate_synthetic,
    read_dataset,
    read_embeddings,
    read_labels,
    write_embeddings,
    write_labels,
)
from .initsample import (
    EffortStats,
    TrialResult,
    effort_comparison,
    gain_percent,
    percentile,
    sample_initial,
    simulate_effort,
)
from .model import (
    AdamState,
    ClassifierHead,
    TrainConfig,
    TrainReport,
    adam_step,
    forward,
    init_head,
    predict_proba,
    train,
)

__version__ = "0.1.0"
