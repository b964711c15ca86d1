"""Multi-fidelity neural-network surrogates for scalar fields on 2-d grids.

Learns a high-fidelity field from abundant cheap samples plus a handful
of expensive ones: a low-fidelity network models the cheap data, and
linear/nonlinear correction networks lift its predictions, blended by a
trainable weight or summed additively.
"""

from .bench import (
    BenchmarkResult,
    BenchmarkRow,
    LinearPairSpec,
    NonlinearPairSpec,
    forrester_high,
    forrester_low,
    gen_linear_pair,
    gen_nonlinear_pair,
    run_benchmark,
)
from .config import RunConfig, load_run_config
from .fieldio import (
    ColumnMap,
    FieldDataset,
    FidelityPair,
    NormalizationMeta,
    apply_normalization,
    fit_normalization,
    invert_normalization,
    load_field_csv,
    load_nodes_csv,
    save_field_csv,
)
from .gridalign import (
    Idw,
    InterpMethod,
    Nearest,
    SpatialIndex,
    align_pair,
    build_index,
    interpolate,
)
from .mlp import (
    MlpSpec,
    grad_scalar,
    init_params,
    mlp_batch_forward,
    mlp_forward,
)
from .model import (
    MpinnConfig,
    MpinnModel,
    compose_components,
    compose_high,
    init_model,
    load_model,
    predict_field,
    predict_low,
    predict_values,
    save_model,
)
from .train import (
    Metrics,
    TrainConfig,
    TrainReport,
    compute_metrics,
    evaluate,
    select_hf_indices,
    single_fidelity_baseline,
    total_loss,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
