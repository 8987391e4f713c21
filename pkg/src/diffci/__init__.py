"""diffci: a 1D diffusion training lab with confidence-interval timestep sampling.

The package trains small noise-prediction networks on 1D signals while
controlling where along the denoising trajectory learning happens. A
confidence interval [c_l, c_h] over timesteps maps to a normal sampling
distribution, truncated to the valid range with its tail mass redistributed
uniformly, so training emphasis can be shifted between the high-SNR
(memorization-prone) and low-SNR (generalization) regimes. Companion
modules provide the analytic contribution model, ancestral sampling,
distribution-distance metrics, and a grid sweep harness.
"""

from .contribution import (
    ContributionProfile,
    contribution,
    contribution_dmu,
    region_split,
    total_gradient_proxy,
)
from .data import (
    SignalDataset,
    load_checkpoint,
    load_delimited,
    read_signals_csv,
    save_checkpoint,
    synth_1d,
    write_signals_csv,
)
from .generation import GenerationConfig, ddpm_sample
from .metrics import (
    CorrelationResult,
    EvalReport,
    PCAModel,
    evaluate,
    js_distance,
    js_distance_multidim,
    mean_l2,
    pca_fit,
    pca_project,
    pearson_with_ci,
    wasserstein1_1d,
)
from .network import (
    DenoiserParams,
    DivergenceError,
    Gradients,
    forward,
    forward_batch,
    init_params,
    loss_and_grads,
    time_embedding,
)
from .schedule import Schedule, forward_diffuse, make_linear_schedule, snr
from .sweep import (
    SweepGrid,
    SweepResult,
    build_grid,
    loss_by_width_report,
    run_sweep,
    write_correlation_csv,
    write_sweep_csv,
)
from .timesteps import (
    CIConfig,
    NormalParams,
    TimestepPMF,
    Z_CENTRAL_50,
    build_pmf,
    ci_to_params,
    interval_mass,
    normal_cdf,
    pmf_from_ci,
    sample_timestep,
    sample_timesteps,
    tail_mass,
    uniform_pmf,
)
from .training import (
    AdamSettings,
    TrainConfig,
    TrainReport,
    pretrain_then_finetune,
    train,
)

__version__ = "0.1.0"
