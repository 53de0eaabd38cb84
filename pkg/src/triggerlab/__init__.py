"""triggerlab: trigger-patch analysis for diffusion initial noise.

The package quantifies how much an initial noise predetermines object
placement (trigger entropy), tests whether the responsible patches are
Gaussian outliers (energy two-sample tests), crafts and injects
artificial trigger patches, detects them with a calibrated
sliding-window statistic, and uses reject sampling to purify noises for
diversity or align them with prompted positions.
"""

__version__ = "0.1.0"

from .annotations import (
    BBoxAnnotation,
    DatasetManifest,
    NoiseRecord,
    default_manifest,
    filter_best,
    load_manifest,
    permute_annotations,
    rescale_to_latent,
    save_manifest,
)
from .backend import (
    ExternalBackend,
    GenerationRequest,
    GenerationResponse,
    SyntheticBackend,
    SyntheticParams,
    external_generate,
    synthetic_generate,
)
from .detector import (
    Detection,
    NullCalibration,
    calibrate_null,
    detect,
    load_calibration,
    load_detections,
    map50,
    save_calibration,
    save_detections,
    window_score,
)
from .errors import (
    AdapterExitError,
    AdapterTimeoutError,
    BackendFailureError,
    DimensionMismatchError,
    EmptyInputError,
    MissingTensorError,
    OutOfBoundsError,
    SchemaViolationError,
    ShapeMismatchError,
    TooFewRecordsError,
    TriggerLabError,
    WrongSpaceError,
)
from .metrics import (
    EntropyReport,
    InteractionLabel,
    classify_interaction,
    heatmap,
    injection_success,
    isr,
    judge_position,
    random_center_baseline,
    trigger_entropy,
)
from .noise import (
    LatentTensor,
    Patch,
    Region,
    ShiftedGaussianSpec,
    SinePatchSpec,
    centered_region,
    extract_patch,
    inject_patch,
    load_noise,
    resample_region,
    sample_noise,
    save_noise,
    synth_shifted_gaussian,
    synth_sine_patch,
)
from .prompts import DEFAULT_PROMPTS, DIVERSITY_PROMPTS, GUIDANCE_PROMPTS, Prompt
from .rng import derive_seed, gaussian_stream
from .sampling import (
    AlignResult,
    PurifyResult,
    align,
    diversity_eval,
    gsr_study,
    isr_study,
    purify,
)
from .stats import (
    DecileAnalysis,
    EnergyTestResult,
    decile_analysis,
    energy_distance,
    permutation_test,
)
