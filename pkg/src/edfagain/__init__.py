"""Machine-learned gain model for erbium-doped fiber amplifiers, desk scale.

A parametric surrogate stands in for lab hardware: it maps an input power
spectral density and a target output power to the amplified spectrum, with
unit-to-unit manufacturing spread. Random-walk spectra probed through that
surrogate form datasets; a small fully-connected network trained on them
learns the channel-dependent gain, and an evaluation protocol scores how the
model transfers between units of the same make.
"""

from .dataset import (
    Dataset,
    Sample,
    WalkConfig,
    build_dataset,
    clip_excursion,
    denormalize,
    normalize,
    random_walk_profile,
    read_dataset,
    shape_profile,
    write_dataset,
)
from .evaluation import (
    CalibrationError,
    EvalReport,
    ScenarioResults,
    calibrate_device_sigma,
    evaluate,
    gain_bin,
    mc_oracle_gap,
    pairwise_oracle_gap,
    per_frequency_mse,
    run_scenarios,
    write_reports_csv,
    write_reports_json,
)
from .experiment import ConfigError, ExperimentConfig, default_config
from .gradcheck import GradCheckResult, check_gradients, run_gradcheck
from .model import (
    DIMS_DEFAULT,
    POWER_SCALE,
    AdamState,
    MlpModel,
    TrainConfig,
    TrainingDiverged,
    adam_step,
    backward,
    encode_batch,
    encode_input,
    forward,
    init_model,
    input_jacobian,
    load_model,
    mse_loss,
    predict,
    predict_denormalized,
    save_model,
    train,
)
from .numerics import RngStream, dbm_to_mw, moving_average, mw_to_dbm, subseed
from .oracle import (
    SIGMA_DEV_CALIBRATED_DB,
    AmplifierDevice,
    FrequencyGrid,
    MakeParams,
    PsdProfile,
    amplify,
    device_gain_profile,
    make_device,
)

__version__ = "0.1.0"
