"""Indoor mmWave sensing/communication/compute co-design for pose estimation.

An access point splits one time slot between downlink service to multiple
users and a radar-style sweep of a person; the echoes become a point cloud,
a small sequence model turns point clouds into joint positions, and the
package picks the sensing power and model depth that minimize predicted
joint error under latency, energy, power, SNR, and detectability limits.

Layout:
    arrays      antenna geometry, steering, channels, ZF precoding
    sensing     echoes, range accuracy, point-cloud synthesis
    pose        point-cloud pipeline, sequence model, error metrics, surrogate
    resources   budgets, allocations, feasibility margins
    optimize    closed-form updates, alternating solver, baselines, oracle
    harness     config files, CSV/TOML I/O, sweeps, command line
"""

from .arrays import (
    ArrayGeometry,
    BeamDirection,
    ChannelSet,
    Codebook,
    Precoder,
    build_codebook,
    comm_snr,
    generate_channels,
    min_comm_power,
    steering_vector,
    zf_precoder,
)
from .errors import CalibrationError, ConfigError, InfeasibleError
from .optimize import (
    AOConfig,
    AOTrace,
    ao_solve,
    baseline_fixed_l1,
    baseline_fixed_prmin,
    brute_force_oracle,
    l_star,
    p_r_star,
)
from .pose import (
    Clip,
    SkeletonFrame,
    SSMParams,
    SurrogateModel,
    calibrate_surrogate,
    fps,
    knn_group,
    mpjpe,
    mse_loss,
    normalize_group,
    serialize_frame,
    sliding_windows,
    ssm_forward,
    surrogate_mpjpe,
)
from .resources import (
    Allocation,
    Budget,
    ComputeParams,
    FeasibilityReport,
    check_feasible,
    e_comp,
    reduced_budget,
    tau_comp,
)
from .sensing import (
    PointCloudFrame,
    SensingBeam,
    SensingParams,
    crb_range_variance,
    echo_snr,
    min_detect_power,
    synthesize_frame,
)

__version__ = "0.1.0"

__all__ = [
    "AOConfig",
    "AOTrace",
    "Allocation",
    "ArrayGeometry",
    "BeamDirection",
    "Budget",
    "CalibrationError",
    "ChannelSet",
    "Clip",
    "Codebook",
    "ComputeParams",
    "ConfigError",
    "FeasibilityReport",
    "InfeasibleError",
    "PointCloudFrame",
    "Precoder",
    "SSMParams",
    "SensingBeam",
    "SensingParams",
    "SkeletonFrame",
    "SurrogateModel",
    "ao_solve",
    "baseline_fixed_l1",
    "baseline_fixed_prmin",
    "brute_force_oracle",
    "build_codebook",
    "calibrate_surrogate",
    "check_feasible",
    "comm_snr",
    "crb_range_variance",
    "e_comp",
    "echo_snr",
    "fps",
    "generate_channels",
    "knn_group",
    "l_star",
    "min_comm_power",
    "min_detect_power",
    "mpjpe",
    "mse_loss",
    "normalize_group",
    "p_r_star",
    "reduced_budget",
    "serialize_frame",
    "sliding_windows",
    "ssm_forward",
    "steering_vector",
    "surrogate_mpjpe",
    "synthesize_frame",
    "tau_comp",
    "zf_precoder",
]
