"""Doppler-diversity MIMO link analysis.

Pilot-assisted repetition coding over time-varying Rayleigh channels:
exact finite-size receiver SINRs, random-matrix rate approximations,
analytic symbol error rates, diversity/coding-gain figures, and seeded
Monte Carlo verification of all of it.
"""

from .asymptotics import (
    DeqSolution,
    asymptotic_rate,
    deq_fixed_point,
    mrc_asymptotic_sinr,
    mrc_like_asymptotic_sinr,
)
from .bessel import j0
from .channel import (
    ChannelRealization,
    CovarianceSet,
    FrameTiming,
    SystemConfig,
    build_cross_cov,
    build_pilot_cov,
    frame_timing,
    sample_channel,
    speed_to_doppler,
    substream,
)
from .diversity import (
    DiversityReport,
    PowerSplit,
    coding_gain_bounds,
    coding_gain_loss,
    config_for_total_snr,
    diversity_order,
    diversity_report,
    lambda_pp,
    limit_spectrum,
    log_psi_limit,
    optimal_power_split,
)
from .estimation import (
    EquivalentModel,
    EstimationResult,
    build_equivalent_model,
    covariance_set,
    estimate_for_antenna,
    estimation_covariances,
    mmse_estimate,
    mmse_filter,
    pilot_observations,
)
from .exceptions import ConvergenceError, NumericalError, SpecValidationError
from .harness import (
    ExperimentKind,
    ExperimentSpec,
    Metric,
    ResultRow,
    emit_csv,
    load_spec,
    monte_carlo_rates,
    parse_spec,
    preset_names,
    preset_spec,
    read_csv_rows,
    run_experiment,
)
from .linalg import KronCov
from .receivers import (
    DetectionOutput,
    Receiver,
    SinrReport,
    detect,
    interference_whitener,
    mmse_sinr,
    mrc_like_sinr,
    mrc_sinr,
    normalized_sum_rate,
    sinr_report,
)
from .ser import (
    SerMethod,
    SerResult,
    analytic_ser,
    analytic_ser_mean,
    build_A_matrix,
    mgf_quadratic_form,
    monte_carlo_ser,
)

__version__ = "0.1.0"
