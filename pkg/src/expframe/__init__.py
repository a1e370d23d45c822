"""Data-driven exponential framing of scalar time series.

Delay-coordinate linear models, exponential mode decomposition with decay
time constants, per-index mode amplitudes, peak extraction, and the SSA /
delay-DMD comparison baselines.
"""

from expframe.series import (
    InputSeries,
    TimeSeries,
    add_gaussian_noise,
    load_series,
    read_aic_curve,
    read_json,
    read_spectrum,
    write_result,
)
from expframe.hankel import (
    DelayMatrices,
    InputDelayMatrices,
    build_input_matrices,
    build_matrices,
    delay_vector,
)
from expframe.linear_model import (
    ForcedModel,
    IdentifiedModel,
    OrderSelection,
    RankDeficiencyWarning,
    aic,
    aic_forced,
    identify,
    identify_forced,
    identify_forced_series,
    identify_series,
    predict,
    predict_forced,
    relative_aic_curves,
    select_order,
)
from expframe.spectrum import (
    AmplitudeSpectrum,
    DefResult,
    ModeSet,
    PipelineError,
    amplitude_at,
    amplitude_forced,
    analyze,
    build_mode_set,
    eigendecompose,
    fit_exponential,
    min_pairwise_distance,
)
from expframe.peaks import PeakParams, PeakReport, extract_peaks, running_median
from expframe.baselines import (
    DmdDecomposition,
    SsaDecomposition,
    default_dmd_rank,
    dmd_contribution,
    dmd_decompose,
    ssa_decompose,
    ssa_reconstruct,
)
from expframe.toy import ToyConfig, designed_input, preset, simulate

__version__ = "0.1.0"
