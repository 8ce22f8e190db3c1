"""Analytical BER estimation for bit-interleaved convolutionally-coded OFDM
over quasi-static frequency-selective fading, with sum-of-tones interference,
erasure-based mitigation, and a Monte Carlo link simulator for validation.
"""

from .average_ber import (
    GaussianQuadForm,
    QuadratureConfig,
    average_ber_method2,
    build_quadform,
    laplace_transform,
    lognormal_average,
    pep_contour,
    pep_no_interference,
    shadowed_average_ber_method2,
)
from .channel import (
    BandPlan,
    ChannelCorrelation,
    ChannelRealization,
    SvParams,
    estimate_correlation,
    generate_impulse_response,
    generate_realizations,
    to_frequency_domain,
)
from .convcode import (
    ConvCode,
    ErrorVector,
    ErrorVectorSet,
    build_error_codeword,
    encode,
    enumerate_error_vectors,
    viterbi_decode,
)
from .errors import ConfigError, EnumerationCapError, NumericalDiagnosticError
from .interference import (
    FreqInterference,
    InterferenceSpec,
    ToneInterferer,
    calibrate_sir,
    rayleigh_covariance,
    tones_to_freq,
)
from .modem import Interleaver, QamConstellation, map_qam, soft_detect
from .realization_ber import (
    OutageResult,
    RealizationBer,
    RealizationEvaluator,
    average_ber_method1,
    ber_realization,
    outage_ber,
    pep_realization,
    phase_averaged_ber,
)
from .simulator import SimPoint, StopRule, genie_erase, simulate_point
from .system import SystemSpec

__version__ = "0.1.0"
