"""Cell-free massive MIMO uplink simulator with Golden-code STBC users.

Dual-antenna users spread 4 symbols over two slots with the Golden code;
distributed base stations decode linearly (ZF or MMSE) on the stacked
equivalent channel, with the Gram inversion done exactly or by a truncated
Neumann series, and a central unit combines the per-BS soft outputs.
"""

__version__ = "0.1.0"

from .channel import (
    ChannelRealization,
    LargeScaleProfile,
    draw_large_scale,
    draw_noise,
    draw_small_scale,
    received_block,
)
from .golden import (
    GoldenParams,
    encode,
    equivalent_channel,
    golden_params,
    large_m_diagnostic,
    stack_system,
    vec,
    verify_exchangeability,
)
from .linalg import (
    DegenerateSplitError,
    FlopCounter,
    NeumannSplit,
    SingularMatrixError,
    SpectralEstimate,
    convergence_margin,
    exact_inverse,
    gram,
    neumann_inverse,
    neumann_r2,
    split_diag,
)
from .metrics import (
    NOISE_SNR_SCALED,
    NOISE_UNIT,
    BerEstimate,
    DegenerateSinrError,
    SinrReport,
    ber_accumulate,
    interference_noise_variance,
    sinr,
    sinr_profile,
    sinr_streams,
    spectral_efficiency,
)
from .receiver import (
    BPSK,
    CONSTELLATIONS,
    QAM4,
    Constellation,
    DecoderMatrix,
    Inversion,
    cpu_combine,
    detect,
    mmse_matrix,
    per_bs_soft,
    zf_matrix,
)
from .simulate import (
    BerPoint,
    ConfigError,
    RunResult,
    ScenarioConfig,
    SePoint,
    desk_ber_config,
    full_ber_config,
    run_ber_sweep,
    run_se_sweep,
    se_sweep_config,
    trial_rng,
    trials_for_bits,
)

__all__ = [name for name in dir() if not name.startswith("_")]
