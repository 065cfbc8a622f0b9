from localmax.theory.piecewise import (
    PiecewiseLinear1D,
    TheoryReport,
    ClaimStatus,
    construct_max_net,
    extract_pieces,
    count_pieces_lower_bound_check,
)
from localmax.theory.complexity import (
    MarginRiskConfig,
    spectral_norm,
    spectral_complexity,
    margin_empirical_risk,
    bound_penalty_proxy,
)
