"""Moment-based estimation of weighted stochastic block models."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    BasisSpec,
    Bernoulli,
    Beta,
    BlockEstimate,
    BlockModelParams,
    Discrete,
    FunctionalSpec,
    MomentSet,
    Network,
    Normal,
    PointMass,
    apply_basis,
    default_basis,
    validate_network,
)
from .estimate import (  # noqa: E402
    canonical_labeling,
    estimate_cdf,
    estimate_density,
    estimate_functional,
    estimate_H,
    estimate_p,
    fit,
)
from .harness import EstimationConfig, run_design  # noqa: E402
from .jointdiag import joint_diagonalize, recover_G, whiten  # noqa: E402
from .moments import compute_moments  # noqa: E402
from .simulate import draw_network, binary_design  # noqa: E402
