"""Joint Bayesian estimation of close subspaces from noisy observations."""

from .bingham import BinghamParams, SamplerStallError, chain_diagnostics, log_density_unnorm, sample_bingham
from .estimators import EstimateResult, gibbs_estimate, imap_estimate, mmsd_aggregate, svd_estimate
from .model import (
    DataSet,
    ScenarioConfig,
    conditional_bingham_params,
    generate_data,
    log_joint_posterior,
    make_close_basis,
    sigma2_from_snr,
)
from .stiefel import (
    DegenerateSubspaceWarning,
    principal_angles,
    principal_subspace,
    subspace_sq_distance,
    uniform_stiefel,
)

__version__ = "0.1.0"
