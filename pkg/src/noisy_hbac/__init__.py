"""Heat-bath algorithmic cooling (PPA and TSAC) under single-qubit noise."""

__version__ = "0.1.0"

from .analysis import (
    EnhancementMap,
    OasStepReport,
    enhancement_condition,
    enhancement_volume,
    green_zone_sweep,
    noise_alone_lambda,
    oas_one_step,
    purity_enhancement,
)
from .asymptotics import ConvergencePolicy, iterate_to_convergence, spectrum_report, tsac_fixed_point
from .channels import Channel, NoiseModel, flip_probabilities, kraus_operators, noise_transfer_matrix
from .cooling import Algorithm, CoolingConfig, hbac_iteration, hbac_limit_polarization, tsac_transfer_matrix
from .state import (
    DiagonalState,
    ResetSpec,
    lambda_from_polarization,
    oas_state,
    polarization_from_lambda,
    target_marginal,
)
