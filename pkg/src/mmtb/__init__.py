"""Multi-subject multivariate temporal biclustering.

Subjects are clustered into time-invariant profiles; within each profile,
measurements are clustered into time-varying states through a temporal
random partition model.  Inference is by Gibbs sampling with a blocked
forward-backward update of the state and persistence sequences.
"""

from .errors import MMTBError
from .model import (Hyperparameters, ModelState, NormalInvGamma, StateParameters, StudentT,
                    joint_log_posterior, likelihood_matrix, log_density)
from .sampler import run_chain
from .simulator import GroundTruth, Scenario, simulate_scenario
from .summaries import (Partition, binder_loss, coclustering_matrix, minimize_expected_binder,
                        summarize)
from .tensor_io import (DataTensor, Mode, RunConfig, SampleChain, apply_mode, read_long_csv,
                        read_samples, write_long_csv, write_samples)

__version__ = "0.1.0"
