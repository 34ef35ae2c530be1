"""Stochastic-gradient Langevin sampling with a variance-reduced gradient estimator."""

from .core import (Dataset, GradientModel, MinibatchIndexSet, RngStream, full_gradient,
                   log_posterior, sample_without_replacement, stochastic_gradient)
from .diagnostics import (VarianceReport, anchor_drift, deltaV_variance_exact, gamma_at, lambda_at,
                          mse_of_runs, sample_average, vr_deltaV_variance_exact)
from .errors import (ConfigError, ContractViolationError, DivergedChainError, InvalidArgumentError,
                     NumericOverflowError, QuadratureError, TooLargeError, VrmcmcError)
from .models import (GaussianMeanModel, LogisticRegressionModel, TestFunction,
                     gaussian_posterior_phi_bar, generate_gaussian_data, generate_logistic_data)
from .samplers import ChainConfig, ChainTrace, DecayStep, FixedStep, run_chain, sgld_step
from .variance_reduction import (PlainEstimator, SvrgLDEstimator, VREstimator, VrState,
                                 refresh_anchor, vr_gradient)

__version__ = "0.1.0"
