"""Finite-width neural-network ensembles as perturbed Gaussian processes.

Library + CLI for sampling single-hidden-layer network ensembles, comparing
their n-pt statistics with closed-form kernel predictions, extracting the
quartic interaction coupling, predicting the 6-pt function from it, and
tracking the coupling's flow with the integration cutoff.
"""

__version__ = "0.1.0"

from .config import (ArchitectureSpec, ExperimentPlan, InputGrid, RunConfig,
                     builtin_grid, default_grid_for, load_config, train_scaled,
                     validate)
from .errors import NnqftError
from .kernels import KernelModel, kernel, kernel_erf, kernel_gauss, kernel_relu, kernel_w, kernel_model
from .sampler import MomentAccumulator, NetworkParams, forward, run_ensemble, sample_params
from .wick import enumerate_pairings, gp_npt
from .correlators import (CorrelationTensor, DeviationReport, connected4, connected6,
                          deviation, empirical_npt, g6_connected_background, gp_tensor,
                          scaling_slope)
from .eft import (EftConfig, LambdaTensor, QuadratureSpec, delta6, extract_lambda_m,
                  g4_correction, integrate_box, lambda_bar, predict_g4, predict_g6,
                  predict_g6_tensor)
from .rg import (RELU_RG_CUTOFFS, SweepResult, beta_theory_relu, coupling_dimension,
                 cutoff_sweep, fit_rg_slope, vertex_integral_ratio)
from .fitting import FeatureTensors, FitReport, build_features, evaluate, fit_model

__all__ = [name for name in dir() if not name.startswith("_")]
