"""Supervised signal-subspace refinement for low-SNR DOA estimation."""

from .array_model import ArrayGeometry, Scenario, manifold_matrix, steering_vector, synthesize_snapshots
from .covariance import eigendecompose, partition_subspaces, projector, sample_covariance
from .metrics import MetricConfig, TrialRecord, rmse, success_rate_hard, success_rate_soft
from .music import AngularGrid, estimate_doa, pick_peaks, pseudospectrum
from .refinement import (DegenerateRefinement, RefinementFailed, RefinementResult,
                         reconstruct_signal_subspace, reconstruction_error, search_mu,
                         similarity_matrix, transform_matrix)

__version__ = "0.1.0"
