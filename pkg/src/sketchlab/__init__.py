"""Verification lab for linear sketches of frequency moments.

Builds the hard input pair for factor-2 moment estimation (Gaussian versus
Gaussian plus one planted coordinate), computes the exact chi-square and
total-variation quantities that bound every sketch-based distinguisher, and
measures concrete decision rules against those bounds.
"""

from .bounds import (BoundReport, GramExpBound, chi2_closed_form_bound,
                     gram_exp_check, gram_exp_rhs, measurement_budget,
                     measurement_threshold, success_probability_bound)
from .distinguishers import (Decision, Verdict, band_edge_lr_estimator,
                             evaluate_estimator, lr_test, plugin_estimator,
                             tv_conditioned_sketched, two_level_lr_estimator,
                             verdict_level_estimator)
from .divergence import (DivergenceReport, GaussianMixture, StandardNormal,
                         bayes_error, chi2_mixture_exact, chi2_monte_carlo,
                         divergence_report, log1p_chi2_mixture,
                         mixture_from_sketch, tv_monte_carlo,
                         tv_upper_from_chi2)
from .experiment import ExperimentConfig, run_experiment, write_result
from .hard_instance import (HardInstanceParams, LabeledSample,
                            RetriesExhaustedError, SampleSource,
                            TruncationFailure, derive_params,
                            event_probability_mc, gaussian_abs_moment,
                            pnorm, sample_base_null, sample_base_spiked,
                            sample_conditioned, samples_to_csv,
                            spike_coefficient)
from .kernels import BACKEND
from .rng import substream
from .sketch_linalg import (ColumnSet, SketchMatrix, column_gram,
                            gram_frobenius_total, make_orthonormal_sketch,
                            read_matrix, small_column_set, write_matrix)

__version__ = "0.1.0"
