"""Regression discontinuity analysis in local windows.

Local randomization inference (window selection, Fisherian and large-sample
tests), fuzzy estimands, discrete-score tools, multi-cutoff and multi-score
designs, and a minimal continuity-based engine with user-supplied bandwidths.
"""

from .core import (MassPointSummary, RDSample, Window, collapse_by_score,
                   flip_score, in_window, load_csv, mass_point_summary,
                   normalize_score)
from .errors import AnalysisError, ConfigError, DataError, RDError
from .falsify import balance_table, placebo_cutoffs, window_sensitivity
from .fuzzy import (FuzzyResult, compliance_type, fisher_constant_effect_test,
                    itt, ratio_localpoly, tsls_ratio)
from .largesample import LargeSampleResult, neyman_test, power, \
    power_from_variance
from .localpoly import LocalFit, RDPlotData, local_fit, rdplot_data, \
    render_svg, sharp_effect
from .multicutoff import (CutoffResult, PooledResult, by_cutoff,
                          compare_cutoffs, extrapolate_constant_bias, pool,
                          split_cumulative)
from .multiscore import (BoundarySpec, Metric, SignedDistanceSample,
                         boundary_distance, boundary_grid_report, distance,
                         signed_distance_to_boundary,
                         signed_distance_to_point)
from .randinf import (FisherResult, GridCI, Mechanism, count_assignments,
                      fisher_test, invert_ci, point_estimate)
from .simdgp import gen_fuzzy, gen_sharp
from .stats import (StatSpec, VarianceEstimate, bernoulli_weights,
                    diff_means, hotelling_stat, ks_stat, neyman_variance,
                    rank_sum_stat)
from .winselect import (WindowScan, WindowScanRow, binomial_density, by_length,
                        by_obs, scan, window_sequence)

__version__ = "0.1.0"
