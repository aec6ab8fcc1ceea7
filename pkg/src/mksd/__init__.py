"""Kernel Stein discrepancy tests and model criticism on the circle,
the 2-torus, and SO(3), for densities known up to normalization."""

from .criticism import (CriticismConfig, CriticismResult, OptimizerConfig,
                        TestLocations, criticize, mfssd, mfssd_variance,
                        optimize_locations, power_objective)
from .efficiency import (EfficiencyCurves, SlopeResult, bahadur_slope,
                         efficiency_curves, relative_efficiency)
from .errors import (EigendecompositionFailure, EmptyGrid,
                     EmptyReferenceSample, GimbalLock, InvalidRotation,
                     LowAcceptanceWarning, MksdError, ParseError,
                     QuadratureUnderResolved, SingularChartPoint,
                     TooFewSamples)
from .gof import (KernelSelection, TestConfig, TestResult, null_quantile,
                  run_test, select_kernel_params, sigma_hat, spectrum_null,
                  split_half, test_with_selection, u_statistic, v_statistic,
                  wild_bootstrap)
from .kernel import (ExpTraceKernel, ManifoldKernel, MultiIndexDeriv,
                     ProductVonMisesKernel, VonMisesKernel, default_kernel,
                     gram, kernel_grid)
from .manifold import (CIRCLE, SO3_EULER, TORUS2, ManifoldChart, chart_by_name,
                       euler_to_matrix, grad_log_volume, inverse_metric,
                       is_rotation, matrix_to_euler, metric_tensor,
                       volume_element, wrap, wrap_many)
from .model import (BivariateVonMises, FisherSO3, Uniform,
                    UnnormalizedDensity, VCG_FISHER_FIT, VonMisesCircle,
                    WIND_BVM_FIT)
from .sampling import (RngStream, sample_bivariate_vm, sample_exp_trace_so3,
                       sample_fisher_so3, sample_from, sample_uniform_so3,
                       sample_von_mises)
from .stein import (SteinGram, SteinKernel, feature_matrix, stein_gram,
                    stein_kernel_0, stein_kernel_1, stein_kernel_2,
                    witness_at)

__version__ = "0.1.0"
