"""Bakry-Emery gradient calculus, curvature-dimension constants and heat semigroups on weighted graphs."""

from .curvature import (INF, CurvatureResult, cd_check, cd_max_k, cde_check, cde_search_k,
                        curvature_all, global_cd_bound)
from .errors import NumericalError, ValidationError
from .gamma import LocalForms, gamma, gamma2, gamma2_tilde, gamma2_tilde_identity, laplacian, local_forms
from .graph import (ExhaustionPlan, ScalarField, WeightedGraph, ball, dump_field, dump_graph, generate,
                    graph_stats, interior_boundary, parse_field, parse_graph, random_graph)
from .heat import (HeatKernelValue, SpectralDecomposition, apply_semigroup, dirichlet_spectrum,
                   exhaustion_kernel, expm_apply, heat_kernel, sqrt_drift_sup, semigroup_diagnostics)
from .inequalities import (InequalityReport, item1_integral, lemma32_derivative_check, summarize,
                           taylor_limit_check, verify_corollary31, verify_corollary32, verify_thm31,
                           verify_thm32)

__version__ = "0.1.0"
