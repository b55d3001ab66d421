"""Capacity, L0(Cap) metrics and normed modules on finite weighted graphs."""
from .capacity import (CapacityResult, brute_force_capacity, cap, capacity,
                       capacity_outer_measure, increasing_limit_check)
from .l0cap import (CapClass, ae_subsequence, check_convergence, dcap, pr_project,
                    simple_approximate)
from .module import (DartField, MDartClass, check_module_axioms, check_parallelogram,
                     factor_through, gradient_field, module_distance, pointwise_inner,
                     pointwise_norm, pr_bar, qc_vector_fields, qcr_field, quotient_m)
from .outer_measure import (OuterMeasure, ProofMeasure, check_claim_nu,
                            find_subadditivity_violation, integrate, is_monotone,
                            is_subadditive, is_submodular, limsup_of_sets, proof_measure)
from .quasicontinuity import (Regime, check_linkqusob, check_sandwich, dqu, dqu_detail, qcr,
                              qu_convergence, regime)
from .report import Check, Report
from .sobolev import (MClass, dirichlet_energy, gradient_modulus, lattice_min_max, w12_norm,
                      w12_norm_class)
from .space import (Metric, Space, SpaceError, build_space, grid_1d, grid_2d, load_space,
                    shortest_path_metric, space_from_json, space_to_json)
from .studies import (scenario_capae_vs_dcap, scenario_dominated_convergence_failure,
                      study_refine_1d, study_refine_2d)
from .suites import run_suite

__version__ = "0.1.0"
