"""Computational toolkit for Latin squares and their step-function limits."""
from .exceptions import BudgetError, LatinonError, ValidationError, WitnessInvalid
from .latin import (LatinSquare, column_value_swap, gen_cyclic, gen_parity_H, gen_random_uniform, gen_swap_pair,
                    gen_very_local, transpose, validate)
from .patterns import Pattern, canonicalize, enumerate_patterns
from .step import (IntervalPartition, SemiLatinon, StepBigraphon, StepLatinon, anticompress, compress, entropy,
                   refine_common, represent, standard_cyclic_step, uniform_latinon, validate_latinon)
from .density import (DensityReport, density_exact, density_mc, density_vector, step_density_exact,
                      step_density_mc)
from .cutnorm import CutNormResult, cutnorm_distval, cutnorm_step, order_displacement
from .distance import DeltaEstimate, delta_lower, delta_upper
from .regularity import hom_density_tuple, weak_regularity
from .sampling import (associate_semilatinon, sample_matrix, sampling_experiment, spread_check,
                       subsample_bigraphon)
from .synthesis import QuotaPlan, parity_realize, plan_quotas, step_approximate, synthesize
from .quasirandom import QuasiReport, quasirandom_test, r22_insufficiency_witness

__version__ = "0.1.0"
