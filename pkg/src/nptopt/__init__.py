"""Ranking of moment-matrix entanglement criteria under loss and finite sampling."""

__version__ = "1.0.0"

from .criteria import (CriterionMatrix, CriterionSpec, NamedCriterion, adjugate, build_matrix,
                       determinant, enumerate_specs, lookup, named_catalog, parse_spec)
from .exceptions import (AllocationError, ConfigError, DegenerateError, DegenerateStateError,
                         InsufficientSamplesError, NPTError, NumericalError, TruncationError)
from .fock import (FockConfig, LocalRotation, TwoModeState, apply_local_rotation,
                   apply_thermal_loss_channel, expectation, from_density_matrix,
                   prepare_subtracted_tmsv, prepare_tmsv, prepare_two_mode_cat)
from .loss import evaluate_lossy_moment, kappa_t_to_eta, lossy_moment_expansion
from .moments import (HermitianPart, MultiIndex, hermitian_parts, matrix_element_word,
                      multiindex_to_ordinal, ordinal_to_multiindex, variance_of_part)
from .noise import NoiseModel
from .stats import (confidence, delta_det, delta_det_general, error_budget, evaluate_criterion,
                    optimal_allocation)
from .words import OperatorWord
