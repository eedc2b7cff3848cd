"""Executable learning-function characterizations of algorithmic dimension."""

__version__ = "0.1.0"

from .coding import ArithmeticCodec, ContextKT, kt_codelength
from .core import (ApproxReal, Measure, PrefixTrie, ValidationReport, bernoulli_measure, kraft_sum,
                   lebesgue, read_prefix_set, validate_measure, write_prefix_set)
from .dimension import (CoverSolution, SliceCoder, box_dimension_estimate, brute_force_min_cover,
                        compression_dim_estimate, enumerate_slice, extract_learner_cover,
                        hausdorff_estimate, min_cover_cost, slice_decode, slice_encode)
from .estimators import (BoxDimensionEstimator, CompressionDimensionEstimator,
                         HausdorffDimensionEstimator, LearnerDimensionEstimator, YesNoTransformer)
from .gales import (Capital, Martingale, Order, SGale, all_in_on_zero, bernoulli_likelihood_martingale,
                    constant_martingale, order_success_trace, random_structured_martingale,
                    structured_martingale, validate_gale, validate_martingale,
                    verify_kolmogorov_inequality)
from .learners import (CostOracle, DoublingLearner, Learner, avg_witness, build_doubling_learner,
                       delay_learner, detection_report, path_average, staged_cap, union_learners,
                       verify_delay, verify_measure_condition)
from .sequences import SequenceSource, bernoulli_seq, dilute, periodic, read_sequence, write_sequence
