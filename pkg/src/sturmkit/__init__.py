"""Sturmian words, hierarchical partitions and transfer-matrix cocycles."""
from ._backend import BACKEND
from .cf import ContinuedFraction, enclose, expand, length_table, parse_coefficients, value, word_length
from .errors import (ConfigError, ContractError, DepthError, InternalConsistencyError,
                     LevelTooCoarseError, MembershipError, PrecisionError, ResourceError, SturmError)
from .partitions import (Partition, coarsest_level, embed_in_sn, frame, locate, partition_c_prefix,
                         standard_partition, two_block_decomposition)
from .spectral import (GrowthFit, LyapunovEstimate, SpectrumApprox, approximate_spectrum,
                       certified_bound, growth_fit, lyapunov_along_phase, lyapunov_estimate,
                       spectrum_proxy, subadditive_limit)
from .transfer import TransferProduct, local_matrix, sn_product, word_product
from .words import RotationParams, Word, build_sn, c_prefix, palindrome_factor, rotation_word, subwords

__version__ = "0.1.0"
