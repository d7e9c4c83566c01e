"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
failures onto its documented status codes without a lookup table.
"""


class SturmError(Exception):
    exit_code = 1


class ConfigError(SturmError, ValueError):
    exit_code = 2


class PrecisionError(SturmError, ArithmeticError):
    """Working precision cannot decide a quantity (coefficient, letter, ...)."""

    exit_code = 3


class ResourceError(SturmError, MemoryError):
    exit_code = 4


class DepthError(SturmError, IndexError):
    """Requested level exceeds the stored continued fraction depth."""

    exit_code = 4


class MembershipError(SturmError, ValueError):
    """Word does not occur in the Sturmian language of the rotation number."""

    exit_code = 2


class LevelTooCoarseError(SturmError, ValueError):
    """The word is a factor of s_n, so no n-partition exists for it."""

    exit_code = 2


class ContractError(SturmError, ValueError):
    """A caller-asserted hypothesis (subadditivity, nonnegativity) failed a spot check."""

    exit_code = 2


class InternalConsistencyError(SturmError, RuntimeError):
    exit_code = 1
