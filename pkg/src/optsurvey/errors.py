"""Exception types.

Every error carries a short ``kind`` string so the CLI can report it in a
machine-parsable way and map it to an exit code.
"""


class SurveyError(Exception):
    kind = "SurveyError"


class InvalidDistribution(SurveyError, ValueError):
    kind = "InvalidDistribution"


class NonRegular(SurveyError, ValueError):
    kind = "NonRegular"


class OutOfSupport(SurveyError, ValueError):
    kind = "OutOfSupport"


class BadGrid(SurveyError, ValueError):
    kind = "BadGrid"


class IndexOutOfRange(SurveyError, IndexError):
    kind = "IndexOutOfRange"


class NonMonotoneInput(SurveyError, ValueError):
    kind = "NonMonotoneInput"


class NonMonotoneAllocation(NonMonotoneInput):
    kind = "NonMonotoneAllocation"


class InfeasibleBudget(SurveyError, ValueError):
    kind = "InfeasibleBudget"


class DimensionMismatch(SurveyError, ValueError):
    kind = "DimensionMismatch"


class ZeroAllocation(SurveyError, ValueError):
    kind = "ZeroAllocation"


class ZeroAdversaryEntry(SurveyError, ValueError):
    kind = "ZeroAdversaryEntry"


class TooLarge(SurveyError, ValueError):
    kind = "TooLarge"


class DegenerateNoise(SurveyError, ValueError):
    kind = "DegenerateNoise"


class Infeasible(SurveyError, RuntimeError):
    kind = "Infeasible"


class SingularGram(SurveyError, ValueError):
    kind = "SingularGram"


class InvalidConfig(SurveyError, ValueError):
    kind = "InvalidConfig"
