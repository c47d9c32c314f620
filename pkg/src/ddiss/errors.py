"""Exception hierarchy shared by all ddiss modules.

Each exception carries an ``exit_code`` used by the command-line front end:
2 parse errors, 3 violated preconditions, 4 dimension mismatches.
"""


class DdissError(Exception):
    """Base class for all library errors."""

    exit_code = 3


class ParseError(DdissError):
    """Malformed input file; message names the offending row/column or key."""

    exit_code = 2


class DimensionMismatch(DdissError):
    """Operands have incompatible shapes; message names the offending block."""

    exit_code = 4


class EmptyTrajectory(DdissError):
    """A trajectory with zero samples where at least one is required."""


class HorizonTooLong(DdissError):
    """Requested horizon exceeds the available data length."""


class HorizonTooShort(DdissError):
    """Horizon too small for the requested banded lifting (needs L > lag)."""


class PrefixExceedsHorizon(DdissError):
    """Zero-prefix length larger than the horizon."""


class PrefixPolicyViolated(DdissError):
    """Prefix shorter than the combined plant-lag / filter-lag requirement."""


class ZeroPolynomial(DdissError):
    """The zero polynomial where a nonzero one is required."""


class DegreeZero(DdissError):
    """A constant polynomial where roots were requested."""


class ZeroMatrix(DdissError):
    """An all-zero polynomial matrix has no defined lag."""


class SingularDenominator(DdissError):
    """A denominator (or determinant of one) is identically zero."""


class IllPosedInterconnection(DdissError):
    """Feedback interconnection with identically singular return difference."""


class UnstableSystem(DdissError):
    """Operation requires a stable system."""


class UnstableClosedLoop(DdissError):
    """Supplied controller does not stabilize the loop."""


class DegenerateNullspace(DdissError):
    """Constraint matrix admits no nontrivial solutions to certify over."""


class NoFiniteGain(DdissError):
    """Gain bisection found no feasible upper bound below the search cap."""


class RankConditionViolated(UserWarning):
    """Warning: data does not satisfy the expected span rank condition."""


class CoprimenessWarning(UserWarning):
    """Warning: a row block's numerator/denominator pair shares a factor.

    The shared factor inflates the lifted constraint set with redundant rows
    but does not change the trajectory set, so computation proceeds.
    """
