"""Exception hierarchy shared by all nsgame modules."""


class NsgameError(Exception):
    """Base class for all errors raised by this package."""


class ShapeMismatch(NsgameError):
    """Table sizes or tuple lengths do not agree with the declared shape."""


class SumNotOne(NsgameError):
    """A probability table does not sum to exactly one."""

    def __init__(self, total, context=""):
        self.total = total
        msg = f"probabilities sum to {total}, expected 1"
        if context:
            msg = f"{context}: {msg}"
        super().__init__(msg)


class IndexOutOfRange(NsgameError):
    """A tuple component lies outside its alphabet."""


class CapExceeded(NsgameError):
    """A materialized table or constraint set would exceed the cell cap."""


class UnknownName(NsgameError):
    """Unrecognized built-in game name."""


class EmptySubset(NsgameError):
    """An operation requiring a nonempty component subset received none."""


class ZeroProbabilityEvent(NsgameError):
    """Conditioning on an event of probability zero."""


class NonPositiveEpsilon(NsgameError):
    """Deviation parameter outside the admissible range."""


class NonPositiveDelta(NsgameError):
    """Concentration parameter must be strictly positive."""


class KTooLarge(NsgameError):
    """Sample size exceeds the word length."""


class NumericOverflowCap(NsgameError):
    """Rational bit-size grew past the configured cap during a solve."""


class BudgetExceeded(NsgameError):
    """Submatrix enumeration budget exhausted; carries the partial maximum."""

    def __init__(self, partial_max, visited):
        self.partial_max = partial_max
        self.visited = visited
        super().__init__(
            f"enumeration budget exhausted after {visited} submatrices "
            f"(partial max {partial_max})"
        )


class NonIntegerEntries(NsgameError):
    """Matrix entries must be integers for this bound."""


class NoCompleteSupport(NsgameError):
    """The game's question distribution has a zero entry."""


class SignalingStrategy(NsgameError):
    """A non-signaling strategy was required but the table signals."""


class ParseError(NsgameError):
    """Game file could not be parsed; carries the offending line number."""

    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")
