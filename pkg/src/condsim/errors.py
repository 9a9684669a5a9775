"""Exception types shared across the package."""


class CondsimError(Exception):
    """Base class for every error raised by this package."""


class BitBudgetExceeded(CondsimError):
    """A program read more bits than its declared budget.

    Signals a non-halting or runaway sampler; the budget operationalises
    the requirement that generative programs halt almost surely.
    """


class MaxIterationsExceeded(CondsimError):
    """The rejection loop hit its iteration cap without an acceptance.

    In practice this means the condition has (near-)zero probability.
    """


class ZeroMassCondition(CondsimError):
    """Exact conditioning on an event of probability zero."""


class DimensionTooLarge(CondsimError):
    """Input exceeds the size supported by an exact enumeration path."""


class CountMismatch(CondsimError):
    """Success count exceeds trial count (k > n) or counts are negative."""


class DomainError(CondsimError):
    """Argument outside a function's mathematical domain."""


class WidthMismatch(CondsimError):
    """Data row width disagrees with the graph's vertex count."""


class InconsistentCounts(CondsimError):
    """Sufficient statistics violate their additivity constraints."""


class HorizonExceeded(CondsimError):
    """A belief-state rollout failed to terminate within the horizon bound."""


class CyclicBeliefGraph(CondsimError):
    """The belief-state graph contains a directed cycle."""


class AllActionsFail(CondsimError):
    """Every available action has success probability zero."""


class PrecisionExhausted(CondsimError):
    """A refinement loop passed its configured maximum step."""


class ModelFileError(CondsimError):
    """A model or data file failed to parse or validate."""


class TapeExhausted(CondsimError):
    """An explicit bit-list tape ran out of bits."""
