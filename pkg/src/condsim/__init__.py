"""condsim: conditional simulation by rejection over explicit bit tapes.

The core abstraction: a generative program samples an outcome record
from a replayable tape of fair bits, a predicate accepts or rejects the
record (seeing every intermediate value), and ``query`` returns the
first accepted outcome -- i.e. a draw from the prior conditioned on the
predicate.  Exact enumeration oracles, a noisy-OR diagnosis model,
Beta-Bernoulli parameter learning, DAG structure scoring and recursive
decision policies are built on top.
"""

from .engine import (
    FiniteModel,
    QueryOptions,
    QueryResult,
    enumerate_posterior,
    query,
    query_samples,
    repeat_predicate,
    total_variation,
)
from .errors import (
    AllActionsFail,
    BitBudgetExceeded,
    CondsimError,
    CountMismatch,
    CyclicBeliefGraph,
    DimensionTooLarge,
    DomainError,
    HorizonExceeded,
    InconsistentCounts,
    MaxIterationsExceeded,
    ModelFileError,
    PrecisionExhausted,
    WidthMismatch,
    ZeroMassCondition,
)
from .tape import (
    BitListTape,
    GenerativeProgram,
    Predicate,
    RandomTape,
    make_tape,
    run_program,
    split_tape,
)

__version__ = "0.1.0"

__all__ = [
    "BitListTape",
    "FiniteModel",
    "GenerativeProgram",
    "Predicate",
    "QueryOptions",
    "QueryResult",
    "RandomTape",
    "enumerate_posterior",
    "make_tape",
    "query",
    "query_samples",
    "repeat_predicate",
    "run_program",
    "split_tape",
    "total_variation",
    "AllActionsFail",
    "BitBudgetExceeded",
    "CondsimError",
    "CountMismatch",
    "CyclicBeliefGraph",
    "DimensionTooLarge",
    "DomainError",
    "HorizonExceeded",
    "InconsistentCounts",
    "MaxIterationsExceeded",
    "ModelFileError",
    "PrecisionExhausted",
    "WidthMismatch",
    "ZeroMassCondition",
    "__version__",
]
