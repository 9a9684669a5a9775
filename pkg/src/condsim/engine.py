"""Conditional simulation by rejection, plus exact enumeration oracles.

``query(program, predicate, opts)`` repeatedly runs the program on
fresh, independent per-iteration tapes and returns the outcome of the
first iteration whose predicate accepts.  Program and predicate share
the iteration's tape, so the predicate conditions on any intermediate
value the program produced; the output distribution is the program's
prior conditioned on acceptance.

``FiniteModel`` and ``enumerate_posterior`` provide the exact
counterpart for finite discrete models, used throughout the test suite
as the oracle against which rejection sampling is checked.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from .bits import split_seed, split_seed_np
from .errors import MaxIterationsExceeded, ZeroMassCondition
from .tape import GenerativeProgram, Predicate, RandomTape, make_tape, run_program, split_tape

DEFAULT_MAX_ITERATIONS = 10**6

_PROB_TOL = 1e-12


@dataclass(frozen=True)
class QueryOptions:
    """Knobs for a rejection run: seed, sample count, iteration cap."""

    seed: int
    samples: int = 1
    max_iterations: int = DEFAULT_MAX_ITERATIONS

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")


@dataclass
class QueryResult:
    """Accepted outcomes plus the iteration count each one needed."""

    outcomes: list[Any]
    iterations: list[int]

    @property
    def mean_iterations(self) -> float:
        return sum(self.iterations) / len(self.iterations)


def query(
    program: GenerativeProgram, predicate: Predicate, opts: QueryOptions
) -> Any:
    """First outcome of ``program`` whose ``predicate`` run accepts.

    Each iteration runs program and predicate on a shared fresh tape
    (independent across iterations).  Raises
    :class:`MaxIterationsExceeded` when no iteration accepts, which in
    practice flags a condition of (near-)zero probability.
    """
    master = make_tape(opts.seed)
    for n in range(opts.max_iterations):
        tape = split_tape(master, n)
        outcome = run_program(program, tape)
        if predicate.test(outcome, tape):
            return outcome
    raise MaxIterationsExceeded(
        f"no acceptance in {opts.max_iterations} iterations of {program.name}"
        f" | {predicate.name}"
    )


def query_samples(
    program: GenerativeProgram,
    predicate: Predicate,
    opts: QueryOptions,
    *,
    force_scalar: bool = False,
) -> QueryResult:
    """Draw ``opts.samples`` independent conditioned outcomes.

    Sample ``j`` is exactly ``query`` run with seed
    ``split_seed(opts.seed, j)``.  When both program and predicate
    provide batch implementations the rejection loop is vectorised
    across pending samples; the batched path is bit-identical to the
    scalar one (same tapes, same draws) and is exercised against it in
    the tests.
    """
    if not force_scalar and program.batch is not None and predicate.batch is not None:
        return _query_samples_batched(program, predicate, opts)
    outcomes, iterations = [], []
    master = make_tape(opts.seed)
    for j in range(opts.samples):
        sub = QueryOptions(
            seed=split_tape(master, j).seed,
            samples=1,
            max_iterations=opts.max_iterations,
        )
        sample_master = make_tape(sub.seed)
        accepted = None
        for n in range(sub.max_iterations):
            tape = split_tape(sample_master, n)
            outcome = run_program(program, tape)
            if predicate.test(outcome, tape):
                accepted = outcome
                iterations.append(n + 1)
                break
        if accepted is None:
            raise MaxIterationsExceeded(
                f"sample {j}: no acceptance in {sub.max_iterations} iterations"
            )
        outcomes.append(accepted)
    return QueryResult(outcomes, iterations)


def _query_samples_batched(
    program: GenerativeProgram, predicate: Predicate, opts: QueryOptions
) -> QueryResult:
    n = opts.samples
    sample_seeds = split_seed_np(np.uint64(opts.seed), np.arange(n, dtype=np.uint64))
    pending = np.arange(n, dtype=np.int64)
    iteration = np.zeros(n, dtype=np.int64)
    outcomes: list[Any] = [None] * n
    iterations = np.zeros(n, dtype=np.int64)
    while pending.size:
        tape_seeds = split_seed_np(sample_seeds[pending], iteration[pending])
        run = program.batch(tape_seeds)
        mask = np.asarray(predicate.batch(run.columns, tape_seeds), dtype=bool)
        if mask.any():
            local = np.nonzero(mask)[0]
            accepted_outcomes = run.outcomes(local)
            for lane, record in zip(local, accepted_outcomes):
                j = int(pending[lane])
                outcomes[j] = record
                iterations[j] = iteration[j] + 1
        iteration[pending] += 1
        pending = pending[~mask]
        if pending.size and iteration[pending[0]] >= opts.max_iterations:
            raise MaxIterationsExceeded(
                f"{pending.size} samples still pending after "
                f"{opts.max_iterations} iterations"
            )
    return QueryResult(outcomes, [int(v) for v in iterations])


def always_accept() -> Predicate:
    """The trivial predicate: conditioning on it changes nothing."""
    return Predicate(lambda outcome, tape: True, name="accept-all")


def repeat_predicate(k: int, predicate: Predicate) -> Predicate:
    """Accept iff ``k`` independent evaluations of ``predicate`` all accept.

    Each evaluation sees the same prior outcome record but draws its
    own randomness from a fresh sub-tape of the iteration tape.  k = 0
    is the empty conjunction and always accepts.
    """
    if k < 0:
        raise ValueError("k must be >= 0")

    def test(outcome, tape):
        return all(
            predicate.test(outcome, split_tape(tape, j) if tape is not None else None)
            for j in range(k)
        )

    batch = None
    if predicate.batch is not None:

        def batch(columns, seeds):
            seeds = np.asarray(seeds, dtype=np.uint64)
            ok = np.ones(seeds.shape, dtype=bool)
            for j in range(k):
                sub = split_seed_np(seeds, np.uint64(j))
                ok &= np.asarray(predicate.batch(columns, sub), dtype=bool)
            return ok

    return Predicate(test, name=f"repeat({k}, {predicate.name})", batch=batch)


# ---------------------------------------------------------------------------
# Exact finite models


def _as_exact(p) -> Fraction | float:
    if isinstance(p, Rational):
        return Fraction(p)
    return float(p)


class FiniteModel:
    """A finite outcome space with exact probabilities.

    Entries are ``(outcome, probability)`` pairs with hashable outcomes;
    probabilities may be :class:`fractions.Fraction` (kept exact through
    conditioning) or floats.  They must be nonnegative and sum to one
    within 1e-12.
    """

    def __init__(self, entries: Iterable[tuple[Any, Any]]):
        items: list[tuple[Any, Fraction | float]] = []
        seen = set()
        for outcome, prob in entries:
            p = _as_exact(prob)
            if p < 0:
                raise ValueError(f"negative probability for {outcome!r}")
            if outcome in seen:
                raise ValueError(f"duplicate outcome {outcome!r}")
            seen.add(outcome)
            items.append((outcome, p))
        total = float(sum(p for _, p in items))
        if abs(total - 1.0) > _PROB_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        self.entries: tuple[tuple[Any, Fraction | float], ...] = tuple(items)
        self._probs = dict(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def support(self) -> list[Any]:
        return [o for o, _ in self.entries]

    def prob(self, outcome: Any) -> Fraction | float:
        return self._probs.get(outcome, Fraction(0))

    def map(self, fn: Callable[[Any], Any]) -> "FiniteModel":
        """Pushforward under ``fn`` (merging colliding outcomes)."""
        acc: dict[Any, Any] = {}
        for outcome, p in self.entries:
            key = fn(outcome)
            acc[key] = acc.get(key, Fraction(0)) + p
        return FiniteModel(acc.items())

    def expectation(self, fn: Callable[[Any], float]) -> float:
        return float(sum(p * fn(o) for o, p in self.entries))


def enumerate_posterior(
    model: FiniteModel, condition: Predicate | Callable[[Any], bool]
) -> FiniteModel:
    """Exact conditioning: renormalised restriction to accepted outcomes.

    ``condition`` is a deterministic predicate over outcome records
    (a :class:`Predicate` that ignores its tape, or any plain callable).
    Raises :class:`ZeroMassCondition` when nothing is accepted.
    """
    if isinstance(condition, Predicate):
        accept = lambda outcome: bool(condition.test(outcome, None))
    else:
        accept = lambda outcome: bool(condition(outcome))
    kept = [(o, p) for o, p in model.entries if accept(o)]
    total = sum(p for _, p in kept)
    if not kept or total == 0:
        raise ZeroMassCondition("condition accepts no outcome of the model")
    return FiniteModel((o, p / total) for o, p in kept)


def empirical_distribution(samples: Iterable[Any]) -> dict[Any, float]:
    counts = Counter(samples)
    n = sum(counts.values())
    return {o: c / n for o, c in counts.items()}


def total_variation(
    sampled: Iterable[Any] | Mapping[Any, float], exact: FiniteModel
) -> float:
    """½ Σ |p̂ − p| between an empirical distribution and an exact model.

    ``sampled`` is either raw samples or an already-normalised mapping
    from outcomes to frequencies.
    """
    if isinstance(sampled, Mapping):
        emp = dict(sampled)
    else:
        emp = empirical_distribution(sampled)
    keys = set(emp) | set(exact.support())
    return 0.5 * sum(abs(emp.get(k, 0.0) - float(exact.prob(k))) for k in keys)
