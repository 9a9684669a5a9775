"""Exact sampling from described distributions using fair bits only.

Three constructions: a Bernoulli(alpha) trial from any real given by a
rapidly-converging rational approximator; a sampler for any p.m.f. on a
countable support via residual renormalisation; and positive-measure
interval conditioning of a real-valued latent (equivalently, exact
conditioning on a uniform-noise observation of it).
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from numbers import Rational
from typing import Any, Callable, Iterable, Iterator

from .engine import QueryOptions, query_samples
from .errors import DomainError, PrecisionExhausted
from .tape import GenerativeProgram, Predicate, Tape

DEFAULT_MAX_STEPS = 64
DEFAULT_MAX_SUPPORT = 10**5


class ComputableReal:
    """A real number given by dyadic-rate rational approximations.

    ``approx(n)`` returns a rational within ``2**-n`` of the value.  The
    constructors for exact rationals (and floats, which are rationals)
    return the value itself at every index, which is the best possible
    approximator.
    """

    def __init__(self, approx: Callable[[int], Fraction], *, name: str = ""):
        self._approx = approx
        self.name = name

    def approx(self, n: int) -> Fraction:
        q = self._approx(n)
        if not isinstance(q, Rational):
            raise TypeError("approximator must return rationals")
        return Fraction(q)

    @classmethod
    def from_rational(cls, value) -> "ComputableReal":
        q = Fraction(value)
        return cls(lambda n: q, name=f"const({q})")

    @classmethod
    def from_float(cls, value: float) -> "ComputableReal":
        return cls.from_rational(Fraction(value))

    def check_consistency(self, indices: Iterable[int]) -> None:
        """Assert |q_n - q_m| < 2**-n + 2**-m over the given index pairs."""
        idx = list(indices)
        approxes = {n: self.approx(n) for n in idx}
        for n in idx:
            for m in idx:
                bound = Fraction(1, 2**n) + Fraction(1, 2**m)
                if abs(approxes[n] - approxes[m]) >= bound:
                    raise ValueError(
                        f"approximations at {n} and {m} violate the "
                        f"rapid-convergence bound"
                    )

    def __repr__(self) -> str:  # pragma: no cover
        return f"ComputableReal({self.name or self._approx!r})"


def _coerce_real(alpha) -> ComputableReal:
    if isinstance(alpha, ComputableReal):
        return alpha
    if isinstance(alpha, Rational):
        return ComputableReal.from_rational(alpha)
    if isinstance(alpha, float):
        return ComputableReal.from_float(alpha)
    raise TypeError(f"cannot interpret {alpha!r} as a computable real")


def bernoulli_from_real(alpha, tape: Tape, *, max_steps: int = DEFAULT_MAX_STEPS) -> int:
    """Bernoulli trial with success probability ``alpha`` in [0, 1].

    Step ``n`` compares the dyadic prefix ``A_n`` of the tape against
    the approximation ``q_n``: output 1 once ``A_n < q_n - 2**-n``,
    output 0 once ``A_n > q_n + 2**-n``, otherwise read another bit.
    Halts almost surely (the undecided tape prefixes shrink
    geometrically); a tape staying undecided past ``max_steps`` raises
    :class:`PrecisionExhausted`.
    """
    real = _coerce_real(alpha)
    num = 0  # A_n numerator over 2**n
    for n in range(1, max_steps + 1):
        num = (num << 1) | tape.next_bit()
        q = real.approx(n)
        a, b = q.numerator, q.denominator
        pow2 = 1 << n
        # A_n < q - 2**-n  <=>  b*(num + 1) < a * 2**n
        if b * (num + 1) < a * pow2:
            return 1
        # A_n > q + 2**-n  <=>  b*(num - 1) > a * 2**n
        if b * (num - 1) > a * pow2:
            return 0
    raise PrecisionExhausted(f"undecided after {max_steps} refinement steps")


class ComputablePmf:
    """A p.m.f. on a countable support with exactly-known atom masses.

    ``atoms`` is an iterable (or a zero-argument factory of iterables,
    for infinite supports) of ``(value, probability)`` pairs with
    rational probabilities.  Partial sums may never exceed 1.
    """

    def __init__(
        self,
        atoms: Iterable[tuple[Any, Any]] | Callable[[], Iterator[tuple[Any, Any]]],
        *,
        name: str = "",
    ):
        if callable(atoms):
            self._factory = atoms
        else:
            frozen = list(atoms)
            self._factory = lambda: iter(frozen)
        self.name = name

    def atoms(self) -> Iterator[tuple[Any, Fraction]]:
        total = Fraction(0)
        for value, prob in self._factory():
            p = Fraction(prob)
            if p < 0:
                raise ValueError(f"negative atom mass for {value!r}")
            total += p
            if total > 1:
                raise ValueError("partial sums of atom masses exceed 1")
            yield value, p

    @classmethod
    def from_dict(cls, d: dict, *, name: str = "") -> "ComputablePmf":
        return cls(list(d.items()), name=name)

    @classmethod
    def geometric(cls, p) -> "ComputablePmf":
        """Geometric on {0, 1, 2, ...}: P(k) = p * (1-p)**k."""
        p = Fraction(p)

        def gen():
            q = Fraction(1)
            for k in itertools.count():
                yield k, p * q
                q *= 1 - p

        return cls(gen, name=f"geometric({p})")


def sample_countable(
    pmf: ComputablePmf,
    tape: Tape,
    *,
    max_steps: int = DEFAULT_MAX_STEPS,
    max_support: int = DEFAULT_MAX_SUPPORT,
) -> Any:
    """Draw from a countable p.m.f. by walking its support.

    At atom ``t_n`` the walk emits ``t_n`` with the residual probability
    ``p_n / (1 - p_1 - ... - p_{n-1})`` (one Bernoulli trial), otherwise
    moves on.  The output distribution is exactly the p.m.f.  A
    defective p.m.f. (masses summing short of 1) raises
    :class:`PrecisionExhausted` once the support enumeration is
    exhausted or ``max_support`` atoms have been visited.
    """
    remaining = Fraction(1)
    for i, (value, p) in enumerate(pmf.atoms()):
        if i >= max_support:
            raise PrecisionExhausted(
                f"no draw within the first {max_support} support atoms"
            )
        if p == 0:
            continue
        ratio = p / remaining
        if ratio >= 1:
            return value
        if bernoulli_from_real(ratio, tape, max_steps=max_steps):
            return value
        remaining -= p
    raise PrecisionExhausted("support exhausted before the masses summed to 1")


def interval_condition(
    prior: GenerativeProgram,
    x: float,
    epsilon: float,
    opts: QueryOptions,
    *,
    x_key: str = "x",
    y_key: str = "y",
) -> list[Any]:
    """Samples of Y conditioned on |X - x| < epsilon (strict).

    ``prior`` must emit a record with a real field ``x_key`` and a
    payload field ``y_key``.  The accepted-sample law of Y is exactly
    the posterior given the observation X + xi = x with xi uniform on
    [-epsilon, epsilon]; shrinking epsilon approximates conditioning on
    X = x itself, with no computable rate in general.
    """
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")

    def test(outcome, tape):
        return abs(outcome[x_key] - x) < epsilon

    predicate = Predicate(test, name=f"|{x_key} - {x}| < {epsilon}")
    result = query_samples(prior, predicate, opts)
    return [outcome[y_key] for outcome in result.outcomes]
