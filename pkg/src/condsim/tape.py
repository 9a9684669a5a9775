"""Replayable fair-bit tapes and the program/predicate abstractions.

A :class:`RandomTape` is an infinite stream of i.i.d. fair bits
determined entirely by a 64-bit seed (see :mod:`condsim.bits` for the
generator).  Tapes are the sole randomness source of every sampler in
the package: a generative program is a map from a tape to an outcome
record, and a predicate is an accept/reject test that sees the
program's full outcome record and may consume further bits of the same
iteration's randomness.

Bit accounting
--------------
The tape hands out single bits (MSB-first within each 64-bit block) or
whole blocks.  Block-level draws (``next_block``, ``uniform53``,
``bernoulli``, ``randint``) first skip to the next block boundary, so
block ``i`` of a tape always occupies bit positions ``64*i .. 64*i+63``.
This alignment is what allows a vectorised sampler to address the very
same draws by ``(seed, block index)`` and reproduce a scalar run
bit for bit.

A tape is owned by one logical task at a time; replication across
iterations, samples or threads goes through ``split_tape`` (fresh
seeds), never through a shared cursor.
"""

from __future__ import annotations

from typing import Any, Callable, Sequence

from .bits import MASK64, bernoulli_threshold, block_at, split_seed
from .errors import BitBudgetExceeded, TapeExhausted

DEFAULT_BIT_BUDGET = 1 << 20


class RandomTape:
    """Deterministic stream of fair bits keyed by a 64-bit seed.

    Two tapes with equal seeds produce identical bit sequences, and
    ``reset`` replays a tape from the start.  The ``consumed`` property
    reconstructs exactly the bits read so far (they are a pure function
    of the seed, so nothing needs to be stored).
    """

    __slots__ = ("seed", "_cursor", "_limit")

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self._cursor = 0
        self._limit: int | None = None

    # -- bit accounting ----------------------------------------------------

    @property
    def bits_consumed(self) -> int:
        return self._cursor

    @property
    def consumed(self) -> list[int]:
        """The exact sequence of bits read so far."""
        return [self._bit_at(i) for i in range(self._cursor)]

    def reset(self) -> None:
        """Rewind to bit 0; a replay reproduces the same stream."""
        self._cursor = 0
        self._limit = None

    def _bit_at(self, position: int) -> int:
        block = block_at(self.seed, position >> 6)
        return (block >> (63 - (position & 63))) & 1

    def _advance(self, nbits: int) -> None:
        self._cursor += nbits
        if self._limit is not None and self._cursor > self._limit:
            raise BitBudgetExceeded(
                f"tape read past its bit budget of {self._limit} bits"
            )

    def _push_limit(self, max_bits: int) -> None:
        self._limit = self._cursor + max_bits

    def _pop_limit(self) -> None:
        self._limit = None

    # -- draws -------------------------------------------------------------

    def next_bit(self) -> int:
        bit = self._bit_at(self._cursor)
        self._advance(1)
        return bit

    def next_block(self) -> int:
        """The next 64 fair bits as an integer (block-aligned)."""
        misalign = self._cursor & 63
        if misalign:
            self._advance(64 - misalign)
        index = self._cursor >> 6
        self._advance(64)
        return block_at(self.seed, index)

    def uniform53(self) -> float:
        """Uniform [0,1) double from 53 dyadic bits (one block)."""
        return (self.next_block() >> 11) * 2.0**-53

    def bernoulli(self, p: float) -> int:
        """Bernoulli(p) trial from one block; returns 0 or 1."""
        return 1 if (self.next_block() >> 11) < bernoulli_threshold(p) else 0

    def randint(self, n: int) -> int:
        """Exactly uniform integer in [0, n) (Lemire multiply-shift)."""
        if n <= 0:
            raise ValueError("randint needs n >= 1")
        threshold = (-n) % n
        while True:
            m = self.next_block() * n
            if (m & MASK64) >= threshold:
                return m >> 64

    def __repr__(self) -> str:  # pragma: no cover
        return f"RandomTape(seed={self.seed:#x}, cursor={self._cursor})"


class BitListTape:
    """Tape over an explicit, finite bit sequence (for tests and replay).

    Implements the same draw protocol as :class:`RandomTape`; reading
    past the end raises :class:`TapeExhausted`.
    """

    def __init__(self, bits: Sequence[int]):
        self._bits = [1 if b else 0 for b in bits]
        self._cursor = 0
        self._limit: int | None = None

    @property
    def bits_consumed(self) -> int:
        return self._cursor

    @property
    def consumed(self) -> list[int]:
        return self._bits[: self._cursor]

    def reset(self) -> None:
        self._cursor = 0
        self._limit = None

    def _advance(self, nbits: int) -> None:
        self._cursor += nbits
        if self._cursor > len(self._bits):
            raise TapeExhausted("bit list exhausted")
        if self._limit is not None and self._cursor > self._limit:
            raise BitBudgetExceeded(
                f"tape read past its bit budget of {self._limit} bits"
            )

    def _push_limit(self, max_bits: int) -> None:
        self._limit = self._cursor + max_bits

    def _pop_limit(self) -> None:
        self._limit = None

    def next_bit(self) -> int:
        bit = self._bits[self._cursor]
        self._advance(1)
        return bit

    def next_block(self) -> int:
        misalign = self._cursor & 63
        if misalign:
            self._advance(64 - misalign)
        start = self._cursor
        self._advance(64)
        value = 0
        for b in self._bits[start : start + 64]:
            value = (value << 1) | b
        return value

    def uniform53(self) -> float:
        return (self.next_block() >> 11) * 2.0**-53

    def bernoulli(self, p: float) -> int:
        return 1 if (self.next_block() >> 11) < bernoulli_threshold(p) else 0

    def randint(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randint needs n >= 1")
        threshold = (-n) % n
        while True:
            m = self.next_block() * n
            if (m & MASK64) >= threshold:
                return m >> 64


Tape = RandomTape | BitListTape


def make_tape(seed: int) -> RandomTape:
    """Fresh tape positioned at bit 0; a pure function of the seed."""
    return RandomTape(seed)


def split_tape(parent: Tape, iteration: int) -> RandomTape:
    """Independent sub-tape for the given iteration index.

    Deterministic in ``(parent seed, iteration)`` and independent of the
    parent's cursor, so it can be reproduced without replaying the
    parent.  Only seeded tapes can be split.
    """
    if not isinstance(parent, RandomTape):
        raise TypeError("split_tape requires a seeded RandomTape")
    return RandomTape(split_seed(parent.seed, iteration))


class GenerativeProgram:
    """A sampler from a tape to an outcome record.

    ``sampler(tape)`` must be pure: the outcome depends only on the
    prefix of bits it consumes.  ``max_bits`` bounds one run; blowing
    through it raises :class:`BitBudgetExceeded`, the mechanical stand-in
    for "halts almost surely".

    ``batch`` optionally provides a vectorised runner (see
    :class:`BatchRun`) whose draws must be bit-identical to the scalar
    sampler on the same seeds.
    """

    def __init__(
        self,
        sampler: Callable[[Tape], Any],
        *,
        name: str = "",
        max_bits: int = DEFAULT_BIT_BUDGET,
        batch: Callable[[Any], "BatchRun"] | None = None,
    ):
        self.sampler = sampler
        self.name = name or getattr(sampler, "__name__", "program")
        self.max_bits = max_bits
        self.batch = batch

    def __repr__(self) -> str:  # pragma: no cover
        return f"GenerativeProgram({self.name})"


class Predicate:
    """An accept/reject test over a program's outcome record.

    ``test(outcome, tape)`` sees the full outcome record of the prior
    program (all of its intermediate values) and may consume further
    randomness; bit-consuming predicates should draw from sub-tapes
    obtained via ``split_tape`` so that scalar and batched evaluation
    address identical draws.  Deterministic predicates ignore the tape
    (and must accept ``tape=None`` so that enumeration can call them).

    ``batch(columns, seeds)`` optionally evaluates a whole iteration
    batch at once and must agree bit for bit with ``test``.
    """

    def __init__(
        self,
        test: Callable[[Any, Tape | None], bool],
        *,
        name: str = "",
        batch: Callable[[dict, Any], Any] | None = None,
    ):
        self.test = test
        self.name = name or getattr(test, "__name__", "predicate")
        self.batch = batch

    def __call__(self, outcome: Any, tape: Tape | None = None) -> bool:
        return bool(self.test(outcome, tape))

    def __repr__(self) -> str:  # pragma: no cover
        return f"Predicate({self.name})"


class BatchRun:
    """One vectorised run of a program over many iteration seeds.

    ``columns`` maps names to per-lane arrays and carries whatever a
    batch predicate needs; ``outcomes(indices)`` materialises the full
    scalar outcome records for the given lanes (used only for accepted
    iterations).
    """

    def __init__(self, columns: dict, outcomes: Callable[[Sequence[int]], list]):
        self.columns = columns
        self._outcomes = outcomes

    def outcomes(self, indices: Sequence[int]) -> list:
        return self._outcomes(indices)


def run_program(program: GenerativeProgram, tape: Tape) -> Any:
    """Run a program on a tape under its bit budget.

    Returns the outcome record; the tape's consumed prefix fully
    determines it.
    """
    tape._push_limit(program.max_bits)
    try:
        return program.sampler(tape)
    finally:
        tape._pop_limit()
