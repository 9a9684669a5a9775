"""Small bundled example programs and predicates."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .bits import blocks_np, lemire_np
from .engine import FiniteModel
from .tape import BatchRun, GenerativeProgram, Predicate, RandomTape, Tape


def uniform_int_program(n: int) -> GenerativeProgram:
    """Uniform integer in 1..n (exactly uniform, one block per attempt)."""

    def sampler(tape: Tape):
        return tape.randint(n) + 1

    def batch(seeds):
        seeds = np.asarray(seeds, dtype=np.uint64)
        values, ok = lemire_np(blocks_np(seeds, np.uint64(0)), n)
        if not ok.all():  # pragma: no cover - probability ~ n / 2**64
            for i in np.nonzero(~ok)[0]:
                values[i] = RandomTape(int(seeds[i])).randint(n)
        values = values + 1
        return BatchRun(
            {"value": values}, lambda indices: [int(values[i]) for i in indices]
        )

    return GenerativeProgram(sampler, name=f"uniform-1..{n}", batch=batch)


def uniform_int_model(n: int) -> FiniteModel:
    """Exact counterpart of :func:`uniform_int_program`."""
    return FiniteModel((v, Fraction(1, n)) for v in range(1, n + 1))


def divisible_predicate(*divisors: int) -> Predicate:
    """Accept integers divisible by every listed divisor (reads no bits)."""

    def test(outcome, tape):
        return all(outcome % d == 0 for d in divisors)

    def batch(columns, seeds):
        v = columns["value"]
        ok = np.ones(v.shape, dtype=bool)
        for d in divisors:
            ok &= v % d == 0
        return ok

    name = "divisible-by-" + ",".join(str(d) for d in divisors)
    return Predicate(test, name=name, batch=batch)


def fair_coin_program() -> GenerativeProgram:
    """One fair bit; the first tape bit is the outcome."""
    return GenerativeProgram(lambda tape: tape.next_bit(), name="fair-coin")


def constant_program(value) -> GenerativeProgram:
    """Emits a constant and consumes no bits."""
    return GenerativeProgram(lambda tape: value, name=f"const({value!r})")


def uniform_pair_program(transform=None) -> GenerativeProgram:
    """Record {'x': U, 'y': f(U, tape)} with U uniform on [0, 1).

    With the default identity transform the record is {'x': u, 'y': u};
    a custom ``transform(u, tape)`` may consume further bits.
    """

    def sampler(tape: Tape):
        u = tape.uniform53()
        y = u if transform is None else transform(u, tape)
        return {"x": u, "y": y}

    return GenerativeProgram(sampler, name="uniform-pair")
