"""Learning the diagnosis tables from records: Beta posteriors.

The hierarchical variant of the disease/symptom model draws every table
entry uniformly from [0, 1], generates ``n + 1`` patients, and is
conditioned on the first ``n`` matching historical records (and the
last matching the current patient's symptoms).  For a parameter whose
Bernoulli outcomes are observed in all ``n`` records, the exact
posterior is Beta(k + 1, n - k + 1): mean (k + 1)/(n + 2),
concentration n + 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bits import blocks_np, split_seed_np, uniform53_np
from .diagnosis import DiagnosisEvidence, DiagnosisParams, DiagnosisSample
from .errors import CountMismatch, DomainError, MaxIterationsExceeded
from .tape import GenerativeProgram, Predicate, Tape

HistoricalRecords = Sequence[DiagnosisEvidence]


@dataclass(frozen=True)
class BetaParams:
    """A Beta(a1, a0) distribution on the unit interval."""

    a1: float
    a0: float

    def __post_init__(self):
        if self.a1 <= 0 or self.a0 <= 0:
            raise ValueError("Beta parameters must be positive")

    @property
    def mean(self) -> float:
        return self.a1 / (self.a1 + self.a0)

    @property
    def concentration(self) -> float:
        return self.a1 + self.a0

    @property
    def variance(self) -> float:
        c = self.concentration
        return self.a1 * self.a0 / (c * c * (c + 1.0))


def beta_posterior_from_counts(k: int, n: int) -> BetaParams:
    """Posterior of a uniform-prior Bernoulli parameter after n trials.

    ``k`` successes in ``n`` trials give Beta(k + 1, n - k + 1), whose
    mean is the smoothed frequency (k + 1)/(n + 2).
    """
    if k < 0 or n < 0 or k > n:
        raise CountMismatch(f"need 0 <= k <= n, got k={k}, n={n}")
    return BetaParams(a1=k + 1.0, a0=n - k + 1.0)


def beta_density(params: BetaParams, x: float) -> float:
    """Beta density at x in (0, 1)."""
    if not 0.0 < x < 1.0:
        raise DomainError(f"density defined on (0, 1), got {x!r}")
    log_norm = (
        math.lgamma(params.a1 + params.a0)
        - math.lgamma(params.a1)
        - math.lgamma(params.a0)
    )
    return math.exp(
        log_norm + (params.a1 - 1.0) * math.log(x) + (params.a0 - 1.0) * math.log1p(-x)
    )


# ---------------------------------------------------------------------------
# The hierarchical sampler.  Fixed block layout (one block per draw):
#   blocks 0..10    disease marginals p_n        (uniform53)
#   blocks 11..17   leak probabilities l_m       (uniform53)
#   blocks 18..94   cause probabilities c_{n,m}  (uniform53, row-major)
#   patient i (i = 0..n): the same 95-slot layout starting at 95*(i+1),
#   Bernoulli draws "uniform53 < parameter".

_N_DIS, _N_SYM = 11, 7
_PARAM_SLOTS = _N_DIS + _N_SYM + _N_DIS * _N_SYM  # 95


def _sample_patient(tape: Tape, p, l, c) -> DiagnosisSample:
    d = tuple(1 if tape.uniform53() < p[n] else 0 for n in range(_N_DIS))
    lat = tuple(1 if tape.uniform53() < l[m] else 0 for m in range(_N_SYM))
    cs = tuple(
        tuple(1 if tape.uniform53() < c[n][m] else 0 for m in range(_N_SYM))
        for n in range(_N_DIS)
    )
    s = tuple(
        max([lat[m]] + [d[n] * cs[n][m] for n in range(_N_DIS)])
        for m in range(_N_SYM)
    )
    return DiagnosisSample(d=d, s=s, l=lat, c=cs)


def sample_ds_prime(
    records: HistoricalRecords, current: DiagnosisEvidence | None, tape: Tape
) -> dict:
    """One forward run of the hierarchical model.

    Draws a full random parameter table, then ``len(records) + 1``
    patients from it.  Returns the record
    ``{"p", "l", "c", "patients", "current"}`` where ``current`` is the
    last patient; conditioning is done by pairing this program with
    :func:`records_predicate`.
    """
    p = tuple(tape.uniform53() for _ in range(_N_DIS))
    l = tuple(tape.uniform53() for _ in range(_N_SYM))
    c = tuple(tuple(tape.uniform53() for _ in range(_N_SYM)) for _ in range(_N_DIS))
    patients = tuple(_sample_patient(tape, p, l, c) for _ in range(len(records) + 1))
    return {
        "p": p,
        "l": l,
        "c": c,
        "patients": patients,
        "current": patients[-1],
    }


def ds_prime_program(
    records: HistoricalRecords, current: DiagnosisEvidence | None = None
) -> GenerativeProgram:
    """The hierarchical sampler as a program (scalar path only)."""
    return GenerativeProgram(
        lambda tape: sample_ds_prime(records, current, tape),
        name=f"hierarchical[{len(records)} records]",
    )


def records_predicate(
    records: HistoricalRecords, current: DiagnosisEvidence | None = None
) -> Predicate:
    """Accept iff historical patients match their records, symptom-wise
    the current patient matches the current evidence.

    Unobserved entries of a record are unconstrained.  Disease
    observations in ``current`` are ignored by design: the current
    patient is conditioned on symptoms only.
    """

    def test(outcome, tape):
        patients = outcome["patients"]
        for rec, patient in zip(records, patients):
            if not rec.matches(patient.d, patient.s):
                return False
        if current is not None:
            last = patients[-1]
            if not all(last.s[m] == v for m, v in current.symptoms.items()):
                return False
        return True

    return Predicate(test, name="records-match")


def posterior_param_samples(
    records: HistoricalRecords,
    n_samples: int,
    seed: int,
    *,
    max_iterations: int = 10**7,
) -> np.ndarray:
    """Accepted disease-marginal tables under disease-only records.

    Vectorised rejection for the exactly-analysable regime: every
    record observes disease indicators only.  Returns an
    ``(n_samples, 11)`` array of accepted ``p`` rows.  Block addressing
    matches :func:`sample_ds_prime`, and the two paths are checked
    bit-for-bit against each other in the tests.
    """
    if any(rec.symptoms for rec in records):
        raise ValueError("records must observe diseases only")
    obs = [(i, sorted(rec.diseases.items())) for i, rec in enumerate(records)]

    sample_seeds = split_seed_np(
        np.uint64(seed), np.arange(n_samples, dtype=np.uint64)
    )
    pending = np.arange(n_samples, dtype=np.int64)
    iteration = np.zeros(n_samples, dtype=np.int64)
    out = np.zeros((n_samples, _N_DIS), dtype=np.float64)
    param_pos = np.arange(_N_DIS, dtype=np.uint64)
    while pending.size:
        tape_seeds = split_seed_np(sample_seeds[pending], iteration[pending])
        p = uniform53_np(blocks_np(tape_seeds[:, None], param_pos[None, :]))
        ok = np.ones(pending.size, dtype=bool)
        for i, disease_obs in obs:
            base = _PARAM_SLOTS * (i + 1)
            for j, v in disease_obs:
                u = uniform53_np(blocks_np(tape_seeds, np.uint64(base + j)))
                d = u < p[:, j]
                ok &= d == bool(v)
        if ok.any():
            accepted = pending[ok]
            out[accepted] = p[ok]
        iteration[pending] += 1
        pending = pending[~ok]
        if pending.size and iteration[pending[0]] >= max_iterations:
            raise MaxIterationsExceeded(
                f"{pending.size} samples pending after {max_iterations} iterations"
            )
    return out


def beta_summary_rows(
    counts: Sequence[tuple[str, int, int]],
) -> list[tuple[str, int, int, float, float]]:
    """Rows (parameter, k, n, post_mean, post_var) for CSV export."""
    rows = []
    for name, k, n in counts:
        post = beta_posterior_from_counts(k, n)
        rows.append((name, k, n, post.mean, post.variance))
    return rows
