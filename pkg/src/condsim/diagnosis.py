"""Noisy-OR disease/symptom model: sampler, predicates, exact posteriors.

The model has independent binary disease indicators D_n with marginals
p_n, independent leak variables L_m with marginals l_m, and independent
cause variables C_{n,m} with marginals c_{n,m}.  Symptom m presents iff
its leak fired or some present disease caused it:

    S_m = max(L_m, D_1*C_{1,m}, ..., D_N*C_{N,m})

Exact inference sums over all disease assignments, using the closed
form  P(S_m = 1 | D = d) = 1 - (1 - l_m) * prod_{n: d_n=1} (1 - c_{n,m})
and the conditional independence of symptoms given diseases.

``default_params`` returns the bundled eleven-disease, seven-symptom
example model (fabricated rates, shipped as a model file as well).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .bits import bern_np, bernoulli_threshold, blocks_np
from .engine import FiniteModel, enumerate_posterior as _enumerate
from .errors import DimensionTooLarge, ZeroMassCondition
from .tape import BatchRun, GenerativeProgram, Predicate, Tape

MAX_EXACT_DISEASES = 24
_EXACT_RATIONAL_LIMIT = 16  # full-rational enumeration above this is too slow

_DEFAULT_DISEASES = [
    ("Arthritis", "0.06"),
    ("Asthma", "0.04"),
    ("Diabetes", "0.11"),
    ("Epilepsy", "0.002"),
    ("Giardiasis", "0.006"),
    ("Influenza", "0.08"),
    ("Measles", "0.001"),
    ("Meningitis", "0.003"),
    ("MRSA", "0.001"),
    ("Salmonella", "0.002"),
    ("Tuberculosis", "0.003"),
]

_DEFAULT_SYMPTOMS = [
    ("Fever", "0.06"),
    ("Cough", "0.04"),
    ("Hard breathing", "0.001"),
    ("Insulin resistant", "0.15"),
    ("Seizures", "0.002"),
    ("Aches", "0.2"),
    ("Sore neck", "0.006"),
]

_DEFAULT_CAUSE_ROWS = [
    "0.1 0.2 0.1 0.2 0.2 0.5 0.5",
    "0.1 0.4 0.8 0.3 0.1 0.0 0.1",
    "0.1 0.2 0.1 0.9 0.2 0.3 0.5",
    "0.4 0.1 0.0 0.2 0.9 0.0 0.0",
    "0.6 0.3 0.2 0.1 0.2 0.8 0.5",
    "0.4 0.2 0.0 0.2 0.0 0.7 0.4",
    "0.5 0.2 0.1 0.2 0.1 0.6 0.5",
    "0.8 0.3 0.0 0.3 0.1 0.8 0.9",
    "0.3 0.2 0.1 0.2 0.0 0.3 0.5",
    "0.4 0.1 0.0 0.2 0.1 0.1 0.2",
    "0.3 0.2 0.1 0.2 0.2 0.3 0.5",
]


def _check_unit(value: Fraction, what: str) -> None:
    if not 0 <= value <= 1:
        raise ValueError(f"{what} out of [0, 1]: {value}")


@dataclass(frozen=True)
class DiagnosisParams:
    """Parameter tables of a noisy-OR disease/symptom model.

    Probabilities are kept as exact rationals (decimal model files parse
    exactly); samplers convert to float thresholds on construction.
    """

    disease_probs: tuple[Fraction, ...]
    leak_probs: tuple[Fraction, ...]
    cause_probs: tuple[tuple[Fraction, ...], ...]  # [disease][symptom]
    disease_names: tuple[str, ...]
    symptom_names: tuple[str, ...]

    def __post_init__(self):
        nd, ns = len(self.disease_probs), len(self.leak_probs)
        if len(self.disease_names) != nd or len(self.symptom_names) != ns:
            raise ValueError("name lists disagree with table dimensions")
        if len(self.cause_probs) != nd or any(len(r) != ns for r in self.cause_probs):
            raise ValueError("cause table is not diseases x symptoms")
        for i, p in enumerate(self.disease_probs):
            _check_unit(p, f"disease marginal {i + 1}")
        for m, p in enumerate(self.leak_probs):
            _check_unit(p, f"leak probability {m + 1}")
        for n, row in enumerate(self.cause_probs):
            for m, p in enumerate(row):
                _check_unit(p, f"cause probability ({n + 1},{m + 1})")

    @property
    def n_diseases(self) -> int:
        return len(self.disease_probs)

    @property
    def n_symptoms(self) -> int:
        return len(self.leak_probs)

    @classmethod
    def from_tables(cls, diseases, symptoms, causes) -> "DiagnosisParams":
        """Build from (name, prob) lists and a cause matrix of rationals."""
        return cls(
            disease_probs=tuple(Fraction(p) for _, p in diseases),
            leak_probs=tuple(Fraction(p) for _, p in symptoms),
            cause_probs=tuple(tuple(Fraction(p) for p in row) for row in causes),
            disease_names=tuple(name for name, _ in diseases),
            symptom_names=tuple(name for name, _ in symptoms),
        )


def default_params() -> DiagnosisParams:
    """The bundled 11-disease / 7-symptom example model."""
    return DiagnosisParams.from_tables(
        _DEFAULT_DISEASES,
        _DEFAULT_SYMPTOMS,
        [row.split() for row in _DEFAULT_CAUSE_ROWS],
    )


@dataclass(frozen=True)
class DiagnosisSample:
    """One sampled patient: diseases, symptoms and the latent variables."""

    d: tuple[int, ...]
    s: tuple[int, ...]
    l: tuple[int, ...]
    c: tuple[tuple[int, ...], ...]

    def check_noisy_or(self) -> None:
        """Assert the defining identity S_m = max(L_m, D_n * C_{n,m})."""
        for m, s in enumerate(self.s):
            expected = max(
                [self.l[m]] + [dn * row[m] for dn, row in zip(self.d, self.c)]
            )
            if s != expected:
                raise AssertionError(f"noisy-OR identity violated at symptom {m}")


def sample_ds(params: DiagnosisParams, tape: Tape) -> DiagnosisSample:
    """Forward-sample one patient (all latents retained in the record).

    Draw order is fixed -- diseases, then leaks, then the cause matrix
    row by row -- one block per variable, so block positions are
    addressable by the vectorised sampler.
    """
    d = tuple(tape.bernoulli(float(p)) for p in params.disease_probs)
    l = tuple(tape.bernoulli(float(p)) for p in params.leak_probs)
    c = tuple(
        tuple(tape.bernoulli(float(p)) for p in row) for row in params.cause_probs
    )
    s = tuple(
        max([l[m]] + [d[n] * c[n][m] for n in range(params.n_diseases)])
        for m in range(params.n_symptoms)
    )
    return DiagnosisSample(d=d, s=s, l=l, c=c)


def ds_program(params: DiagnosisParams) -> GenerativeProgram:
    """The forward sampler as a program (with a vectorised twin).

    The batch runner computes, for acceptance testing, only the disease
    and leak draws plus the cause draws of present diseases; accepted
    lanes get their full latent record materialised afterwards from the
    same block positions.
    """
    nd, ns = params.n_diseases, params.n_symptoms
    d_thr = np.array(
        [bernoulli_threshold(float(p)) for p in params.disease_probs], dtype=np.uint64
    )
    l_thr = np.array(
        [bernoulli_threshold(float(p)) for p in params.leak_probs], dtype=np.uint64
    )
    c_thr = np.array(
        [[bernoulli_threshold(float(p)) for p in row] for row in params.cause_probs],
        dtype=np.uint64,
    )
    d_pos = np.arange(nd, dtype=np.uint64)
    l_pos = np.arange(nd, nd + ns, dtype=np.uint64)
    c_pos = (np.uint64(nd + ns)
             + np.uint64(ns) * np.arange(nd, dtype=np.uint64)[:, None]
             + np.arange(ns, dtype=np.uint64)[None, :])
    shift = np.uint64(11)

    def batch(seeds: np.ndarray) -> BatchRun:
        seeds = np.asarray(seeds, dtype=np.uint64)
        b = seeds.shape[0]
        d = (blocks_np(seeds[:, None], d_pos[None, :]) >> shift) < d_thr[None, :]
        l = (blocks_np(seeds[:, None], l_pos[None, :]) >> shift) < l_thr[None, :]
        s = l.copy()
        lane_idx, disease_idx = np.nonzero(d)
        if lane_idx.size:
            cause_blocks = blocks_np(
                seeds[lane_idx][:, None], c_pos[disease_idx]
            )
            caused = (cause_blocks >> shift) < c_thr[disease_idx]
            np.logical_or.at(s, lane_idx, caused)
        columns = {"d": d, "s": s}

        def outcomes(indices):
            idx = np.asarray(indices, dtype=np.int64)
            sub = seeds[idx]
            cause_blocks = blocks_np(sub[:, None, None], c_pos[None, :, :])
            c_full = (cause_blocks >> shift) < c_thr[None, :, :]
            records = []
            for row in range(idx.size):
                records.append(
                    DiagnosisSample(
                        d=tuple(int(v) for v in d[idx[row]]),
                        s=tuple(int(v) for v in s[idx[row]]),
                        l=tuple(int(v) for v in l[idx[row]]),
                        c=tuple(
                            tuple(int(v) for v in c_full[row, n]) for n in range(nd)
                        ),
                    )
                )
            return records

        return BatchRun(columns, outcomes)

    return GenerativeProgram(
        lambda tape: sample_ds(params, tape), name="disease-symptom", batch=batch
    )


@dataclass(frozen=True)
class DiagnosisEvidence:
    """Tri-state evidence: observed disease/symptom values, rest free.

    Keys are 0-based variable indices; values are 0 or 1.
    """

    diseases: Mapping[int, int] = field(default_factory=dict)
    symptoms: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "diseases", MappingProxyType(dict(self.diseases)))
        object.__setattr__(self, "symptoms", MappingProxyType(dict(self.symptoms)))
        for mapping in (self.diseases, self.symptoms):
            for idx, v in mapping.items():
                if idx < 0:
                    raise ValueError(f"negative variable index {idx}")
                if v not in (0, 1):
                    raise ValueError(f"observed value must be 0 or 1, got {v!r}")

    def is_empty(self) -> bool:
        return not self.diseases and not self.symptoms

    def matches(self, d: tuple[int, ...], s: tuple[int, ...]) -> bool:
        return all(d[i] == v for i, v in self.diseases.items()) and all(
            s[m] == v for m, v in self.symptoms.items()
        )

    def merged_with(self, other: "DiagnosisEvidence") -> "DiagnosisEvidence | None":
        """Conjunction of two evidence sets; None when they conflict."""
        d = dict(self.diseases)
        for i, v in other.diseases.items():
            if d.setdefault(i, v) != v:
                return None
        s = dict(self.symptoms)
        for m, v in other.symptoms.items():
            if s.setdefault(m, v) != v:
                return None
        return DiagnosisEvidence(diseases=d, symptoms=s)


def evidence_predicate(evidence: DiagnosisEvidence) -> Predicate:
    """Predicate accepting exactly the samples matching the evidence."""
    if evidence.is_empty():
        raise ValueError("evidence must observe at least one variable")
    d_items = tuple(evidence.diseases.items())
    s_items = tuple(evidence.symptoms.items())

    def test(outcome, tape):
        return evidence.matches(outcome.d, outcome.s)

    def batch(columns, seeds):
        d, s = columns["d"], columns["s"]
        ok = np.ones(d.shape[0], dtype=bool)
        for i, v in d_items:
            ok &= d[:, i] == bool(v)
        for m, v in s_items:
            ok &= s[:, m] == bool(v)
        return ok

    label = " ".join(
        [f"D{i + 1}={v}" for i, v in d_items] + [f"S{m + 1}={v}" for m, v in s_items]
    )
    return Predicate(test, name=f"evidence[{label}]", batch=batch)


def symptom_prob_given_diseases(
    params: DiagnosisParams, m: int, d: tuple[int, ...]
) -> Fraction:
    """P(S_m = 1 | D = d) = 1 - (1 - l_m) prod_{n: d_n=1} (1 - c_{n,m})."""
    if not 0 <= m < params.n_symptoms:
        raise IndexError(f"symptom index {m} out of range")
    if len(d) != params.n_diseases:
        raise ValueError("disease assignment has wrong length")
    miss = Fraction(1) - params.leak_probs[m]
    for n, present in enumerate(d):
        if present:
            miss *= Fraction(1) - params.cause_probs[n][m]
    return Fraction(1) - miss


def _exact_or_float(params: DiagnosisParams):
    """Arithmetic for enumeration: exact rationals at small scale."""
    if params.n_diseases <= _EXACT_RATIONAL_LIMIT:
        return lambda x: Fraction(x)
    return float


def _joint_weight(params, d, symptom_obs, conv):
    """P(D = d) * P(observed symptoms | d), in the chosen arithmetic."""
    w = conv(1)
    for n, present in enumerate(d):
        p = conv(params.disease_probs[n])
        w *= p if present else conv(1) - p
    for m, v in symptom_obs:
        sm = conv(symptom_prob_given_diseases(params, m, d))
        w *= sm if v else conv(1) - sm
    return w


def _consistent_assignments(params, disease_obs):
    fixed = dict(disease_obs)
    choices = [(fixed[n],) if n in fixed else (0, 1) for n in range(params.n_diseases)]
    return product(*choices)


def exact_posterior(
    params: DiagnosisParams, evidence: DiagnosisEvidence
) -> FiniteModel:
    """Posterior over full disease assignments given the evidence.

    Sums the joint weight over all 2**N consistent disease assignments;
    exact rational arithmetic up to 16 diseases, float64 beyond, and
    refuses models with more than 24 diseases.
    """
    if params.n_diseases > MAX_EXACT_DISEASES:
        raise DimensionTooLarge(
            f"exact enumeration supports at most {MAX_EXACT_DISEASES} diseases"
        )
    conv = _exact_or_float(params)
    symptom_obs = sorted(evidence.symptoms.items())
    entries = []
    total = conv(0)
    for d in _consistent_assignments(params, evidence.diseases.items()):
        w = _joint_weight(params, d, symptom_obs, conv)
        total += w
        entries.append((d, w))
    if total == 0:
        raise ZeroMassCondition("evidence has probability zero")
    return FiniteModel((d, w / total) for d, w in entries)


def evidence_prob(params: DiagnosisParams, evidence: DiagnosisEvidence) -> Fraction:
    """Exact marginal probability of an evidence set."""
    if params.n_diseases > MAX_EXACT_DISEASES:
        raise DimensionTooLarge(
            f"exact enumeration supports at most {MAX_EXACT_DISEASES} diseases"
        )
    conv = _exact_or_float(params)
    symptom_obs = sorted(evidence.symptoms.items())
    total = conv(0)
    for d in _consistent_assignments(params, evidence.diseases.items()):
        total += _joint_weight(params, d, symptom_obs, conv)
    return total


def forward_prob(
    params: DiagnosisParams,
    target: DiagnosisEvidence,
    given: DiagnosisEvidence,
) -> float:
    """Exact P(target | given) by enumeration over disease assignments."""
    p_given = evidence_prob(params, given)
    if p_given == 0:
        raise ZeroMassCondition("conditioning evidence has probability zero")
    merged = target.merged_with(given)
    if merged is None:
        return 0.0
    return float(evidence_prob(params, merged) / p_given)


def model_graph(params: DiagnosisParams):
    """The model's directed graph over all variables, with labels.

    Vertices are the diseases, leaks, cause indicators and symptoms;
    each symptom's parents are its leak, every disease, and every cause
    indicator pointing at it.  Returns ``(dag, labels)`` where labels
    maps names like ``"D3"``, ``"L2"``, ``"C3,2"``, ``"S1"`` (1-based)
    to vertex indices.
    """
    from .structure import Dag

    nd, ns = params.n_diseases, params.n_symptoms
    labels: dict[str, int] = {}
    for n in range(nd):
        labels[f"D{n + 1}"] = n
    for m in range(ns):
        labels[f"L{m + 1}"] = nd + m
    for n in range(nd):
        for m in range(ns):
            labels[f"C{n + 1},{m + 1}"] = nd + ns + n * ns + m
    base_s = nd + ns + nd * ns
    for m in range(ns):
        labels[f"S{m + 1}"] = base_s + m
    edges = set()
    for m in range(ns):
        s = labels[f"S{m + 1}"]
        edges.add((labels[f"L{m + 1}"], s))
        for n in range(nd):
            edges.add((labels[f"D{n + 1}"], s))
            edges.add((labels[f"C{n + 1},{m + 1}"], s))
    return Dag(base_s + ns, frozenset(edges)), labels


def posterior_event_odds(
    posterior: FiniteModel,
    numerator: Mapping[int, int],
    denominator: Mapping[int, int],
) -> float:
    """Odds of two disease events (partial assignments) under a posterior."""

    def mass(constraint: Mapping[int, int]) -> float:
        return float(
            sum(
                p
                for d, p in posterior.entries
                if all(d[i] == v for i, v in constraint.items())
            )
        )

    num, den = mass(numerator), mass(denominator)
    if den == 0:
        raise ZeroMassCondition("denominator event has zero posterior mass")
    return num / den
