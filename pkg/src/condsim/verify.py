"""Golden-number verification: every headline result at desk scale.

Each check returns deterministic pass/fail rows given its bundled seed,
so two runs of the full battery produce byte-identical reports.  The
same checks back the ``condsim verify`` subcommand and the acceptance
test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product

import numpy as np

from . import csampling, decision, diagnosis, paramlearn, structure
from .engine import (
    FiniteModel,
    QueryOptions,
    enumerate_posterior,
    query_samples,
    total_variation,
)
from .examples import (
    divisible_predicate,
    uniform_int_model,
    uniform_int_program,
    uniform_pair_program,
)
from .tape import make_tape, split_tape

SEEDS = {
    "uniform": 20240101,
    "diagnosis": 20240202,
    "conjugacy": 20240303,
    "evidence": 20240404,
    "dsep": 20240505,
    "choice": 20240607,
    "sampling": 20240707,
}


@dataclass(frozen=True)
class CheckResult:
    criterion: str
    name: str
    ok: bool
    detail: str

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"{status} {self.criterion} {self.name}: {self.detail}"


def _close(value: float, expected: float, tol: float) -> bool:
    return abs(value - expected) <= tol


# ---------------------------------------------------------------------------
# 1. uniform conditioning


def check_uniform_conditioning(samples: int = 10**5) -> list[CheckResult]:
    rows: list[CheckResult] = []
    prior = uniform_int_model(180)
    condition = divisible_predicate(2, 3, 5)
    posterior = enumerate_posterior(prior, condition)
    expected_support = {30, 60, 90, 120, 150, 180}
    exact_ok = set(posterior.support()) == expected_support and all(
        posterior.prob(v) == Fraction(1, 6) for v in expected_support
    )
    rows.append(
        CheckResult(
            "C1", "exact-posterior",
            exact_ok,
            "uniform 1/6 on multiples of 30" if exact_ok else "enumeration wrong",
        )
    )
    result = query_samples(
        uniform_int_program(180), condition,
        QueryOptions(seed=SEEDS["uniform"], samples=samples),
    )
    tv = total_variation(result.outcomes, posterior)
    rows.append(CheckResult("C1", "sampler-tv", tv < 0.02, f"tv={tv:.6f} (< 0.02)"))
    mean_iters = result.mean_iterations
    rows.append(
        CheckResult(
            "C1", "mean-iterations",
            _close(mean_iters, 30.0, 1.5),
            f"mean={mean_iters:.4f} (30 +/- 5%)",
        )
    )
    return rows


# ---------------------------------------------------------------------------
# 2. diagnosis golden numbers


def _default_posterior_s1_s7():
    params = diagnosis.default_params()
    evidence = diagnosis.DiagnosisEvidence(symptoms={0: 1, 6: 1})
    return params, evidence, diagnosis.exact_posterior(params, evidence)


def check_diagnosis_goldens(samples: int = 10**5) -> list[CheckResult]:
    rows: list[CheckResult] = []
    params, evidence, posterior = _default_posterior_s1_s7()
    flu, men = 5, 7
    others = [n for n in range(11) if n not in (flu, men)]

    flu_only = {flu: 1, **{n: 0 for n in range(11) if n != flu}}
    men_only = {men: 1, **{n: 0 for n in range(11) if n != men}}
    nothing = {n: 0 for n in range(11)}
    both_only = {flu: 1, men: 1, **{n: 0 for n in others}}
    men_maybe_flu = {men: 1, **{n: 0 for n in others}}

    odds_flu = diagnosis.posterior_event_odds(posterior, flu_only, nothing)
    odds_men = diagnosis.posterior_event_odds(posterior, men_only, nothing)
    ratio = odds_flu / odds_men
    explain = diagnosis.posterior_event_odds(posterior, both_only, men_maybe_flu)
    for name, value, expected in [
        ("odds-influenza-vs-none", odds_flu, 42.5),
        ("odds-meningitis-vs-none", odds_men, 6.11),
        ("odds-influenza-vs-meningitis", ratio, 6.96),
        ("explaining-away", explain, 0.090),
    ]:
        rows.append(
            CheckResult(
                "C2", name,
                _close(value, expected, 1e-2),
                f"value={value:.4f} expected={expected} (+/- 0.01)",
            )
        )
    result = query_samples(
        diagnosis.ds_program(params),
        diagnosis.evidence_predicate(evidence),
        QueryOptions(seed=SEEDS["diagnosis"], samples=samples),
    )
    tv = total_variation((s.d for s in result.outcomes), posterior)
    rows.append(CheckResult("C2", "sampler-tv", tv < 0.02, f"tv={tv:.6f} (< 0.02)"))
    return rows


# ---------------------------------------------------------------------------
# 3. conjugacy


def _beta_moment_oracle(max_n: int) -> tuple[np.ndarray, np.ndarray]:
    """Grid-integration oracle for the posterior mean and variance of a
    uniform-prior Bernoulli parameter, for every 0 <= k <= n <= max_n.

    Integrates p**k (1-p)**(n-k) on [0, 1] by Simpson's rule; returns
    arrays indexed [n][k] (entries with k > n unused).
    """
    points = 2**14 + 1
    p = np.linspace(0.0, 1.0, points)
    weights = np.ones(points)
    weights[1:-1:2], weights[2:-1:2] = 4.0, 2.0
    weights *= (p[1] - p[0]) / 3.0
    means = np.zeros((max_n + 1, max_n + 1))
    variances = np.zeros_like(means)
    for n in range(max_n + 1):
        for k in range(n + 1):
            lik = p**k * (1.0 - p) ** (n - k)
            z = float(weights @ lik)
            m1 = float(weights @ (p * lik)) / z
            m2 = float(weights @ (p * p * lik)) / z
            means[n, k] = m1
            variances[n, k] = m2 - m1 * m1
    return means, variances


def check_conjugacy(
    max_n: int = 50, rejection_samples: int = 1000
) -> list[CheckResult]:
    rows: list[CheckResult] = []
    means, variances = _beta_moment_oracle(max_n)
    worst_mean = worst_var = 0.0
    for n in range(max_n + 1):
        for k in range(n + 1):
            post = paramlearn.beta_posterior_from_counts(k, n)
            worst_mean = max(worst_mean, abs(post.mean - means[n, k]))
            worst_var = max(worst_var, abs(post.variance - variances[n, k]))
    rows.append(
        CheckResult(
            "C3", "beta-mean-vs-quadrature",
            worst_mean < 1e-6,
            f"max|diff|={worst_mean:.3e} (< 1e-6)",
        )
    )
    rows.append(
        CheckResult(
            "C3", "beta-variance-vs-quadrature",
            worst_var < 1e-6,
            f"max|diff|={worst_var:.3e} (< 1e-6)",
        )
    )
    records = [diagnosis.DiagnosisEvidence(diseases={0: 1}) for _ in range(50)]
    accepted = paramlearn.posterior_param_samples(
        records, rejection_samples, SEEDS["conjugacy"]
    )
    mean_p1 = float(accepted[:, 0].mean())
    closed = paramlearn.beta_posterior_from_counts(50, 50).mean
    rows.append(
        CheckResult(
            "C3", "hierarchical-rejection-posterior",
            _close(mean_p1, closed, 0.05),
            f"mean={mean_p1:.4f} closed-form={closed:.4f} (+/- 0.05)",
        )
    )
    return rows


# ---------------------------------------------------------------------------
# 4. structure score


def check_structure_score() -> list[CheckResult]:
    rows: list[CheckResult] = []
    single = structure.Dag(1, frozenset())
    score = math.exp(structure.log_score(single, [(1,), (0,)]))
    # independent oracle: integral of p(1-p) over [0,1] by quadrature
    p = np.linspace(0.0, 1.0, 2**14 + 1)
    w = np.ones(p.size)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    w *= (p[1] - p[0]) / 3.0
    oracle = float(w @ (p * (1.0 - p)))
    rows.append(
        CheckResult(
            "C4", "single-vertex-score",
            _close(score, 1.0 / 6.0, 1e-12) and _close(oracle, 1.0 / 6.0, 1e-9),
            f"score={score:.12f} quadrature={oracle:.12f} (both 1/6)",
        )
    )
    bf = structure.bayes_factor_independent_vs_dependent(4, 2, 2, 2, 2, 0)
    rows.append(
        CheckResult("C4", "bayes-factor-4-rows", bf == 0.3, f"bf={bf!r} (exactly 0.3)")
    )
    indep = structure.Dag(2, frozenset())
    dep = structure.Dag(2, frozenset({(0, 1)}))
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 30))
        data = [tuple(int(v) for v in rng.integers(0, 2, size=2)) for _ in range(n)]
        n1 = sum(r[0] for r in data)
        k1 = sum(r[0] & r[1] for r in data)
        k = sum(r[1] for r in data)
        bf = structure.bayes_factor_independent_vs_dependent(
            n, k, n1, k1, n - n1, k - k1
        )
        delta = structure.log_score(indep, data) - structure.log_score(dep, data)
        worst = max(worst, abs(math.log(bf) - delta))
    rows.append(
        CheckResult(
            "C4", "log-identity",
            worst < 1e-12,
            f"max|log bf - delta log score|={worst:.3e} (< 1e-12)",
        )
    )
    return rows


# ---------------------------------------------------------------------------
# 5. weight of evidence


def check_weight_of_evidence(trials: int = 100) -> list[CheckResult]:
    rows: list[CheckResult] = []
    dep_grid = list(range(50, 2001, 50))
    dep = structure.weight_of_evidence_experiment(
        0.5, 2000, trials, independent=False, seed=SEEDS["evidence"], n_grid=dep_grid
    )
    fit_points = [p for p in dep if 500 <= p.n <= 2000]
    slope = structure.fit_linear_slope(fit_points)
    expected = -structure.dependent_pair_constant(0.5)
    rows.append(
        CheckResult(
            "C5", "dependent-slope",
            abs(slope - expected) <= 0.15 * abs(expected),
            f"slope={slope:.4f} expected={expected:.4f} (+/- 15%)",
        )
    )
    indep_grid = sorted(
        {int(round(10 ** (2 + i * 2 / 19))) for i in range(20)}
    )
    indep = structure.weight_of_evidence_experiment(
        0.5, 10**4, trials, independent=True,
        seed=SEEDS["evidence"] + 1, n_grid=indep_grid,
    )
    coeff = structure.fit_half_log_coefficient(indep)
    rows.append(
        CheckResult(
            "C5", "independent-coefficient",
            _close(coeff, 1.0, 0.15),
            f"coefficient={coeff:.4f} (1.0 +/- 0.15)",
        )
    )
    # Weight of evidence for the data-generating model is nonnegative
    # (within two standard errors) at every grid point.
    dep_bad = [p.n for p in dep if -p.mean_log_ratio < -2.0 * p.stderr]
    indep_bad = [p.n for p in indep if p.mean_log_ratio < -2.0 * p.stderr]
    rows.append(
        CheckResult(
            "C5", "true-hypothesis-nonnegative",
            not dep_bad and not indep_bad,
            f"violations dep={dep_bad} indep={indep_bad}",
        )
    )
    return rows


# ---------------------------------------------------------------------------
# 6. d-separation


def check_d_separation(random_pairs: int = 50) -> list[CheckResult]:
    rows: list[CheckResult] = []
    graph, labels = diagnosis.model_graph(diagnosis.default_params())
    diseases = [labels[f"D{n}"] for n in range(1, 12)]
    symptoms = [labels[f"S{m}"] for m in range(1, 8)]
    disease_ok = all(
        structure.d_separated(graph, a, b, frozenset())
        for a, b in combinations(diseases, 2)
    )
    rows.append(
        CheckResult(
            "C6", "diseases-independent",
            disease_ok, "all 55 disease pairs d-separated given {}",
        )
    )
    symptom_ok = all(
        structure.d_separated(graph, a, b, frozenset(diseases))
        for a, b in combinations(symptoms, 2)
    )
    rows.append(
        CheckResult(
            "C6", "symptoms-given-diseases",
            symptom_ok, "all 21 symptom pairs d-separated given diseases",
        )
    )
    collider = structure.Dag(3, frozenset({(0, 2), (1, 2)}))
    collider_ok = structure.d_separated(collider, 0, 1, frozenset()) and not (
        structure.d_separated(collider, 0, 1, frozenset({2}))
    )
    rows.append(
        CheckResult(
            "C6", "collider",
            collider_ok, "x -> z <- y: separated given {}, connected given {z}",
        )
    )
    worst = 0.0
    master = make_tape(SEEDS["dsep"])
    checked = 0
    for trial in range(random_pairs):
        tape = split_tape(master, trial)
        n = 2 + tape.randint(3)  # 2..4 vertices
        g = structure.sample_uniform_dag(n, tape)
        cpt = structure.Cpt.random(g, tape)
        joint = structure.joint_pmf(g, cpt)
        worst = max(worst, _factorization_error(g, joint))
        checked += 1
    rows.append(
        CheckResult(
            "C6", "factorization",
            worst < 1e-9,
            f"max violation over {checked} random models={worst:.3e} (< 1e-9)",
        )
    )
    return rows


def _factorization_error(g: structure.Dag, joint: FiniteModel) -> float:
    """Largest |P(x,y|e) - P(x|e)P(y|e)| over all d-separated triples."""
    n = g.n_vertices
    worst = 0.0
    for x, y in combinations(range(n), 2):
        others = [v for v in range(n) if v not in (x, y)]
        for r in range(len(others) + 1):
            for cond in combinations(others, r):
                if not structure.d_separated(g, x, y, frozenset(cond)):
                    continue
                for e in product((0, 1), repeat=len(cond)):
                    p_e = p_x = p_y = p_xy = 0.0
                    for assignment, p in joint.entries:
                        if any(assignment[v] != ev for v, ev in zip(cond, e)):
                            continue
                        p = float(p)
                        p_e += p
                        if assignment[x] == 1:
                            p_x += p
                        if assignment[y] == 1:
                            p_y += p
                        if assignment[x] == 1 and assignment[y] == 1:
                            p_xy += p
                    if p_e <= 0.0:
                        continue
                    worst = max(
                        worst, abs(p_xy / p_e - (p_x / p_e) * (p_y / p_e))
                    )
    return worst


# ---------------------------------------------------------------------------
# 7. choice rules


CHOICE_GRID = (0.3, 0.45, 0.6, 0.75, 0.9)
CHOICE_KS = (1, 2, 4)


def check_choice_rules(samples: int = 10**5) -> list[CheckResult]:
    rows: list[CheckResult] = []
    for offset, (rule, closed_form) in enumerate(
        (
            ("multiplicative", decision.multiplicative_choice_probability),
            ("additive", decision.additive_choice_probability),
        )
    ):
        worst_sigma = 0.0
        worst_cell = ""
        cell = 0
        for p_x, p_y, k in product(CHOICE_GRID, CHOICE_GRID, CHOICE_KS):
            sims = [
                decision.bernoulli_simulator("x", p_x),
                decision.bernoulli_simulator("y", p_y),
            ]
            freqs = decision.choice_frequencies(
                sims, k,
                QueryOptions(
                    seed=SEEDS["choice"] + 1000 * offset + cell, samples=samples
                ),
                rule=rule,
            )
            cell += 1
            expected = closed_form(p_x, p_y, k)
            sigma = math.sqrt(max(expected * (1.0 - expected), 1e-12) / samples)
            deviation = abs(freqs["x"] - expected) / sigma
            if deviation > worst_sigma:
                worst_sigma = deviation
                worst_cell = f"px={p_x},py={p_y},k={k}"
        rows.append(
            CheckResult(
                "C7", f"{rule}-grid",
                worst_sigma <= 3.0,
                f"worst deviation={worst_sigma:.2f} sigma at {worst_cell} (<= 3)",
            )
        )
    return rows


# ---------------------------------------------------------------------------
# 8. sequential policy


def injection_model() -> decision.BeliefStateModel:
    from . import modelio

    return modelio.parse_belief_model(_bundled_text("injection_scenario.model"))


def _bundled_text(name: str) -> str:
    from importlib import resources

    return resources.files("condsim.data").joinpath(name).read_text()


def check_sequential_policy() -> list[CheckResult]:
    rows: list[CheckResult] = []
    model = injection_model()
    policy = decision.solve_policy(model, k=1)
    wait_neg = policy.dist("negative")["WAIT"]
    wait_pos = policy.dist("positive")["WAIT"]
    v_neg = decision.success_prob(model, "negative", policy)
    v_pos = decision.success_prob(model, "positive", policy)
    q_root = decision.action_success_probs(model, "root", policy)
    root = policy.dist("root")
    checks = [
        ("wait-at-negative", wait_neg, 0.768),
        ("wait-at-positive", wait_pos, 0.178),
        ("negative-branch-success", v_neg, 0.763),
        ("positive-branch-success", v_pos, 0.753),
        ("test-success-at-root", q_root["TEST"], 0.758),
        ("root-test", root["TEST"], 0.403),
        ("root-wait", root["WAIT"], 0.292),
        ("root-inject", root["INJECT"], 0.305),
    ]
    ok = all(_close(value, expected, 1e-3) for _, value, expected in checks)
    detail = " ".join(f"{name}={value:.4f}" for name, value, _ in checks)
    rows.append(CheckResult("C8", "exact-policy-values", ok, detail))
    argmax = decision.solve_policy(model, k="argmax")
    argmax_ok = (
        argmax.dist("root")["TEST"] == 1.0
        and argmax.dist("positive")["INJECT"] == 1.0
        and argmax.dist("negative")["WAIT"] == 1.0
    )
    rows.append(
        CheckResult(
            "C8", "argmax-policy",
            argmax_ok, "TEST at root, INJECT at positive, WAIT at negative",
        )
    )
    return rows


# ---------------------------------------------------------------------------
# 9. computable sampling


def check_computable_sampling(samples: int = 10**5) -> list[CheckResult]:
    rows: list[CheckResult] = []
    master = make_tape(SEEDS["sampling"])
    third = Fraction(1, 3)
    hits = 0
    bits = 0
    for i in range(samples):
        tape = split_tape(master, i)
        hits += csampling.bernoulli_from_real(third, tape)
        bits += tape.bits_consumed
    freq = hits / samples
    sigma = math.sqrt((1 / 3) * (2 / 3) / samples)
    rows.append(
        CheckResult(
            "C9", "bernoulli-third",
            abs(freq - 1 / 3) <= 3 * sigma,
            f"freq={freq:.5f} (1/3 +/- 3 sigma)",
        )
    )
    mean_bits = bits / samples
    rows.append(
        CheckResult(
            "C9", "bernoulli-third-bits",
            mean_bits < 6.0,
            f"mean bits={mean_bits:.3f} (< 6)",
        )
    )
    pmf = csampling.ComputablePmf([("a", Fraction(1, 4)), ("b", Fraction(3, 4))])
    master2 = make_tape(SEEDS["sampling"] + 1)
    count_a = sum(
        csampling.sample_countable(pmf, split_tape(master2, i)) == "a"
        for i in range(samples)
    )
    freq_a = count_a / samples
    sigma_a = math.sqrt(0.25 * 0.75 / samples)
    rows.append(
        CheckResult(
            "C9", "countable-atoms",
            abs(freq_a - 0.25) <= 3 * sigma_a,
            f"freq(a)={freq_a:.5f} (0.25 +/- 3 sigma)",
        )
    )
    accepted = csampling.interval_condition(
        uniform_pair_program(), 0.5, 0.1,
        QueryOptions(seed=SEEDS["sampling"] + 2, samples=10**4),
    )
    mean = sum(accepted) / len(accepted)
    in_support = min(accepted) > 0.4 and max(accepted) < 0.6
    rows.append(
        CheckResult(
            "C9", "interval-conditioning",
            _close(mean, 0.5, 0.003) and in_support,
            f"mean={mean:.5f} support=({min(accepted):.4f},{max(accepted):.4f})",
        )
    )
    return rows


# ---------------------------------------------------------------------------


CHECKS = [
    ("C1 uniform conditioning", check_uniform_conditioning),
    ("C2 diagnosis goldens", check_diagnosis_goldens),
    ("C3 conjugacy", check_conjugacy),
    ("C4 structure score", check_structure_score),
    ("C5 weight of evidence", check_weight_of_evidence),
    ("C6 d-separation", check_d_separation),
    ("C7 choice rules", check_choice_rules),
    ("C8 sequential policy", check_sequential_policy),
    ("C9 computable sampling", check_computable_sampling),
]


def run_all() -> list[CheckResult]:
    results: list[CheckResult] = []
    for _, fn in CHECKS:
        results.extend(fn())
    return results


def format_report(results: list[CheckResult]) -> str:
    lines = [r.line() for r in results]
    failed = sum(not r.ok for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"
