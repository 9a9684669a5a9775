"""Command-line surface: diagnose, structure, decide, verify.

All subcommands are deterministic given their inputs and ``--seed``;
no environment variables are consulted and no timing information is
printed, so repeated runs produce byte-identical output.
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from . import decision, diagnosis, modelio, structure, verify
from .engine import QueryOptions, query_samples
from .errors import CondsimError


def _bundled(name: str) -> str:
    return resources.files("condsim.data").joinpath(name).read_text()


def _load_diagnosis(path: str | None) -> diagnosis.DiagnosisParams:
    if path is None or path == "builtin":
        return modelio.parse_diagnosis_model(_bundled("disease_symptom.model"))
    return modelio.load_diagnosis_model(path)


def _load_belief(path: str | None) -> decision.BeliefStateModel:
    if path is None or path == "builtin":
        return modelio.parse_belief_model(_bundled("injection_scenario.model"))
    return modelio.load_belief_model(path)


def _variable_index(params: diagnosis.DiagnosisParams, token: str) -> tuple[str, int]:
    """Resolve 'D6', 'S1' or a disease/symptom name to (kind, index)."""
    lowered = token.lower()
    for i, name in enumerate(params.disease_names):
        if lowered == name.lower():
            return "d", i
    for m, name in enumerate(params.symptom_names):
        if lowered == name.lower():
            return "s", m
    kind = lowered[0]
    if kind in ("d", "s") and lowered[1:].isdigit():
        idx = int(lowered[1:]) - 1
        bound = params.n_diseases if kind == "d" else params.n_symptoms
        if 0 <= idx < bound:
            return kind, idx
    raise CondsimError(f"unknown variable {token!r}")


def parse_evidence(
    params: diagnosis.DiagnosisParams, text: str
) -> diagnosis.DiagnosisEvidence:
    """Parse 'S1=1 S7=1 D8=0' (names allowed, e.g. 'Influenza=1')."""
    diseases: dict[int, int] = {}
    symptoms: dict[int, int] = {}
    for token in text.replace(",", " ").split():
        if "=" not in token:
            raise CondsimError(f"evidence term {token!r} is not VAR=0/1")
        var, _, value = token.partition("=")
        if value not in ("0", "1"):
            raise CondsimError(f"evidence value in {token!r} must be 0 or 1")
        kind, idx = _variable_index(params, var)
        target = diseases if kind == "d" else symptoms
        if idx in target:
            raise CondsimError(f"variable {var!r} observed twice")
        target[idx] = int(value)
    if not diseases and not symptoms:
        raise CondsimError("evidence observes no variables")
    return diagnosis.DiagnosisEvidence(diseases=diseases, symptoms=symptoms)


def parse_disease_event(
    params: diagnosis.DiagnosisParams, text: str
) -> dict[int, int]:
    """Parse a disease event: 'D6=1 rest=0', 'none', or explicit terms."""
    constraints: dict[int, int] = {}
    mentioned: set[int] = set()
    rest: int | None = None
    for token in text.replace(",", " ").split():
        if token.lower() == "none":
            rest = 0
            continue
        if "=" not in token:
            raise CondsimError(f"event term {token!r} is not VAR=0/1 or rest=0")
        var, _, value = token.partition("=")
        if var.lower() == "rest":
            rest = int(value)
            continue
        kind, idx = _variable_index(params, var)
        if kind != "d":
            raise CondsimError("odds events may constrain diseases only")
        constraints[idx] = int(value)
        mentioned.add(idx)
    if rest is not None:
        for i in range(params.n_diseases):
            if i not in mentioned:
                constraints[i] = rest
    if not constraints:
        raise CondsimError(f"event {text!r} constrains nothing")
    return constraints


def cmd_diagnose(args) -> int:
    params = _load_diagnosis(args.model)
    evidence = parse_evidence(params, args.evidence)
    out = []
    if args.mode == "exact":
        posterior = diagnosis.exact_posterior(params, evidence)
        marginals = [
            posterior.expectation(lambda d, n=n: d[n])
            for n in range(params.n_diseases)
        ]
    else:
        opts = QueryOptions(seed=args.seed, samples=args.samples)
        result = query_samples(
            diagnosis.ds_program(params),
            diagnosis.evidence_predicate(evidence),
            opts,
        )
        marginals = [
            sum(s.d[n] for s in result.outcomes) / args.samples
            for n in range(params.n_diseases)
        ]
        posterior = None
    out.append(f"posterior disease marginals ({args.mode}) given [{args.evidence}]")
    for n, name in enumerate(params.disease_names):
        out.append(f"  {name:<14} {marginals[n]:.6f}")
    for spec in args.odds or []:
        if ":" not in spec:
            raise CondsimError(f"odds spec {spec!r} is not 'EVENT : EVENT'")
        left, right = (part.strip() for part in spec.split(":", 1))
        if posterior is None:
            posterior = diagnosis.exact_posterior(params, evidence)
        value = diagnosis.posterior_event_odds(
            posterior,
            parse_disease_event(params, left),
            parse_disease_event(params, right),
        )
        out.append(f"odds [{left}] : [{right}] = {value:.6f}")
    text = "\n".join(out) + "\n"
    _emit(text, args.out)
    return 0


def cmd_structure(args) -> int:
    if args.mode == "score":
        if not args.data:
            raise CondsimError("--mode score needs --data FILE")
        rows = modelio.load_bool_rows(Path(args.data))
        if not rows:
            width = args.vertices or 2
        else:
            width = len(rows[0])
        graphs = structure.enumerate_dags(width)
        table = [
            ("|".join(f"{u}->{v}" for u, v in sorted(g.edges)) or "empty",
             structure.log_score(g, rows))
            for g in graphs
        ]
        table.sort(key=lambda item: -item[1])
        if args.out:
            modelio.write_csv(args.out, ["graph", "log_score"], table)
        lines = [f"{score:+.6f}  {edges}" for edges, score in table]
        _emit("\n".join(lines) + "\n", None)
        return 0
    if args.mode == "evidence-curve":
        points = structure.weight_of_evidence_experiment(
            d=args.d,
            n_max=args.n_max,
            trials=args.trials,
            independent=args.independent,
            seed=args.seed,
        )
        if args.out:
            modelio.write_curve_csv(args.out, points)
        lines = [
            f"n={p.n} mean_log_ratio={p.mean_log_ratio:.6f} stderr={p.stderr:.6f}"
            for p in points
        ]
        _emit("\n".join(lines) + "\n", None)
        return 0
    raise CondsimError(f"unknown structure mode {args.mode!r}")


def cmd_decide(args) -> int:
    model = _load_belief(args.model)
    k: int | str = "argmax" if args.k == "argmax" else int(args.k)
    out = []
    if args.mode == "exact":
        policy = decision.solve_policy(model, k=k)
        for state in model.states:
            if model.is_terminal(state):
                continue
            dist = policy.dist(state)
            value = decision.success_prob(model, state, policy)
            actions = " ".join(f"{a}={dist[a]:.6f}" for a in model.actions[state])
            out.append(f"{state}: {actions} success={value:.6f}")
    else:
        if k == "argmax":
            raise CondsimError("sample mode needs an integer k")
        policy = decision.solve_policy(model, k=k)
        for state in model.states:
            if model.is_terminal(state):
                continue
            freqs = decision.act_sampled(
                model, state, policy, k,
                QueryOptions(seed=args.seed, samples=args.samples),
            )
            actions = " ".join(f"{a}={freqs[a]:.6f}" for a in model.actions[state])
            out.append(f"{state}: {actions} (sampled)")
    text = "\n".join(out) + "\n"
    _emit(text, args.out)
    return 0


def cmd_verify(args) -> int:
    results = verify.run_all()
    report = verify.format_report(results)
    _emit(report, args.out)
    return 0 if all(r.ok for r in results) else 1


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="condsim",
        description="Conditional simulation engine with exact oracles",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("diagnose", help="posterior marginals and odds")
    p.add_argument("--model", default=None, help="model file (default: bundled)")
    p.add_argument("--evidence", required=True, help="e.g. 'S1=1 S7=1'")
    p.add_argument("--odds", action="append", help="'EVENT : EVENT', repeatable")
    p.add_argument("--mode", choices=("exact", "sample"), default="exact")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--samples", type=int, default=10**4)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_diagnose)

    p = sub.add_parser("structure", help="graph scores and evidence curves")
    p.add_argument("--mode", choices=("score", "evidence-curve"), required=True)
    p.add_argument("--data", default=None, help="boolean rows file")
    p.add_argument("--vertices", type=int, default=None)
    p.add_argument("--d", type=float, default=0.5, help="dependence strength")
    p.add_argument("--independent", action="store_true")
    p.add_argument("--n-max", type=int, default=2000)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_structure)

    p = sub.add_parser("decide", help="policy tables for a belief model")
    p.add_argument("--model", default=None, help="belief file (default: bundled)")
    p.add_argument("--k", default="1", help="amplification, or 'argmax'")
    p.add_argument("--mode", choices=("exact", "sample"), default="exact")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--samples", type=int, default=10**4)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_decide)

    p = sub.add_parser("verify", help="run every golden-number check")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CondsimError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
