"""Line-oriented model and data file formats.

Diagnosis models::

    [diseases]
    1 Arthritis 0.06          # index, name, marginal probability
    [symptoms]
    1 Fever 0.06              # index, name, leak probability
    [causes]
    1 1 0.1                   # disease index, symptom index, probability

Belief-state models::

    [states]
    root                      # first state listed is the root
    [terminals]
    dead failure
    alive success
    [edges]
    root WAIT dead 0.45 alive 0.55

Boolean datasets are one space-separated 0/1 row per line.  ``#`` starts
a comment anywhere; decimal probabilities are parsed exactly as written
(as rationals) for diagnosis models.
"""

from __future__ import annotations

import csv
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .decision import BeliefStateModel
from .diagnosis import DiagnosisParams
from .errors import ModelFileError
from .structure import CurvePoint


def _logical_lines(text: str) -> list[tuple[int, str]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((lineno, line))
    return out


def _parse_fraction(token: str, lineno: int) -> Fraction:
    try:
        value = Fraction(token)
    except (ValueError, ZeroDivisionError) as exc:
        raise ModelFileError(f"line {lineno}: bad probability {token!r}") from exc
    if not 0 <= value <= 1:
        raise ModelFileError(f"line {lineno}: probability {token} out of [0, 1]")
    return value


def parse_diagnosis_model(text: str) -> DiagnosisParams:
    sections: dict[str, list[tuple[int, list[str]]]] = {
        "diseases": [],
        "symptoms": [],
        "causes": [],
    }
    current: str | None = None
    for lineno, line in _logical_lines(text):
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if name not in sections:
                raise ModelFileError(f"line {lineno}: unknown section [{name}]")
            current = name
            continue
        if current is None:
            raise ModelFileError(f"line {lineno}: content before any section")
        sections[current].append((lineno, line.split()))

    def parse_indexed(rows, what):
        parsed = {}
        for lineno, tokens in rows:
            if len(tokens) < 3:
                raise ModelFileError(f"line {lineno}: need index, name, probability")
            try:
                idx = int(tokens[0])
            except ValueError as exc:
                raise ModelFileError(f"line {lineno}: bad index {tokens[0]!r}") from exc
            name = " ".join(tokens[1:-1])
            prob = _parse_fraction(tokens[-1], lineno)
            if idx in parsed:
                raise ModelFileError(f"line {lineno}: duplicate {what} index {idx}")
            parsed[idx] = (name, prob)
        if sorted(parsed) != list(range(1, len(parsed) + 1)):
            raise ModelFileError(f"{what} indices must be 1..{len(parsed)}")
        return [parsed[i] for i in range(1, len(parsed) + 1)]

    diseases = parse_indexed(sections["diseases"], "disease")
    symptoms = parse_indexed(sections["symptoms"], "symptom")
    if not diseases or not symptoms:
        raise ModelFileError("model needs at least one disease and one symptom")

    causes = [[None] * len(symptoms) for _ in diseases]
    for lineno, tokens in sections["causes"]:
        if len(tokens) != 3:
            raise ModelFileError(
                f"line {lineno}: cause rows are 'disease symptom probability'"
            )
        try:
            n, m = int(tokens[0]), int(tokens[1])
        except ValueError as exc:
            raise ModelFileError(f"line {lineno}: bad cause indices") from exc
        if not (1 <= n <= len(diseases) and 1 <= m <= len(symptoms)):
            raise ModelFileError(f"line {lineno}: cause indices out of range")
        if causes[n - 1][m - 1] is not None:
            raise ModelFileError(f"line {lineno}: duplicate cause entry ({n},{m})")
        causes[n - 1][m - 1] = _parse_fraction(tokens[2], lineno)
    for n, row in enumerate(causes):
        for m, value in enumerate(row):
            if value is None:
                raise ModelFileError(f"missing cause entry ({n + 1},{m + 1})")

    try:
        return DiagnosisParams.from_tables(diseases, symptoms, causes)
    except ValueError as exc:
        raise ModelFileError(str(exc)) from exc


def format_diagnosis_model(params: DiagnosisParams) -> str:
    lines = ["[diseases]"]
    for i, (name, p) in enumerate(zip(params.disease_names, params.disease_probs), 1):
        lines.append(f"{i} {name} {_format_prob(p)}")
    lines.append("[symptoms]")
    for m, (name, p) in enumerate(zip(params.symptom_names, params.leak_probs), 1):
        lines.append(f"{m} {name} {_format_prob(p)}")
    lines.append("[causes]")
    for n, row in enumerate(params.cause_probs, 1):
        for m, p in enumerate(row, 1):
            lines.append(f"{n} {m} {_format_prob(p)}")
    return "\n".join(lines) + "\n"


def _format_prob(p: Fraction) -> str:
    f = float(p)
    for digits in range(1, 17):
        text = f"{f:.{digits}f}"
        if Fraction(text) == p:
            return text
    return str(p)


def parse_belief_model(text: str, *, default_horizon: int | None = None) -> BeliefStateModel:
    states: list[str] = []
    terminal: dict[str, bool] = {}
    actions: dict[str, list[str]] = {}
    transitions: dict[tuple[str, str], tuple[tuple[str, float], ...]] = {}
    horizon: int | None = None
    current: str | None = None
    for lineno, line in _logical_lines(text):
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            if current not in ("states", "terminals", "edges", "horizon"):
                raise ModelFileError(f"line {lineno}: unknown section [{current}]")
            continue
        tokens = line.split()
        if current == "states":
            if len(tokens) != 1:
                raise ModelFileError(f"line {lineno}: one state name per line")
            if tokens[0] in states:
                raise ModelFileError(f"line {lineno}: duplicate state {tokens[0]!r}")
            states.append(tokens[0])
        elif current == "terminals":
            if len(tokens) != 2 or tokens[1] not in ("success", "failure"):
                raise ModelFileError(
                    f"line {lineno}: terminal rows are 'state success|failure'"
                )
            terminal[tokens[0]] = tokens[1] == "success"
        elif current == "edges":
            if len(tokens) < 4 or len(tokens) % 2 != 0:
                raise ModelFileError(
                    f"line {lineno}: edge rows are 'state action (successor prob)+'"
                )
            state, action = tokens[0], tokens[1]
            pairs = []
            for i in range(2, len(tokens), 2):
                succ = tokens[i]
                try:
                    p = float(Fraction(tokens[i + 1]))
                except (ValueError, ZeroDivisionError) as exc:
                    raise ModelFileError(
                        f"line {lineno}: bad probability {tokens[i + 1]!r}"
                    ) from exc
                pairs.append((succ, p))
            if (state, action) in transitions:
                raise ModelFileError(f"line {lineno}: duplicate edge {state}/{action}")
            actions.setdefault(state, []).append(action)
            transitions[(state, action)] = tuple(pairs)
        elif current == "horizon":
            if len(tokens) != 1:
                raise ModelFileError(f"line {lineno}: horizon is a single integer")
            horizon = int(tokens[0])
        else:
            raise ModelFileError(f"line {lineno}: content before any section")
    if not states:
        raise ModelFileError("belief model lists no states")
    if horizon is None:
        horizon = default_horizon if default_horizon is not None else len(states)
    try:
        return BeliefStateModel(
            states=tuple(states),
            root=states[0],
            actions={s: tuple(a) for s, a in actions.items()},
            transitions=transitions,
            terminal=terminal,
            horizon=horizon,
        )
    except ValueError as exc:
        raise ModelFileError(str(exc)) from exc


def parse_bool_rows(text: str) -> list[tuple[int, ...]]:
    """Boolean dataset: one space-separated 0/1 row per line."""
    rows: list[tuple[int, ...]] = []
    width: int | None = None
    for lineno, line in _logical_lines(text):
        values = []
        for token in line.split():
            if token not in ("0", "1"):
                raise ModelFileError(f"line {lineno}: entries must be 0 or 1")
            values.append(int(token))
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ModelFileError(f"line {lineno}: ragged row")
        rows.append(tuple(values))
    return rows


def load_diagnosis_model(path: str | Path) -> DiagnosisParams:
    return parse_diagnosis_model(Path(path).read_text())


def load_belief_model(path: str | Path) -> BeliefStateModel:
    return parse_belief_model(Path(path).read_text())


def load_bool_rows(path: str | Path) -> list[tuple[int, ...]]:
    return parse_bool_rows(Path(path).read_text())


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Deterministic CSV: comma-separated, '.' decimal point, LF endings."""
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(cell) for cell in row])


def _format_cell(cell) -> str:
    if isinstance(cell, float):
        return repr(cell)
    return str(cell)


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise ModelFileError(f"{path}: empty CSV")
    return rows[0], rows[1:]


def write_curve_csv(path: str | Path, points: Sequence[CurvePoint]) -> None:
    write_csv(
        path,
        ["n", "mean_log_ratio", "stderr"],
        [(p.n, p.mean_log_ratio, p.stderr) for p in points],
    )
