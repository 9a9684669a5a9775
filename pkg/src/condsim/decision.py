"""Choosing actions by simulating their consequences.

Single decisions: propose an action uniformly at random and accept it
only if simulations of its outcome succeed.  Requiring one success per
proposal weights action z by its success probability q_z; requiring k
independent successes weights it by q_z**k, so k sharpens the choice
toward the best action (an exponentiated Luce rule).  Two predicates
are provided: the multiplicative rule (k plain successes, sensitive to
the ratio q_x/q_y) and the additive majority rule (sensitive to the
difference q_x - q_y).

Sequential decisions: a finite belief-state graph with per-action
stochastic transitions and success/failure terminals.  The
self-referential policy -- act at b by simulating the policy itself
from the successor -- is computed exactly by backward induction, which
yields the same distribution because each state's choice depends only
on strictly-later states.  A rejection-sampling path is kept as a
cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .bits import bernoulli_threshold, blocks_np, lemire_np
from .engine import QueryOptions, query, query_samples, repeat_predicate
from .errors import AllActionsFail, CyclicBeliefGraph, HorizonExceeded
from .tape import BatchRun, GenerativeProgram, Predicate, Tape, split_tape

_PROB_TOL = 1e-12


@dataclass(frozen=True)
class ActionSimulator:
    """A per-action success simulator: tape -> accept/reject.

    ``exact_p``, when known, enables closed-form oracles and the
    vectorised sampling path.
    """

    name: str
    sample: Callable[[Tape], bool]
    exact_p: float | None = None

    def __post_init__(self):
        if self.exact_p is not None and not 0.0 <= self.exact_p <= 1.0:
            raise ValueError("exact_p out of [0, 1]")


def bernoulli_simulator(name: str, p: float) -> ActionSimulator:
    """Success simulator that flips one Bernoulli(p) block."""
    return ActionSimulator(
        name=name, sample=lambda tape: bool(tape.bernoulli(p)), exact_p=p
    )


def _uniform_action_program(n_actions: int) -> GenerativeProgram:
    def sampler(tape: Tape):
        return {"action": tape.randint(n_actions)}

    def batch(seeds):
        seeds = np.asarray(seeds, dtype=np.uint64)
        values, ok = lemire_np(blocks_np(seeds, np.uint64(0)), n_actions)
        if not ok.all():  # pragma: no cover - probability ~ n / 2**64
            from .tape import RandomTape

            for i in np.nonzero(~ok)[0]:
                values[i] = RandomTape(int(seeds[i])).randint(n_actions)
        return BatchRun(
            {"action": values},
            lambda indices: [{"action": int(values[i])} for i in indices],
        )

    return GenerativeProgram(sampler, name=f"uniform-action({n_actions})", batch=batch)


def _success_predicate(sims: Sequence[ActionSimulator]) -> Predicate:
    """Accept iff one simulation of the chosen action succeeds."""
    thresholds = (
        np.array([bernoulli_threshold(s.exact_p) for s in sims], dtype=np.uint64)
        if all(s.exact_p is not None for s in sims)
        else None
    )

    def test(outcome, tape):
        return bool(sims[outcome["action"]].sample(tape))

    batch = None
    if thresholds is not None:

        def batch(columns, seeds):
            seeds = np.asarray(seeds, dtype=np.uint64)
            blocks = blocks_np(seeds, np.uint64(0))
            return (blocks >> np.uint64(11)) < thresholds[columns["action"]]

    return Predicate(test, name="simulate-success", batch=batch)


def _majority_predicate(sims: Sequence[ActionSimulator]) -> Predicate:
    """Accept on own-success & other-failure, reject on the reverse,
    otherwise flip a fair coin.  Defined for two actions."""
    if len(sims) != 2:
        raise ValueError("the majority rule compares exactly two actions")
    thresholds = (
        np.array([bernoulli_threshold(s.exact_p) for s in sims], dtype=np.uint64)
        if all(s.exact_p is not None for s in sims)
        else None
    )
    half = bernoulli_threshold(0.5)

    def test(outcome, tape):
        z = outcome["action"]
        own = bool(sims[z].sample(split_tape(tape, 0)))
        other = bool(sims[1 - z].sample(split_tape(tape, 1)))
        if own and not other:
            return True
        if other and not own:
            return False
        return bool(split_tape(tape, 2).bernoulli(0.5))

    batch = None
    if thresholds is not None:

        def batch(columns, seeds):
            from .bits import split_seed_np

            seeds = np.asarray(seeds, dtype=np.uint64)
            action = columns["action"]
            s11 = np.uint64(11)
            own_u = blocks_np(split_seed_np(seeds, np.uint64(0)), np.uint64(0)) >> s11
            oth_u = blocks_np(split_seed_np(seeds, np.uint64(1)), np.uint64(0)) >> s11
            coin_u = blocks_np(split_seed_np(seeds, np.uint64(2)), np.uint64(0)) >> s11
            own = own_u < thresholds[action]
            other = oth_u < thresholds[1 - action]
            coin = coin_u < np.uint64(half)
            return np.where(own ^ other, own, coin)

    return Predicate(test, name="majority", batch=batch)


def _choose(
    sims: Sequence[ActionSimulator],
    k: int,
    opts: QueryOptions,
    inner: Predicate,
) -> Any:
    program = _uniform_action_program(len(sims))
    predicate = repeat_predicate(k, inner)
    outcome = query(program, predicate, opts)
    return sims[outcome["action"]].name


def choose_multiplicative(
    sims: Sequence[ActionSimulator], k: int, opts: QueryOptions
) -> str:
    """Choose an action, requiring k successful simulations of it.

    With success probabilities (p_x, p_y) the first action is chosen
    with probability rho**k / (rho**k + 1) where rho = p_x / p_y.
    """
    return _choose(sims, k, opts, _success_predicate(sims))


def choose_additive(
    sims: Sequence[ActionSimulator], k: int, opts: QueryOptions
) -> str:
    """Choose between two actions by k amplified majority comparisons.

    The first action is chosen with probability
    1 / (1 + ((1 - a)/(1 + a))**k) where a = p_x - p_y.
    """
    return _choose(sims, k, opts, _majority_predicate(sims))


def choice_frequencies(
    sims: Sequence[ActionSimulator],
    k: int,
    opts: QueryOptions,
    *,
    rule: str = "multiplicative",
) -> dict[str, float]:
    """Empirical choice frequencies over ``opts.samples`` trials."""
    inner = (
        _success_predicate(sims)
        if rule == "multiplicative"
        else _majority_predicate(sims)
    )
    program = _uniform_action_program(len(sims))
    result = query_samples(program, repeat_predicate(k, inner), opts)
    freqs = {s.name: 0.0 for s in sims}
    for outcome in result.outcomes:
        freqs[sims[outcome["action"]].name] += 1.0
    return {name: count / opts.samples for name, count in freqs.items()}


def multiplicative_choice_probability(p_x: float, p_y: float, k: int) -> float:
    """Closed form rho**k / (rho**k + 1), rho = p_x / p_y."""
    if p_x == 0.0 and p_y == 0.0:
        raise AllActionsFail("both success probabilities are zero")
    if p_y == 0.0:
        return 1.0
    rho_k = (p_x / p_y) ** k
    return rho_k / (rho_k + 1.0)


def additive_choice_probability(p_x: float, p_y: float, k: int) -> float:
    """Closed form 1 / (1 + ((1-a)/(1+a))**k), a = p_x - p_y."""
    alpha = p_x - p_y
    if alpha == 1.0:
        return 1.0
    return 1.0 / (1.0 + ((1.0 - alpha) / (1.0 + alpha)) ** k)


# ---------------------------------------------------------------------------
# Sequential decisions over a finite belief-state graph


@dataclass(frozen=True)
class BeliefStateModel:
    """Finite rooted belief-state graph with stochastic action edges.

    ``transitions[(state, action)]`` lists ``(successor, probability)``
    pairs summing to one.  Terminal states carry a success flag and no
    actions.  ``horizon`` bounds the length of any rollout.
    """

    states: tuple[str, ...]
    root: str
    actions: Mapping[str, tuple[str, ...]]
    transitions: Mapping[tuple[str, str], tuple[tuple[str, float], ...]]
    terminal: Mapping[str, bool]
    horizon: int

    def __post_init__(self):
        names = set(self.states)
        if self.root not in names:
            raise ValueError(f"unknown root state {self.root!r}")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        for state in self.states:
            if state in self.terminal:
                if self.actions.get(state):
                    raise ValueError(f"terminal state {state!r} has actions")
                continue
            acts = self.actions.get(state, ())
            if not acts:
                raise ValueError(f"non-terminal state {state!r} has no actions")
            for action in acts:
                dist = self.transitions.get((state, action))
                if not dist:
                    raise ValueError(f"missing transitions for {state!r}/{action!r}")
                total = 0.0
                for succ, p in dist:
                    if succ not in names:
                        raise ValueError(f"unknown successor {succ!r}")
                    if p < 0:
                        raise ValueError("negative transition probability")
                    total += p
                if abs(total - 1.0) > _PROB_TOL:
                    raise ValueError(
                        f"transitions of {state!r}/{action!r} sum to {total!r}"
                    )
        self._check_success_reachable()

    def _check_success_reachable(self) -> None:
        reaches = {s for s, ok in self.terminal.items() if ok}
        changed = True
        while changed:
            changed = False
            for state in self.states:
                if state in reaches or state in self.terminal:
                    continue
                for action in self.actions.get(state, ()):
                    if any(s in reaches for s, p in self.transitions[(state, action)]
                           if p > 0):
                        reaches.add(state)
                        changed = True
                        break
        missing = [s for s in self.states if s not in reaches and s not in self.terminal]
        if missing:
            raise ValueError(
                f"states with no path to success under any policy: {missing}"
            )

    def is_terminal(self, state: str) -> bool:
        return state in self.terminal

    def successors(self, state: str) -> set[str]:
        out: set[str] = set()
        for action in self.actions.get(state, ()):
            out.update(s for s, _ in self.transitions[(state, action)])
        return out


@dataclass(frozen=True)
class StochasticPolicy:
    """Per-state distribution over available actions."""

    weights: Mapping[str, Mapping[str, float]]

    def __post_init__(self):
        for state, dist in self.weights.items():
            total = sum(dist.values())
            if abs(total - 1.0) > _PROB_TOL:
                raise ValueError(f"policy at {state!r} sums to {total!r}")
            if any(p < 0 for p in dist.values()):
                raise ValueError(f"negative action probability at {state!r}")

    def dist(self, state: str) -> Mapping[str, float]:
        return self.weights[state]


def deterministic_policy(model: BeliefStateModel, choice: Mapping[str, str]) -> StochasticPolicy:
    """Point-mass policy from a state -> action map."""
    return StochasticPolicy(
        {state: {action: 1.0} for state, action in choice.items()}
    )


def _draw_categorical(tape: Tape, items: Sequence[tuple[Any, float]]) -> Any:
    u = tape.uniform53()
    acc = 0.0
    for value, p in items:
        acc += p
        if u < acc:
            return value
    return items[-1][0]


def outcome(
    model: BeliefStateModel, state: str, policy: StochasticPolicy, tape: Tape
) -> bool:
    """Simulate one rollout of the policy; True on a success terminal."""
    current = state
    for _ in range(model.horizon + 1):
        if model.is_terminal(current):
            return bool(model.terminal[current])
        action = _draw_categorical(tape, list(policy.dist(current).items()))
        current = _draw_categorical(tape, list(model.transitions[(current, action)]))
    raise HorizonExceeded(
        f"rollout from {state!r} exceeded the horizon bound {model.horizon}"
    )


def success_prob(
    model: BeliefStateModel, state: str, policy: StochasticPolicy
) -> float:
    """Exact success probability of following the policy from a state."""
    memo: dict[str, float] = {}
    on_stack: set[str] = set()

    def value(s: str) -> float:
        if model.is_terminal(s):
            return 1.0 if model.terminal[s] else 0.0
        if s in memo:
            return memo[s]
        if s in on_stack:
            raise CyclicBeliefGraph(f"cycle through belief state {s!r}")
        on_stack.add(s)
        total = 0.0
        for action, w in policy.dist(s).items():
            if w == 0.0:
                continue
            total += w * sum(
                p * value(succ) for succ, p in model.transitions[(s, action)]
            )
        on_stack.discard(s)
        memo[s] = total
        return total

    return value(state)


def action_success_probs(
    model: BeliefStateModel, state: str, policy: StochasticPolicy
) -> dict[str, float]:
    """q_z: success probability of action z at the state, then the policy."""
    if model.is_terminal(state):
        raise ValueError(f"state {state!r} is terminal")
    return {
        action: sum(
            p * success_prob(model, succ, policy)
            for succ, p in model.transitions[(state, action)]
        )
        for action in model.actions[state]
    }


def act(
    model: BeliefStateModel,
    state: str,
    policy: StochasticPolicy,
    k: int | str = 1,
) -> dict[str, float]:
    """Distribution over actions with weight q_z**k (or the argmax limit).

    ``k="argmax"`` selects the exact maximiser, ties broken uniformly.
    """
    q = action_success_probs(model, state, policy)
    if all(v == 0.0 for v in q.values()):
        raise AllActionsFail(f"every action fails at {state!r}")
    if k == "argmax":
        best = max(q.values())
        winners = [a for a, v in q.items() if v == best]
        return {a: (1.0 / len(winners) if a in winners else 0.0) for a in q}
    if not isinstance(k, int) or k < 0:
        raise ValueError("k must be a nonnegative integer or 'argmax'")
    top = max(q.values())
    powered = {a: (v / top) ** k for a, v in q.items()}
    total = sum(powered.values())
    return {a: w / total for a, w in powered.items()}


def act_sampled(
    model: BeliefStateModel,
    state: str,
    policy: StochasticPolicy,
    k: int,
    opts: QueryOptions,
) -> dict[str, float]:
    """Rejection-sampling cross-check of :func:`act`.

    Proposes actions uniformly and accepts one when k simulated
    rollouts through it all succeed.
    """
    actions = list(model.actions[state])
    program = _uniform_action_program(len(actions))

    def test(out, tape):
        action = actions[out["action"]]
        succ = _draw_categorical(tape, list(model.transitions[(state, action)]))
        return outcome(model, succ, policy, tape)

    result = query_samples(
        program, repeat_predicate(k, Predicate(test, name="rollout")), opts,
        force_scalar=True,
    )
    freqs = {a: 0.0 for a in actions}
    for out in result.outcomes:
        freqs[actions[out["action"]]] += 1.0
    return {a: c / opts.samples for a, c in freqs.items()}


def solve_policy(model: BeliefStateModel, k: int | str = 1) -> StochasticPolicy:
    """The self-consistent policy: at every state, act with weight q**k.

    Computed by backward induction in reverse topological order of the
    belief graph (each state's action distribution depends only on
    successor values), which realises the self-referential definition
    exactly.  Raises :class:`CyclicBeliefGraph` on a cyclic graph.
    """
    order: list[str] = []
    temp: set[str] = set()
    done: set[str] = set()

    def visit(s: str) -> None:
        if s in done:
            return
        if s in temp:
            raise CyclicBeliefGraph(f"cycle through belief state {s!r}")
        temp.add(s)
        for succ in sorted(model.successors(s)):
            visit(succ)
        temp.discard(s)
        done.add(s)
        order.append(s)

    for s in model.states:
        visit(s)

    value: dict[str, float] = {}
    weights: dict[str, dict[str, float]] = {}
    for s in order:  # successors appear before their predecessors
        if model.is_terminal(s):
            value[s] = 1.0 if model.terminal[s] else 0.0
            continue
        q = {
            action: sum(p * value[succ] for succ, p in model.transitions[(s, action)])
            for action in model.actions[s]
        }
        if all(v == 0.0 for v in q.values()):
            raise AllActionsFail(f"every action fails at {s!r}")
        if k == "argmax":
            best = max(q.values())
            winners = [a for a, v in q.items() if v == best]
            dist = {a: (1.0 / len(winners) if a in winners else 0.0) for a in q}
        else:
            if not isinstance(k, int) or k < 0:
                raise ValueError("k must be a nonnegative integer or 'argmax'")
            top = max(q.values())
            powered = {a: (v / top) ** k for a, v in q.items()}
            total = sum(powered.values())
            dist = {a: w / total for a, w in powered.items()}
        weights[s] = dist
        value[s] = sum(dist[a] * q[a] for a in dist)
    return StochasticPolicy(weights)
