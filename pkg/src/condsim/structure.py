"""Structure learning over small DAGs: scores, Bayes factors, d-separation.

A model here is a directed acyclic graph plus, per vertex, one Bernoulli
parameter for every assignment of its parents.  With all parameters
uniform on [0, 1], the marginal likelihood of a boolean dataset has the
closed form

    score(G) = prod_j prod_v  1 / ((n_jv + 1) * C(n_jv, k_jv))

where n_jv counts rows with parent pattern v at vertex j and k_jv those
among them with the vertex true.  Ratios of scores between graphs are
Bayes factors; their logs, weights of evidence, are what the
``weight_of_evidence_experiment`` accumulates over growing data.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import gammaln

from .bits import bernoulli_threshold, blocks_np, split_seed_np
from .csampling import ComputablePmf, sample_countable
from .engine import FiniteModel
from .errors import DimensionTooLarge, InconsistentCounts, WidthMismatch
from .tape import GenerativeProgram, Tape

MAX_ENUM_VERTICES = 5


@dataclass(frozen=True)
class Dag:
    """A labelled DAG on vertices 0..n-1 with edges (parent, child)."""

    n_vertices: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset(self.edges))
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ValueError(f"edge ({u}, {v}) out of range")
        self.topological_order()  # raises on a cycle

    def parents(self, v: int) -> tuple[int, ...]:
        return tuple(sorted(u for u, w in self.edges if w == v))

    def children(self, v: int) -> tuple[int, ...]:
        return tuple(sorted(w for u, w in self.edges if u == v))

    def topological_order(self) -> list[int]:
        indeg = {v: 0 for v in range(self.n_vertices)}
        for _, w in self.edges:
            indeg[w] += 1
        frontier = sorted(v for v, d in indeg.items() if d == 0)
        order: list[int] = []
        while frontier:
            v = frontier.pop(0)
            order.append(v)
            for w in self.children(v):
                indeg[w] -= 1
                if indeg[w] == 0:
                    frontier.append(w)
            frontier.sort()
        if len(order) != self.n_vertices:
            raise ValueError("graph has a directed cycle")
        return order

    def __repr__(self) -> str:  # pragma: no cover
        e = ",".join(f"{u}->{v}" for u, v in sorted(self.edges))
        return f"Dag({self.n_vertices}; {e})"


@lru_cache(maxsize=None)
def _enumerate_dags_cached(n: int) -> tuple[Dag, ...]:
    # Every DAG is an upper-triangular adjacency under some vertex order,
    # so sweeping (permutation, triangular mask) reaches each one at least
    # once; a set collapses the duplicates.
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    seen: set[frozenset[tuple[int, int]]] = set()
    for perm in itertools.permutations(range(n)):
        for mask in range(1 << len(pairs)):
            edges = frozenset(
                (perm[i], perm[j])
                for bit, (i, j) in enumerate(pairs)
                if mask >> bit & 1
            )
            seen.add(edges)
    return tuple(Dag(n, edges) for edges in sorted(seen, key=sorted))


def enumerate_dags(n_vertices: int) -> list[Dag]:
    """All DAGs on ``n_vertices`` labelled vertices (supported up to 5)."""
    if not 1 <= n_vertices <= MAX_ENUM_VERTICES:
        raise DimensionTooLarge(
            f"exact DAG enumeration supports 1..{MAX_ENUM_VERTICES} vertices"
        )
    return list(_enumerate_dags_cached(n_vertices))


def sample_uniform_dag(n_vertices: int, tape: Tape) -> Dag:
    """Exactly uniform draw over all DAGs, via the countable sampler."""
    dags = enumerate_dags(n_vertices)
    weight = Fraction(1, len(dags))
    pmf = ComputablePmf(
        [(i, weight) for i in range(len(dags))], name=f"uniform-dags({n_vertices})"
    )
    return dags[sample_countable(pmf, tape)]


# ---------------------------------------------------------------------------
# d-separation


def _ancestral_marks(g: Dag, conditioned: frozenset[int]) -> set[int]:
    """Vertices marked by the propagation pass: the conditioning set plus
    every vertex with a marked descendant (parents of marked vertices,
    to a fixed point)."""
    marked = set(conditioned)
    frontier = list(conditioned)
    while frontier:
        v = frontier.pop()
        for u in g.parents(v):
            if u not in marked:
                marked.add(u)
                frontier.append(u)
    return marked


def d_separated(g: Dag, x: int, y: int, conditioned: Iterable[int]) -> bool:
    """Whether every undirected x..y path shows a blocking pattern.

    A path is blocked at an inner vertex v when it passes through v as a
    chain or fork with v conditioned on, or meets head-to-head at an
    unmarked v (one that is neither conditioned on nor an ancestor of
    the conditioning set).  The search walks paths depth-first, pruning
    as soon as a prefix is blocked, and reports non-separation the
    moment one fully unblocked path reaches y.
    """
    cond = frozenset(conditioned)
    if x == y:
        raise ValueError("x and y must differ")
    if x in cond or y in cond:
        raise ValueError("endpoints may not be conditioned on")
    marked = _ancestral_marks(g, cond)

    parents = {v: set(g.parents(v)) for v in range(g.n_vertices)}
    children = {v: set(g.children(v)) for v in range(g.n_vertices)}

    # Stack entries: (vertex, arrived_via_incoming_edge, frozen visited set)
    stack: list[tuple[int, bool, frozenset[int]]] = []
    for w in children[x]:
        stack.append((w, True, frozenset((x,))))
    for w in parents[x]:
        stack.append((w, False, frozenset((x,))))
    while stack:
        v, via_incoming, visited = stack.pop()
        if v == y:
            return False
        if v in visited:
            continue
        visited = visited | {v}
        if via_incoming:
            can_chain = v not in cond       # -> v ->  blocked iff conditioned
            can_collide = v in marked       # -> v <-  blocked iff unmarked
        else:
            can_chain = v not in cond       # <- v <-  and  <- v ->
            can_collide = can_chain
        if can_chain:
            for w in children[v]:
                stack.append((w, True, visited))
        if can_collide:
            for w in parents[v]:
                stack.append((w, False, visited))
    return True


def d_separated_bruteforce(g: Dag, x: int, y: int, conditioned: Iterable[int]) -> bool:
    """Reference implementation: enumerate every simple undirected path
    and scan it for a blocking pattern.  Exponential; tests only."""
    cond = frozenset(conditioned)
    if x == y:
        raise ValueError("x and y must differ")
    if x in cond or y in cond:
        raise ValueError("endpoints may not be conditioned on")
    marked = _ancestral_marks(g, cond)
    neighbours = {
        v: [(w, "out") for w in g.children(v)] + [(w, "in") for w in g.parents(v)]
        for v in range(g.n_vertices)
    }

    def blocked(path: list[tuple[int, str]]) -> bool:
        # path entries: (vertex, direction of the edge *into* that vertex
        # as walked: "out" means prev->vertex, "in" means prev<-vertex)
        for i in range(1, len(path) - 1):
            v, arrive = path[i]
            depart = path[i + 1][1]
            if arrive == "out" and depart == "out" and v in cond:
                return True  # -> v ->
            if arrive == "in" and depart == "in" and v in cond:
                return True  # <- v <-
            if arrive == "in" and depart == "out" and v in cond:
                return True  # <- v ->
            if arrive == "out" and depart == "in" and v not in marked:
                return True  # -> v <-
        return False

    def walk(path, visited):
        v = path[-1][0]
        if v == y:
            if not blocked(path):
                raise _Connected
            return
        for w, direction in neighbours[v]:
            if w not in visited:
                walk(path + [(w, "out" if direction == "out" else "in")], visited | {w})

    class _Connected(Exception):
        pass

    try:
        walk([(x, "none")], {x})
    except _Connected:
        return False
    return True


# ---------------------------------------------------------------------------
# Conditional probability tables and exact joints


class Cpt:
    """Per-vertex Bernoulli tables: p(vertex = 1 | parent assignment)."""

    def __init__(self, g: Dag, tables: Mapping[int, Mapping[tuple[int, ...], float]]):
        self.dag = g
        self.tables = {v: dict(tables[v]) for v in range(g.n_vertices)}
        for v in range(g.n_vertices):
            expected = list(itertools.product((0, 1), repeat=len(g.parents(v))))
            if sorted(self.tables[v]) != sorted(expected):
                raise ValueError(f"table for vertex {v} must cover {len(expected)} "
                                 f"parent assignments")
            for assignment, p in self.tables[v].items():
                if not 0.0 <= float(p) <= 1.0:
                    raise ValueError(f"p({v}=1 | {assignment}) out of [0, 1]")

    def prob(self, v: int, value: int, parent_values: tuple[int, ...]):
        p = self.tables[v][parent_values]
        return p if value else 1 - p

    @classmethod
    def random(cls, g: Dag, tape: Tape) -> "Cpt":
        """Uniform [0, 1] parameter for every (vertex, parent assignment)."""
        tables = {}
        for v in range(g.n_vertices):
            arity = len(g.parents(v))
            tables[v] = {
                assignment: tape.uniform53()
                for assignment in itertools.product((0, 1), repeat=arity)
            }
        return cls(g, tables)


def joint_pmf(g: Dag, cpt: Cpt) -> FiniteModel:
    """Exact joint over assignments: the product of local conditionals."""
    entries = []
    for assignment in itertools.product((0, 1), repeat=g.n_vertices):
        w = 1.0
        for v in range(g.n_vertices):
            pa = tuple(assignment[u] for u in g.parents(v))
            w *= float(cpt.prob(v, assignment[v], pa))
        entries.append((assignment, w))
    return FiniteModel(entries)


def dag_program(g: Dag, cpt: Cpt) -> GenerativeProgram:
    """Ancestral sampler over the DAG (one Bernoulli block per vertex)."""
    order = g.topological_order()

    def sampler(tape: Tape):
        values: dict[int, int] = {}
        for v in order:
            pa = tuple(values[u] for u in g.parents(v))
            values[v] = tape.bernoulli(float(cpt.tables[v][pa]))
        return tuple(values[v] for v in range(g.n_vertices))

    return GenerativeProgram(sampler, name=f"ancestral[{g!r}]")


# ---------------------------------------------------------------------------
# Scores


@dataclass(frozen=True)
class SufficientStats:
    """Counts n_jv (parent pattern occurrences) and k_jv (vertex true)."""

    counts: Mapping[tuple[int, tuple[int, ...]], tuple[int, int]]
    n_rows: int

    def __post_init__(self):
        per_vertex: dict[int, int] = {}
        for (j, _), (n_jv, k_jv) in self.counts.items():
            if not 0 <= k_jv <= n_jv:
                raise InconsistentCounts(f"vertex {j}: k={k_jv} > n={n_jv}")
            per_vertex[j] = per_vertex.get(j, 0) + n_jv
        for j, total in per_vertex.items():
            if total != self.n_rows:
                raise InconsistentCounts(
                    f"vertex {j}: patterns cover {total} of {self.n_rows} rows"
                )


def count_stats(g: Dag, data: Sequence[Sequence[int]]) -> SufficientStats:
    """Exact sufficient statistics of a boolean dataset under a DAG."""
    counts: dict[tuple[int, tuple[int, ...]], list[int]] = {}
    parents = [g.parents(v) for v in range(g.n_vertices)]
    n_rows = 0
    for row in data:
        if len(row) != g.n_vertices:
            raise WidthMismatch(
                f"row width {len(row)} != {g.n_vertices} vertices"
            )
        n_rows += 1
        for j in range(g.n_vertices):
            v = tuple(row[u] for u in parents[j])
            cell = counts.setdefault((j, v), [0, 0])
            cell[0] += 1
            cell[1] += row[j]
    return SufficientStats(
        counts={key: (n, k) for key, (n, k) in counts.items()}, n_rows=n_rows
    )


def _log_binom(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def log_score(g: Dag, data: Sequence[Sequence[int]]) -> float:
    """Log marginal likelihood of the data under uniform parameter priors.

    score(G) = prod over (vertex, observed parent pattern) of
    1 / ((n + 1) * C(n, k)); empty data scores 1.
    """
    stats = count_stats(g, data)
    total = 0.0
    for (_, _), (n, k) in stats.counts.items():
        total -= math.log(n + 1) + _log_binom(n, k)
    return total


def bayes_factor_independent_vs_dependent(
    n: int, k: int, n1: int, k1: int, n0: int, k0: int
) -> float:
    """score(X independent of Y) / score(X -> Y) from pair counts.

    ``n`` rows total, ``k`` with Y=1; ``n1`` rows with X=1, ``k1`` of
    them with Y=1; ``n0``, ``k0`` likewise for X=0.  Computed exactly:

        (n1+1)(n0+1)/(n+1) * C(n1,k1) C(n0,k0) / C(n,k)
    """
    if n1 + n0 != n or k1 + k0 != k or not (0 <= k1 <= n1) or not (0 <= k0 <= n0):
        raise InconsistentCounts(
            f"counts are inconsistent: n={n},k={k},n1={n1},k1={k1},n0={n0},k0={k0}"
        )
    exact = (
        Fraction((n1 + 1) * (n0 + 1), n + 1)
        * Fraction(math.comb(n1, k1) * math.comb(n0, k0), math.comb(n, k))
    )
    return float(exact)


# ---------------------------------------------------------------------------
# Weight-of-evidence experiment


@dataclass(frozen=True)
class CurvePoint:
    n: int
    mean_log_ratio: float
    stderr: float


def dependent_pair_constant(d: float) -> float:
    """Asymptotic per-row weight of evidence against independence when the
    data are the dependent pair with effect ``d``:

        C = ((1+d) ln(1+d) + (1-d) ln(1-d)) / 2

    C -> 0 as d -> 0, C ~ 0.1308 at d = 1/2, and C -> ln 2 as d -> 1.
    """
    if not 0.0 < d <= 1.0:
        raise ValueError("d must lie in (0, 1]")
    low = 0.0 if d == 1.0 else (1.0 - d) * math.log1p(-d)
    return 0.5 * ((1.0 + d) * math.log1p(d) + low)


def weight_of_evidence_experiment(
    d: float,
    n_max: int,
    trials: int,
    independent: bool,
    seed: int,
    n_grid: Sequence[int] | None = None,
) -> list[CurvePoint]:
    """Mean running log Bayes factor (independence : dependence) vs n.

    Each trial draws ``n_max`` rows (X, Y): X is a fair bit and Y has
    P(Y=1 | X=1) = (1+d)/2 and P(Y=1 | X=0) = (1-d)/2 in the dependent
    case, or is an independent fair bit.  At every grid point the log
    Bayes factor of the independent graph over the dependent one is
    computed from the running counts; the curve is its mean and
    standard error over trials.  Positive values support independence.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if n_grid is None:
        step = max(1, n_max // 40)
        n_grid = list(range(step, n_max + 1, step))
    grid = np.asarray(sorted(set(n_grid)), dtype=np.int64)
    if grid[0] < 1 or grid[-1] > n_max:
        raise ValueError("n_grid must lie within 1..n_max")

    trial_seeds = split_seed_np(np.uint64(seed), np.arange(trials, dtype=np.uint64))
    half = bernoulli_threshold(0.5)
    thr_hi = bernoulli_threshold(0.5 if independent else (1.0 + d) / 2.0)
    thr_lo = bernoulli_threshold(0.5 if independent else (1.0 - d) / 2.0)
    shift = np.uint64(11)

    # Per trial, X draws occupy blocks 0..n_max-1 and Y draws the next n_max.
    x_pos = np.arange(n_max, dtype=np.uint64)
    y_pos = np.arange(n_max, 2 * n_max, dtype=np.uint64)
    x = (blocks_np(trial_seeds[:, None], x_pos[None, :]) >> shift) < np.uint64(half)
    y_raw = blocks_np(trial_seeds[:, None], y_pos[None, :]) >> shift
    y = np.where(x, y_raw < np.uint64(thr_hi), y_raw < np.uint64(thr_lo))

    cum_n1 = np.cumsum(x, axis=1)
    cum_k = np.cumsum(y, axis=1)
    cum_k1 = np.cumsum(x & y, axis=1)

    rows_n = np.arange(1, n_max + 1, dtype=np.float64)[None, :]
    n1 = cum_n1.astype(np.float64)
    k = cum_k.astype(np.float64)
    k1 = cum_k1.astype(np.float64)
    n0 = rows_n - n1
    k0 = k - k1

    def log_binom(nn, kk):
        return gammaln(nn + 1.0) - gammaln(kk + 1.0) - gammaln(nn - kk + 1.0)

    log_ratio = (
        np.log(n1 + 1.0)
        + np.log(n0 + 1.0)
        - np.log(rows_n + 1.0)
        + log_binom(n1, k1)
        + log_binom(n0, k0)
        - log_binom(rows_n, k)
    )

    at_grid = log_ratio[:, grid - 1]
    mean = at_grid.mean(axis=0)
    if trials > 1:
        stderr = at_grid.std(axis=0, ddof=1) / math.sqrt(trials)
    else:
        stderr = np.zeros_like(mean)
    return [
        CurvePoint(int(n), float(m), float(s))
        for n, m, s in zip(grid, mean, stderr)
    ]


def fit_linear_slope(points: Sequence[CurvePoint]) -> float:
    """Least-squares slope of mean log ratio against n."""
    xs = np.array([p.n for p in points], dtype=np.float64)
    ys = np.array([p.mean_log_ratio for p in points], dtype=np.float64)
    return float(np.polyfit(xs, ys, 1)[0])


def fit_half_log_coefficient(points: Sequence[CurvePoint]) -> float:
    """Least-squares coefficient of (1/2) ln n (with intercept)."""
    xs = 0.5 * np.log(np.array([p.n for p in points], dtype=np.float64))
    ys = np.array([p.mean_log_ratio for p in points], dtype=np.float64)
    return float(np.polyfit(xs, ys, 1)[0])
