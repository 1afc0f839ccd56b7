"""The stochastic game Politics on a graph with tree-valued terminal data.

Each round: player I names an opposition target o and collects d(o, t_prev);
player II names a new target t and collects d(o, t); a fair coin decides who
moves the position to an adjacent vertex.  Reaching Y ends the game and I
collects d(f(x), t).  The value from (x0, t0) is d(F(x0), t0) where F is the
infinity-harmonic extension of f.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import InputError, InvariantViolation, StrategyFault
from .graphs import SimplicialGraph
from .harmonic import extend_inf_harmonic, is_inf_harmonic_at
from .targets import MetricTree, TreePoint

INVARIANT_TOL = 1e-9


@dataclass(frozen=True)
class GameConfig:
    graph: SimplicialGraph
    Y: frozenset
    tree: MetricTree
    f: Mapping[str, TreePoint]
    x0: str
    t0: TreePoint
    max_rounds: int = 10_000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "Y", frozenset(self.Y))
        if not self.Y:
            raise InputError("terminal set Y is empty")
        for y in self.Y:
            self.graph._check(y)
            if y not in self.f:
                raise InputError(f"terminal data missing at {y!r}")
        self.graph._check(self.x0)
        if self.x0 in self.Y:
            raise InputError("initial position lies in Y")
        self.tree.validate(self.t0)
        if self.max_rounds < 0:
            raise InputError("max_rounds must be non-negative")

    def __hash__(self) -> int:
        return id(self)


class AmleData:
    """Extension F of the terminal data with, per vertex, delta(x) and a witness pair.

    All target points the optimal strategies can name (the values of F and
    t0) are numbered; ``dist`` caches their pairwise distances so every
    simulation path evaluates identical floating-point numbers.
    """

    def __init__(self, config: GameConfig):
        G, T = config.graph, config.tree
        boundary = {y: config.f[y] for y in sorted(config.Y)}
        self.values: dict[str, TreePoint] = extend_inf_harmonic(G, T, boundary).values
        self.tree = T
        self.delta: dict[str, float] = {}
        self.pair: dict[str, tuple[str, str]] = {}
        hop = _distance_to_set(G, config.Y)
        self.hops_to_Y = hop
        for x in G.vertices:
            if x in config.Y:
                continue
            chk = is_inf_harmonic_at(G, T, self.values, x, INVARIANT_TOL)
            if not chk:
                raise InvariantViolation(f"extension not harmonic at {x!r}: {chk.reason}")
            self.delta[x] = chk.max_dist
            if chk.max_dist <= INVARIANT_TOL:
                # every neighbour has the same value: head for Y so play terminates
                u = min(G.neighbors(x), key=lambda w: (hop[w], w))
                self.pair[x] = (u, u)
            else:
                self.pair[x] = chk.pair
        pts = list(dict.fromkeys([self.values[v] for v in G.vertices] + [config.t0]))
        self.points = pts
        self.pid = {p: i for i, p in enumerate(pts)}
        self.dist_matrix = T.pairwise_distances(pts)

    def dist(self, p: TreePoint, q: TreePoint) -> float:
        i, j = self.pid.get(p), self.pid.get(q)
        if i is not None and j is not None:
            return float(self.dist_matrix[i, j])
        return self.tree.distance(p, q)


def _distance_to_set(G: SimplicialGraph, S) -> dict[str, int]:
    from collections import deque

    dist = {s: 0 for s in sorted(S)}
    queue = deque(sorted(S))
    while queue:
        a = queue.popleft()
        for b in G.neighbors(a):
            if b not in dist:
                dist[b] = dist[a] + 1
                queue.append(b)
    return dist


_CACHE: dict[int, tuple[GameConfig, AmleData]] = {}


def vertex_amle(config: GameConfig) -> AmleData:
    """Extension, delta and witness pairs for a configuration (memoised per object)."""
    hit = _CACHE.get(id(config))
    if hit is not None and hit[0] is config:
        return hit[1]
    data = AmleData(config)
    _CACHE[id(config)] = (config, data)
    return data


@dataclass(frozen=True)
class GameState:
    """State between rounds (``o`` is the last opposition target, ``monitored``
    is d(F(x), t) plus the payoff collected so far by player I)."""

    round: int
    x: str
    t: TreePoint
    o: TreePoint | None
    payoff: float
    monitored: float
    terminated: bool = False


class Strategy:
    """Base class; subclasses override the moves of the role they play."""

    name = "strategy"
    is_optimal = False

    def reset(self, config: GameConfig, data: AmleData) -> None:
        self.config, self.data = config, data

    def choose_opposition(self, state: GameState, rng) -> TreePoint:
        raise NotImplementedError

    def choose_target(self, state: GameState, o: TreePoint, rng) -> TreePoint:
        raise NotImplementedError

    def choose_position(self, state: GameState, rng) -> str:
        """``state`` carries this round's o and t; ``state.x`` is the old position."""
        raise NotImplementedError


def _farther(data: AmleData, x: str, ref: TreePoint) -> tuple[str, TreePoint]:
    """The witness vertex (y or z) of x whose value is farther from ref; ties go to y."""
    y, z = data.pair[x]
    fy, fz = data.values[y], data.values[z]
    if data.dist(fz, ref) > data.dist(fy, ref):
        return z, fz
    return y, fy


def _nearer(data: AmleData, x: str, ref: TreePoint) -> tuple[str, TreePoint]:
    y, z = data.pair[x]
    fy, fz = data.values[y], data.values[z]
    if data.dist(fz, ref) < data.dist(fy, ref):
        return z, fz
    return y, fy


def _vertex_with_value(data: AmleData, x: str, p: TreePoint) -> str:
    y, z = data.pair[x]
    return z if data.values[z] == p and data.values[y] != p else y


class Optimal(Strategy):
    """The witness-pair strategy: name the farther of F(y), F(z); on a win, move there."""

    is_optimal = True

    def __init__(self, role: str):
        if role not in ("I", "II"):
            raise InputError(f"unknown role {role!r}")
        self.role = role
        self.name = f"optimal-{role}"

    def choose_opposition(self, state, rng):
        return _farther(self.data, state.x, state.t)[1]

    def choose_target(self, state, o, rng):
        return _farther(self.data, state.x, o)[1]

    def choose_position(self, state, rng):
        return _vertex_with_value(self.data, state.x, state.o if self.role == "I" else state.t)


class RandomPlay(Strategy):
    """Uniform random tree points and uniform random neighbours."""

    name = "random"

    def _point(self, rng) -> TreePoint:
        T = self.config.tree
        e = int(rng.integers(len(T.edges)))
        return T.edge_point(e, float(rng.random()) * T.edges[e][2])

    def choose_opposition(self, state, rng):
        return self._point(rng)

    def choose_target(self, state, o, rng):
        return self._point(rng)

    def choose_position(self, state, rng):
        nb = self.config.graph.neighbors(state.x, include_loop=True)
        return nb[int(rng.integers(len(nb)))]


class Lazy(Strategy):
    """Never moves its target; on a win steps one hop towards Y.

    As player I it names o = t_prev (collecting nothing); as player II it
    keeps t = t_prev.
    """

    name = "lazy"

    def choose_opposition(self, state, rng):
        return state.t

    def choose_target(self, state, o, rng):
        return state.t

    def choose_position(self, state, rng):
        hop = self.data.hops_to_Y
        return min(self.config.graph.neighbors(state.x), key=lambda w: (hop[w], w))


class Reversed(Strategy):
    """Mirror image of the optimal strategy: names the nearer witness value and moves the other way."""

    def __init__(self, role: str):
        self.role = role
        self.name = f"reversed-{role}"

    def choose_opposition(self, state, rng):
        return _nearer(self.data, state.x, state.t)[1]

    def choose_target(self, state, o, rng):
        return _nearer(self.data, state.x, o)[1]

    def choose_position(self, state, rng):
        y, z = self.data.pair[state.x]
        own = state.o if self.role == "I" else state.t
        return y if _vertex_with_value(self.data, state.x, own) == z else z


class Forcing(Strategy):
    """Wrap a strategy; once the opponent has conceded more than twice the tree
    diameter (measured on the monitored quantity), freeze the own target and
    walk towards Y on every win."""

    def __init__(self, base: Strategy, role: str):
        self.base = base
        self.role = role
        self.name = f"forcing({base.name})"
        self.is_optimal = False

    def reset(self, config, data):
        super().reset(config, data)
        self.base.reset(config, data)
        self.start: float | None = None
        self.frozen: TreePoint | None = None

    def _forcing(self, state) -> bool:
        if self.frozen is not None:
            return True
        if self.start is None:
            self.start = state.monitored
        gain = state.monitored - self.start if self.role == "I" else self.start - state.monitored
        if gain > 2 * self.config.tree.diameter:
            self.frozen = state.t if self.role == "II" else (state.o or state.t)
            return True
        return False

    def choose_opposition(self, state, rng):
        return self.frozen if self._forcing(state) else self.base.choose_opposition(state, rng)

    def choose_target(self, state, o, rng):
        return self.frozen if self._forcing(state) else self.base.choose_target(state, o, rng)

    def choose_position(self, state, rng):
        if self.frozen is not None:
            hop = self.data.hops_to_Y
            return min(self.config.graph.neighbors(state.x), key=lambda w: (hop[w], w))
        return self.base.choose_position(state, rng)


def forcing(base: Strategy, role: str) -> Forcing:
    return Forcing(base, role)


def optimal_opposition(state: GameState, data: AmleData) -> TreePoint:
    return _farther(data, state.x, state.t)[1]


def optimal_target(state: GameState, o: TreePoint, data: AmleData) -> TreePoint:
    return _farther(data, state.x, o)[1]


def trial_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent stream for trial ``index`` of a run seeded with ``master_seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(index,))))


def initial_state(config: GameConfig, data: AmleData) -> GameState:
    q = data.dist(data.values[config.x0], config.t0)
    return GameState(0, config.x0, config.t0, None, 0.0, q)


def play_round(
    config: GameConfig,
    data: AmleData,
    state: GameState,
    player_I: Strategy,
    player_II: Strategy,
    rng,
    check: bool = True,
) -> GameState:
    """One round; the coin is drawn before either player moves (but revealed after)."""
    if state.terminated:
        raise InputError("game already terminated")
    G = config.graph
    i_wins = bool(rng.random() < 0.5)
    x_prev, t_prev = state.x, state.t
    o = player_I.choose_opposition(state, rng)
    config.tree.validate(o)
    gain_I = data.dist(o, t_prev)
    t = player_II.choose_target(state, o, rng)
    config.tree.validate(t)
    gain_II = data.dist(o, t)
    mid = replace(state, o=o, t=t)
    mover, who = (player_I, "I") if i_wins else (player_II, "II")
    x = mover.choose_position(mid, rng)
    if x not in G or not G.has_edge(x_prev, x):
        raise StrategyFault(who, f"illegal move {x_prev!r} -> {x!r}")

    fprev = data.values[x_prev]
    if check and player_II.is_optimal:
        lhs = gain_II - gain_I
        rhs = data.dist(fprev, t) - data.dist(fprev, t_prev)
        if lhs < rhs - INVARIANT_TOL:
            raise InvariantViolation(f"round {state.round + 1}: concession inequality fails ({lhs} < {rhs})")
    if check and player_I.is_optimal:
        if data.dist(data.values[x], o) > 2 * data.delta[x_prev] + INVARIANT_TOL:
            raise InvariantViolation(f"round {state.round + 1}: opposition target too far from new position")

    payoff = state.payoff + gain_I - gain_II
    fx = data.values[x]
    monitored = data.dist(fx, t) + payoff
    done = x in config.Y
    if done:
        payoff += data.dist(config.f[x], t)
    return GameState(state.round + 1, x, t, o, payoff, monitored, done)


@dataclass
class TrialResult:
    payoff: float
    rounds: int
    censored: bool
    monitored: list[float] = field(default_factory=list)


def simulate_game(
    config: GameConfig,
    player_I: Strategy,
    player_II: Strategy,
    trial_seed: int | np.random.Generator,
    record: bool = True,
    on_round=None,
) -> TrialResult:
    """Play one game until Y is reached or ``config.max_rounds`` rounds were played.

    ``trial_seed`` is a trial index (combined with ``config.seed``) or a
    ready generator.  Censored trials report the payoff accumulated so far.
    """
    data = vertex_amle(config)
    rng = trial_rng(config.seed, trial_seed) if isinstance(trial_seed, (int, np.integer)) else trial_seed
    player_I.reset(config, data)
    player_II.reset(config, data)
    state = initial_state(config, data)
    trace = [state.monitored] if record else []
    while not state.terminated and state.round < config.max_rounds:
        new = play_round(config, data, state, player_I, player_II, rng)
        if on_round is not None:
            on_round(state, new)
        state = new
        if record:
            trace.append(state.monitored)
    return TrialResult(state.payoff, state.round, not state.terminated, trace)


# ------------------------------------------------------------------ estimates
@dataclass(frozen=True)
class ValueEstimate:
    mean: float
    stderr: float
    censored_fraction: float
    trials: int
    formula: float

    @property
    def z_score(self) -> float:
        if self.stderr == 0:
            return 0.0 if self.mean == self.formula else math.inf
        return (self.mean - self.formula) / self.stderr

    def to_json(self) -> dict:
        return {
            "mean": self.mean,
            "stderr": self.stderr,
            "censored_fraction": self.censored_fraction,
            "trials": self.trials,
            "formula": self.formula,
            "z_score": self.z_score,
        }


def _optimal_trials(config: GameConfig, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
    """Payoffs and censored flags of optimal-vs-optimal trials [start, stop).

    Same arithmetic as ``simulate_game`` with two ``Optimal`` players, on
    integer point ids.
    """
    data = vertex_amle(config)
    G = config.graph
    D = data.dist_matrix.tolist()
    pid = {v: data.pid[data.values[v]] for v in G.vertices}
    pair = {x: (y, z, pid[y], pid[z]) for x, (y, z) in data.pair.items()}
    Y = config.Y
    N = config.max_rounds
    t0 = data.pid[config.t0]
    pay = np.empty(stop - start)
    cens = np.zeros(stop - start, dtype=bool)
    for n, i in enumerate(range(start, stop)):
        rng = trial_rng(config.seed, i)
        coins = rng.random(64)
        c = 0
        x, t, p, k, done = config.x0, t0, 0.0, 0, False
        while k < N:
            if c == len(coins):
                coins, c = rng.random(64), 0
            i_wins = coins[c] < 0.5
            c += 1
            y, z, py, pz = pair[x]
            o = pz if D[pz][t] > D[py][t] else py
            p += D[o][t]
            tn = pz if D[pz][o] > D[py][o] else py
            p -= D[o][tn]
            t = tn
            own = o if i_wins else t
            x = z if (pz == own and py != own) else y
            k += 1
            if x in Y:
                p += D[pid[x]][t]
                done = True
                break
        pay[n] = p
        cens[n] = not done
    return pay, cens


def _chunk_worker(args):
    config, start, stop = args
    return _optimal_trials(config, start, stop)


def estimate_value(config: GameConfig, trials: int, jobs: int = 1) -> ValueEstimate:
    """Monte-Carlo value under both optimal strategies.

    Trial i uses the stream ``trial_rng(config.seed, i)``; results are
    reduced in trial order, so the estimate does not depend on ``jobs``.
    Censored trials are excluded from the mean and reported separately.
    """
    if trials < 1:
        raise InputError("need at least one trial")
    data = vertex_amle(config)
    formula = data.dist(data.values[config.x0], config.t0)
    if jobs <= 1:
        pay, cens = _optimal_trials(config, 0, trials)
    else:
        bounds = np.linspace(0, trials, jobs + 1).astype(int)
        tasks = [(config, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_chunk_worker, tasks))
        pay = np.concatenate([p for p, _ in parts])
        cens = np.concatenate([c for _, c in parts])
    kept = pay[~cens]
    n = len(kept)
    mean = float(kept.mean()) if n else math.nan
    se = float(kept.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    return ValueEstimate(mean, se, float(cens.mean()), trials, formula)


# ---------------------------------------------------------------- martingales
@dataclass(frozen=True)
class DriftReport:
    matchup: str
    rounds: int
    trials: int
    mean: float
    stderr: float
    min_slack: float  # smallest observed lhs - rhs of the concession inequality (II optimal)

    def to_json(self) -> dict:
        return self.__dict__.copy()


def martingale_drift(
    config: GameConfig,
    player_I: Strategy,
    player_II: Strategy,
    min_rounds: int = 100_000,
    max_trials: int = 10_000_000,
) -> DriftReport:
    """Per-round increments of the monitored quantity, pooled over trials until
    at least ``min_rounds`` rounds were observed."""
    incs: list[float] = []
    slack = [math.inf]
    data = vertex_amle(config)

    def watch(before: GameState, after: GameState):
        incs.append(after.monitored - before.monitored)
        if player_II.is_optimal:
            fprev = data.values[before.x]
            lhs = data.dist(after.o, after.t) - data.dist(after.o, before.t)
            rhs = data.dist(fprev, after.t) - data.dist(fprev, before.t)
            slack[0] = min(slack[0], lhs - rhs)

    trials = 0
    while len(incs) < min_rounds and trials < max_trials:
        simulate_game(config, player_I, player_II, trials, record=False, on_round=watch)
        trials += 1
    arr = np.asarray(incs)
    se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else math.nan
    return DriftReport(f"{player_I.name} vs {player_II.name}", len(arr), trials, float(arr.mean()), se, slack[0])


def adversaries(role: str) -> list[Strategy]:
    """The three non-optimal strategies used for drift tests in the given role."""
    return [RandomPlay(), Lazy(), Reversed(role)]
