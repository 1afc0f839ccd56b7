from collections import defaultdict

import numpy as np
import pytest

from treeamle.errors import InputError, StrategyFault
from treeamle.graphs import SimplicialGraph
from treeamle.politics import (
    GameConfig,
    GameState,
    Lazy,
    Optimal,
    RandomPlay,
    Reversed,
    Strategy,
    _optimal_trials,
    estimate_value,
    forcing,
    initial_state,
    play_round,
    simulate_game,
    trial_rng,
    vertex_amle,
)
from treeamle.repro import GAME_FIXTURES, load_game
from treeamle.targets import MetricTree


class Coin:
    """Stand-in generator whose draws are fixed (optimal players never draw)."""

    def __init__(self, value):
        self.value = value

    def random(self):
        return self.value


def exact_value(config, max_rounds=5000, mass_tol=1e-15):
    """Oracle: propagate the (position, target) distribution under optimal play,
    branching on both coin outcomes, and sum the expected round payoffs."""
    data = vertex_amle(config)
    I, II = Optimal("I"), Optimal("II")
    I.reset(config, data)
    II.reset(config, data)
    dist = {(config.x0, config.t0): 1.0}
    value = 0.0
    for k in range(max_rounds):
        nxt = defaultdict(float)
        for (x, t), p in dist.items():
            for coin in (0.25, 0.75):
                s = play_round(config, data, GameState(k, x, t, None, 0.0, 0.0), I, II, Coin(coin))
                value += 0.5 * p * s.payoff
                if not s.terminated:
                    nxt[(s.x, s.t)] += 0.5 * p
        dist = nxt
        if sum(dist.values()) < mass_tol:
            return value, k + 1
    raise AssertionError("game did not terminate under optimal play")


@pytest.mark.parametrize("name", GAME_FIXTURES)
def test_fixture_value_equals_exact_expectation(name):
    cfg, value = load_game(name)
    data = vertex_amle(cfg)
    assert data.dist(data.values[cfg.x0], cfg.t0) == pytest.approx(value, abs=1e-12)
    exact, _ = exact_value(cfg)
    assert exact == pytest.approx(value, abs=1e-9)


@pytest.mark.parametrize("name", GAME_FIXTURES)
def test_monitored_quantity_is_a_martingale_under_optimal_play(name):
    cfg, _ = load_game(name)
    data = vertex_amle(cfg)
    I, II = Optimal("I"), Optimal("II")
    I.reset(cfg, data)
    II.reset(cfg, data)
    targets = set(data.values.values()) | {cfg.t0}
    for x in cfg.graph.vertices:
        if x in cfg.Y:
            continue
        for t in targets:
            before = data.dist(data.values[x], t)
            after = []
            for coin in (0.25, 0.75):
                s = play_round(cfg, data, GameState(0, x, t, None, 0.0, before), I, II, Coin(coin))
                after.append(s.payoff if s.terminated else s.monitored)
            assert np.mean(after) == pytest.approx(before, abs=1e-9)


def test_path_value_by_hand():
    # F(1) is the midpoint of a segment of length 3, t0 one end
    cfg, value = load_game("politics_path")
    assert value == 1.5


def test_fast_path_matches_generic_simulator():
    cfg, _ = load_game("politics_mixed", seed=11)
    pay, cens = _optimal_trials(cfg, 0, 300)
    for i in range(300):
        r = simulate_game(cfg, Optimal("I"), Optimal("II"), i, record=False)
        assert r.payoff == pay[i]
        assert r.censored == cens[i]


def test_estimate_is_deterministic_and_independent_of_jobs():
    cfg, _ = load_game("politics_grid", seed=5)
    a = estimate_value(cfg, 4000, jobs=1)
    b = estimate_value(cfg, 4000, jobs=1)
    c = estimate_value(cfg, 4000, jobs=2)
    assert a == b == c


def test_estimate_reports_formula_and_z():
    cfg, value = load_game("politics_tripod", seed=3)
    est = estimate_value(cfg, 20000)
    assert est.formula == value
    assert abs(est.z_score) < 4
    assert est.censored_fraction == 0.0


def test_round_cap_censors_trials():
    cfg, _ = load_game("politics_mixed", max_rounds=3)
    est = estimate_value(cfg, 500)
    assert 0 < est.censored_fraction < 1
    assert np.isfinite(est.mean)
    cfg, _ = load_game("politics_mixed", max_rounds=1)
    est = estimate_value(cfg, 100)
    assert est.censored_fraction == 1.0 and np.isnan(est.mean)


def test_trial_streams_differ():
    a = trial_rng(0, 0).random(4)
    b = trial_rng(0, 1).random(4)
    c = trial_rng(1, 0).random(4)
    assert not np.array_equal(a, b) and not np.array_equal(a, c)
    assert np.array_equal(a, trial_rng(0, 0).random(4))


@pytest.mark.parametrize("adv", [RandomPlay(), Lazy(), Reversed("I"), forcing(RandomPlay(), "I")])
def test_invariants_hold_against_adversarial_I(adv):
    cfg, _ = load_game("politics_mixed", seed=2)
    for i in range(50):
        simulate_game(cfg, adv, Optimal("II"), i)


@pytest.mark.parametrize("adv", [RandomPlay(), Lazy(), Reversed("II"), forcing(Lazy(), "II")])
def test_invariants_hold_against_adversarial_II(adv):
    cfg, _ = load_game("politics_grid", seed=2)
    for i in range(50):
        simulate_game(cfg, Optimal("I"), adv, i)


def test_simulation_trace_starts_at_formula():
    cfg, value = load_game("politics_path")
    r = simulate_game(cfg, Optimal("I"), Optimal("II"), 0)
    assert r.monitored[0] == value
    assert r.monitored[-1] == pytest.approx(r.payoff)


class Teleport(Strategy):
    name = "teleport"
    is_optimal = False

    def choose_opposition(self, state, rng):
        return state.t

    def choose_target(self, state, o, rng):
        return o

    def choose_position(self, state, rng):
        return "2"  # not adjacent to 0


def test_illegal_move_raises_strategy_fault():
    cfg, _ = load_game("politics_grid")
    data = vertex_amle(cfg)
    I, II = Teleport(), Optimal("II")
    I.reset(cfg, data)
    II.reset(cfg, data)
    state = initial_state(cfg, data)
    x0 = cfg.x0
    bad = next(v for v in cfg.graph.vertices if v != x0 and not cfg.graph.has_edge(x0, v))
    I.choose_position = lambda s, rng: bad
    with pytest.raises(StrategyFault) as exc:
        play_round(cfg, data, state, I, II, Coin(0.25))
    assert exc.value.player == "I"


def test_config_validation():
    G = SimplicialGraph("abc", [("a", "b"), ("b", "c")])
    T = MetricTree(["p", "q"], [("p", "q", 1.0)])
    f = {"a": T.vertex_point("p"), "c": T.vertex_point("q")}
    with pytest.raises(InputError):
        GameConfig(G, {"a", "c"}, T, f, "a", T.vertex_point("p"))
    with pytest.raises(InputError):
        GameConfig(G, set(), T, f, "b", T.vertex_point("p"))
    with pytest.raises(InputError):
        GameConfig(G, {"a", "b"}, T, f, "c", T.vertex_point("p"))
    with pytest.raises(InputError):
        GameConfig(G, {"a", "c"}, T, f, "b", T.vertex_point("p"), max_rounds=-1)
