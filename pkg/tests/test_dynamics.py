import math

import numpy as np
import pytest

from netengage.dynamics import (
    SimConfig,
    SimTrace,
    classify_steady_state,
    empirical_occupation,
    initial_profile,
    lll_probabilities,
    lll_step,
    membership_csv,
    p_join,
    random_stream,
    run,
    run_python,
    trace_csv,
)
from netengage.games import GameSpec, Variant, potential
from netengage.graphs import assign_resources, gen_erdos_renyi, gen_ring
from netengage.rng import make_rng


def test_leaving_probability_at_the_reference_temperature():
    # a satisfied player (payoff 1 vs 0) at T = 0.3 abstains with 1/(1+e^(10/3))
    p = lll_probabilities({0: 0.0, 1: 1.0}, 0.3)
    assert p[0] == pytest.approx(0.034445, abs=1e-6)
    assert 1 - p_join(1.0, 0.0, 0.3) == pytest.approx(p[0], abs=1e-15)


def test_probabilities_survive_huge_utility_gaps():
    p = lll_probabilities({0: 0.0, 1: 1e6}, 1e-3)
    assert p == {0: 0.0, 1: 1.0}
    assert p_join(-1e6, 0.0, 1e-3) == 0.0


@pytest.mark.parametrize("T", [0.01, 1.0, 100.0])
def test_probabilities_match_gibbs_weights(T):
    u = {0: 0.3, 1: -0.2}
    z = math.exp(0.3 / T) + math.exp(-0.2 / T)
    assert lll_probabilities(u, T)[1] == pytest.approx(math.exp(-0.2 / T) / z)


def test_nonpositive_temperature_rejected():
    with pytest.raises(ValueError):
        lll_probabilities({0: 0.0, 1: 1.0}, 0.0)
    with pytest.raises(ValueError):
        SimConfig(temperature=-1, iterations=10)


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(0.3, 100, steady_window=200)
    with pytest.raises(ValueError):
        SimConfig(0.3, 100, steady_window=10, initial="sideways")
    with pytest.raises(ValueError):
        SimConfig(0.3, 100, steady_window=10, steady_threshold=1.5)


def test_initial_profiles():
    rng = make_rng(0)
    assert initial_profile("zero", 4, rng).tolist() == [0, 0, 0, 0]
    assert initial_profile("one", 3, rng).tolist() == [1, 1, 1]
    assert initial_profile([0, 1, 1], 3, rng).tolist() == [0, 1, 1]
    with pytest.raises(ValueError):
        initial_profile([0, 2], 2, rng)


class _Replay:
    """Feeds a pre-drawn random stream to the one-step reference."""

    def __init__(self, players, uniforms):
        self.players = iter(players.tolist())
        self.uniforms = iter(uniforms.tolist())

    def integers(self, n):
        return next(self.players)

    def random(self):
        return next(self.uniforms)


@pytest.mark.parametrize("variant", [Variant.BASE, Variant.GLOBAL_MCU])
@pytest.mark.parametrize("kind", ["npg", "nsg"])
def test_incremental_engines_replay_the_reference_step(kind, variant):
    g = gen_erdos_renyi(30, 0.15, 4)
    if kind == "npg":
        spec, labels = GameSpec.npg(2, 1.0, variant), None
    else:
        spec = GameSpec.nsg(5, 2, 1.0, variant)
        labels = assign_resources(g, 5, 2, 4)
    iters = 3000
    cfg = SimConfig(0.3, iters, seed=17, steady_window=iters)
    rng = make_rng(17)
    (players, uniforms), = list(random_stream(rng, g.n, iters))
    shim = _Replay(players, uniforms)
    sigma = (0,) * g.n
    counts = [0]
    for _ in range(iters):
        sigma, _ = lll_step(g, labels, spec, sigma, None, 0.3, shim)
        counts.append(sum(sigma))
    slow = run_python(g, labels, spec, cfg)
    fast = run(g, labels, spec, cfg)
    assert slow.n_participating.tolist() == counts
    assert fast.n_participating.tolist() == counts
    assert tuple(fast.final.tolist()) == sigma
    assert fast.potential[-1] == pytest.approx(potential(g, labels, spec, sigma), abs=1e-9)
    np.testing.assert_allclose(slow.potential, fast.potential, atol=1e-9)
    np.testing.assert_array_equal(slow.frequencies, fast.frequencies)


def test_frequencies_match_direct_window_count():
    g = gen_erdos_renyi(40, 0.2, 2)
    spec = GameSpec.npg(3, 1.0)
    cfg = SimConfig(0.5, 5000, seed=8, steady_window=1234, initial="random")
    seen = []

    def record(t, state):
        if t > cfg.iterations - cfg.steady_window:
            seen.append(list(state.sigma))

    trace = run_python(g, None, spec, cfg, on_iteration=record)
    np.testing.assert_allclose(trace.frequencies, np.mean(seen, axis=0), atol=1e-12)
    np.testing.assert_array_equal(run(g, None, spec, cfg).frequencies, trace.frequencies)


def test_record_off_keeps_the_final_state():
    g = gen_erdos_renyi(50, 0.1, 3)
    spec = GameSpec.npg(2, 1.0)
    on = run(g, None, spec, SimConfig(0.3, 20000, seed=5, steady_window=5000))
    off = run(g, None, spec, SimConfig(0.3, 20000, seed=5, steady_window=5000, record=False))
    assert off.n_participating[-1] == on.n_participating[-1]
    np.testing.assert_array_equal(off.final, on.final)
    np.testing.assert_array_equal(off.frequencies, on.frequencies)
    assert off.iterations == on.iterations == 20000
    assert off.steady_size(0.95) == on.steady_size(0.95)


def test_same_seed_same_trace_different_seed_different_trace():
    g = gen_erdos_renyi(60, 0.1, 1)
    spec = GameSpec.npg(2, 1.0)
    a = run(g, None, spec, SimConfig(0.3, 10000, seed=(3, 0, 2), steady_window=1000))
    b = run(g, None, spec, SimConfig(0.3, 10000, seed=(3, 0, 2), steady_window=1000))
    c = run(g, None, spec, SimConfig(0.3, 10000, seed=(3, 1, 2), steady_window=1000))
    np.testing.assert_array_equal(a.n_participating, b.n_participating)
    assert not np.array_equal(a.n_participating, c.n_participating)


def test_classification_threshold_is_strict():
    trace = SimTrace(np.zeros(11), np.zeros(11), np.zeros(11), np.array([0.95, 0.9501, 1.0]), np.zeros(3), 10)
    assert classify_steady_state(trace, 0.95).tolist() == [False, True, True]
    short = SimTrace(np.zeros(5), np.zeros(5), np.zeros(5), np.zeros(3), np.zeros(3), 10)
    with pytest.raises(ValueError):
        classify_steady_state(short, 0.95)


def test_global_mcu_potential_never_drops_at_zero_temperature_limit():
    g = gen_erdos_renyi(40, 0.15, 6)
    spec = GameSpec.npg(2, 1.0, Variant.GLOBAL_MCU)
    trace = run(g, None, spec, SimConfig(1e-4, 20000, seed=2, steady_window=100, initial="random"))
    assert np.all(np.diff(trace.potential) >= -1e-9)


def test_empirical_occupation_is_a_distribution():
    g = gen_ring(5)
    occ = empirical_occupation(g, None, GameSpec.npg(2, 1.0), 0.5, 20000, 1, "random")
    assert occ.shape == (32,)
    assert occ.sum() == pytest.approx(1.0)


def test_csv_exports():
    g = gen_ring(5)
    trace = run(g, None, GameSpec.npg(2, 1.0), SimConfig(0.3, 100, seed=1, steady_window=50, initial="one"))
    lines = trace_csv(trace, every=50).splitlines()
    assert lines[0] == "iteration,n_participating,n_anchors,potential"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["0", "50", "100"]
    assert lines[1].startswith("0,5,0,")
    assert membership_csv(trace, 0.95).splitlines()[0] == "player,frequency,member"
