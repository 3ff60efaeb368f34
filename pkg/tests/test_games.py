import numpy as np
import pytest

from netengage.experiments import (
    acyclicity_check,
    best_response_moves,
    connected_graphs,
    exact_potential_check,
    nash_agreement_check,
    random_small_instance,
)
from netengage.games import (
    GameKind,
    GameSpec,
    Variant,
    action_utilities,
    base_utility,
    best_response_set,
    impact,
    is_nash,
    is_strict_nash,
    potential,
    utility,
    with_action,
)
from netengage.graphs import Graph, ResourceAssignment, gen_line, gen_ring, gen_star
from netengage.rng import make_rng
from netengage.stability import index_profile


def test_npg_utilities_on_a_path():
    g = gen_line(3)
    spec = GameSpec.npg(2, 1.0)
    sigma = (1, 1, 1)
    assert [base_utility(g, None, spec, sigma, i) for i in range(3)] == [-1.0, 1.0, -1.0]
    assert potential(g, None, spec, sigma) == -1.0
    assert impact(g, None, spec, sigma, 1) == 2.0
    assert base_utility(g, None, spec, (0, 1, 1), 0) == 0.0


def test_isolated_participant_pays_minus_k():
    g = Graph.from_edges(2, [])
    assert base_utility(g, None, GameSpec.npg(3), (1, 0), 0) == -3.0


def test_nsg_utility_uses_local_pool():
    g = gen_line(3)
    lab = ResourceAssignment(4, 1, (frozenset({0}), frozenset({1}), frozenset({2})))
    spec = GameSpec.nsg(4, 1, alpha=2.0)
    # player 1 reaches {0,1} with player 0 in and 2 out; its pool is {0,1,2}
    assert base_utility(g, lab, spec, (1, 1, 0), 1) == pytest.approx((2 - 4) / 3)
    full = ResourceAssignment(2, 1, (frozenset({0}), frozenset({1}), frozenset({0})))
    assert base_utility(g, full, GameSpec.nsg(2, 1, 2.0), (1, 1, 0), 1) == 2.0


@pytest.mark.parametrize("kind", [GameKind.NPG, GameKind.NSG])
def test_impact_is_the_neighbors_marginal_gain(kind):
    rng = make_rng(21)
    for _ in range(300):
        g, labels, game, sigma = random_small_instance(rng, kind, 8)
        game = game.with_variant(Variant.BASE)
        i = int(rng.integers(g.n))
        on, off = with_action(sigma, i, 1), with_action(sigma, i, 0)
        expected = potential(g, labels, game, on) - potential(g, labels, game, off) - base_utility(g, labels, game, on, i)
        assert impact(g, labels, game, sigma, i) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("kind", [GameKind.NPG, GameKind.NSG])
def test_global_mcu_is_an_exact_potential_game(kind):
    res = exact_potential_check(2000, 3, kind, 10)
    assert res.passed, res.counterexample
    assert res.worst <= 1e-9


def test_base_game_is_not_an_exact_potential_game():
    g = gen_line(3)
    spec = GameSpec.npg(2, 1.0)
    sigma = (1, 1, 1)
    dev = with_action(sigma, 1, 0)
    du = utility(g, None, spec, dev, 1) - utility(g, None, spec, sigma, 1)
    dphi = potential(g, None, spec, dev) - potential(g, None, spec, sigma)
    assert du != pytest.approx(dphi)


def test_pa_flag_adds_impact_only_for_flagged_participants():
    g = gen_line(3)
    spec = GameSpec.npg(2, 1.0, Variant.PA_MODULATED)
    assert utility(g, None, spec, (1, 1, 1), 1, anchor_flag=1) == 3.0
    assert utility(g, None, spec, (1, 1, 1), 1, anchor_flag=0) == 1.0
    with pytest.raises(ValueError):
        utility(g, None, GameSpec.npg(2), (1, 1, 1), 1, anchor_flag=1)


def test_best_response_set_on_a_star():
    g = gen_star(2)
    spec = GameSpec.npg(1, 0.5)
    assert best_response_set(g, None, spec, (1, 0, 0), 1) == {1}
    assert best_response_set(g, None, spec, (0, 0, 0), 1) == {0}
    assert action_utilities(g, None, spec, (1, 0, 0), 1) == {0: 0.0, 1: 0.5}


def test_alpha_must_be_positive():
    with pytest.raises(ValueError):
        GameSpec.npg(1, 0.0)


def test_global_mcu_best_responses_never_lower_the_potential():
    for g in connected_graphs(5):
        for k in (1, 2, 3):
            spec = GameSpec.npg(k, 0.5, Variant.GLOBAL_MCU)
            moves = best_response_moves(g, None, spec)
            for s, outs in enumerate(moves):
                ps = potential(g, None, spec, index_profile(s, g.n))
                for t in outs:
                    assert potential(g, None, spec, index_profile(t, g.n)) >= ps - 1e-12


def test_base_best_response_can_lower_the_potential():
    # path 1 - 0 - 2: player 0 quitting is a best response yet the potential drops
    g = Graph.from_edges(3, [(0, 1), (0, 2)])
    spec = GameSpec.npg(2, 0.5)
    before, after = (1, 1, 0), (0, 1, 0)
    assert best_response_set(g, None, spec, before, 0) == {0}
    assert potential(g, None, spec, before) == -1.5
    assert potential(g, None, spec, after) == -2.0


def test_best_response_paths_are_acyclic_on_small_graphs():
    res = acyclicity_check(5)
    assert res.passed, res.counterexample
    assert res.checked == (1 + 1 + 2 + 6 + 21) * 6


def test_connected_graph_counts_match_the_known_sequence():
    counts = np.bincount([g.n for g in connected_graphs(6)])
    assert counts.tolist() == [0, 1, 1, 2, 6, 21, 112]


def test_nash_scan_matches_threshold_characterization():
    res = nash_agreement_check(60, 4, 7)
    assert res.passed, res.counterexample


def test_all_abstain_is_nash_for_npg_and_for_nsg_only_when_short():
    g = gen_ring(5)
    zero = (0,) * 5
    assert is_nash(g, None, GameSpec.npg(2), zero)
    assert is_strict_nash(g, None, GameSpec.npg(2), zero)
    short = ResourceAssignment(3, 2, tuple(frozenset({0, 1}) for _ in range(5)))
    assert is_nash(g, short, GameSpec.nsg(3, 2), zero)
    whole = ResourceAssignment(2, 2, tuple(frozenset({0, 1}) for _ in range(5)))
    rep = is_nash(g, whole, GameSpec.nsg(2, 2), zero)
    assert not rep.is_nash and not rep.closed_form


def test_full_ring_is_nash_for_k2():
    g = gen_ring(6)
    assert is_strict_nash(g, None, GameSpec.npg(2, 1.0), (1,) * 6)
    assert not is_nash(g, None, GameSpec.npg(3, 1.0), (1,) * 6)


def test_is_nash_rejects_variants():
    with pytest.raises(ValueError):
        is_nash(gen_ring(4), None, GameSpec.npg(2, 1.0, Variant.GLOBAL_MCU), (0,) * 4)


def test_nsg_requires_labels():
    with pytest.raises(ValueError):
        base_utility(gen_ring(4), None, GameSpec.nsg(3, 2), (1, 0, 0, 0), 0)


def test_nsg_impact_counts_resources_only_i_provides():
    # player 0 holds {0, 1} and reaches all three resources only through player 1
    g = gen_line(2)
    lab = ResourceAssignment(3, 2, (frozenset({0, 1}), frozenset({1, 2})))
    spec = GameSpec.nsg(3, 2, 1.0)
    assert impact(g, lab, spec, (1, 0), 1) == pytest.approx(1.0 + 1 / 3)
    g3 = gen_star(2)
    lab3 = ResourceAssignment(4, 2, (frozenset({0, 1}), frozenset({2, 3}), frozenset({0, 1})))
    spec3 = GameSpec.nsg(4, 2, 1.0)
    assert impact(g3, lab3, spec3, (1, 0, 1), 1) == pytest.approx(1.0 + 2 / 4)
    assert impact(g3, lab3, spec3, (1, 1, 0), 2) == 0.0


def _pa_flag(g, labels, spec, sigma, i):
    on = with_action(sigma, i, 1)
    u1 = base_utility(g, labels, spec.with_variant(Variant.BASE), on, i)
    return int(u1 <= 0 < u1 + impact(g, labels, spec, sigma, i))


def test_pa_best_responses_follow_the_potential():
    for g in connected_graphs(5):
        for k, alpha in ((1, 0.5), (2, 1.0), (3, 0.4)):
            spec = GameSpec.npg(k, alpha, Variant.PA_MODULATED)
            for idx in range(1 << g.n):
                sigma = index_profile(idx, g.n)
                for i in range(g.n):
                    flag = _pa_flag(g, None, spec, sigma, i)
                    br = best_response_set(g, None, spec, sigma, i, flag)
                    phi = {a: potential(g, None, spec, with_action(sigma, i, a)) for a in (0, 1)}
                    best = {a for a in (0, 1) if phi[a] == max(phi.values())}
                    if phi[0] != phi[1]:
                        assert br == best
                    else:
                        assert br <= best
