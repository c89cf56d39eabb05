import numpy as np
import pytest

from repgames.games import (always_win, asym3, chsh, enumerate_tuples,
                            fixture, load_game, save_game, validate_game,
                            win_set)
from repgames.prob import Event


def test_chsh_definition():
    g = chsh()
    assert (g.x_size, g.y_size, g.a_size, g.b_size) == (2, 2, 2, 2)
    assert np.allclose(g.mu, 0.25)
    for x in range(2):
        for y in range(2):
            for a in range(2):
                for b in range(2):
                    assert g.predicate[x, y, a, b] == ((a ^ b) == (x & y))


def test_validate_fixtures():
    for name in ("chsh", "always_win", "asym3"):
        rep = validate_game(fixture(name))
        assert rep.ok, rep


def test_validate_catches_bad_mu():
    g = chsh()
    bad = type(g)(2, 2, 2, 2, np.array([[0.5, 0.5], [0.5, 0.5]]),
                  g.predicate)
    rep = validate_game(bad)
    assert not rep.ok


def test_fixture_unknown_name():
    with pytest.raises(ValueError):
        fixture("nope")


def test_answer_bits():
    assert abs(chsh().answer_bits - 2.0) < 1e-12
    assert abs(asym3().answer_bits - np.log2(asym3().a_size
                                             * asym3().b_size)) < 1e-12


def test_mu_dist_product_structure():
    g = chsh()
    d = g.mu_dist(2)
    assert d.names == ("x1", "x2", "y1", "y2")
    assert np.allclose(d.table, 1.0 / 16.0)
    g3 = asym3()
    d3 = g3.mu_dist(2)
    ev = Event.from_assignment(
        {"x1": 0, "y1": 1, "x2": 2, "y2": 0},
        {n: (g3.x_size if n.startswith("x") else g3.y_size)
         for n in d3.names})
    assert abs(d3.prob(ev) - g3.mu[0, 1] * g3.mu[2, 0]) < 1e-12


def test_enumerate_tuples_counts_questions():
    g = chsh()
    tuples = list(enumerate_tuples(g, 2))
    assert len(tuples) == (2 * 2) ** 2
    assert abs(sum(w for _x, _y, w in tuples) - 1.0) < 1e-12


def test_win_set_single_round():
    g = chsh()
    ev = win_set(g, 1, (0,))
    assert set(ev.names) == {"x1", "y1", "a1", "b1"}
    # mask must equal the predicate itself on the matching axes
    mask = np.transpose(ev.mask, [ev.names.index(n)
                                  for n in ("x1", "y1", "a1", "b1")])
    assert np.array_equal(mask, np.asarray(g.predicate, dtype=bool))


def test_win_set_multiple_rounds_is_conjunction():
    g = chsh()
    ev01 = win_set(g, 2, (0, 1))
    ev0 = win_set(g, 2, (0,))
    ev1 = win_set(g, 2, (1,))
    both = ev0.intersect(ev1)
    order = [both.names.index(n) for n in ev01.names]
    assert np.array_equal(np.transpose(both.mask, order), ev01.mask)


def test_win_set_coordinates_are_zero_based():
    g = chsh()
    ev = win_set(g, 3, (2,))
    assert "x3" in ev.names
    with pytest.raises(ValueError):
        win_set(g, 3, (3,))
    with pytest.raises(ValueError):
        win_set(g, 3, (-1,))


def test_win_set_empty_is_certain():
    ev = win_set(chsh(), 2, ())
    assert ev.names == ()
    assert bool(np.asarray(ev.mask))


def test_win_set_cell_count_matches_predicate_sum():
    g = chsh()
    ev = win_set(g, 1, (0,))
    assert int(ev.mask.sum()) == 8
    assert int(ev.mask.sum()) == int(np.asarray(g.predicate).sum())


def test_win_set_two_round_cell_count():
    # both rounds must win, so the count is the single-round count squared
    ev = win_set(chsh(), 2, (0, 1))
    assert int(ev.mask.sum()) == 8 * 8


def test_save_load_roundtrip(tmp_path):
    g = asym3()
    path = tmp_path / "game.txt"
    save_game(g, path)
    g2 = load_game(path)
    assert (g2.x_size, g2.y_size, g2.a_size, g2.b_size) == (
        g.x_size, g.y_size, g.a_size, g.b_size)
    assert np.allclose(g2.mu, g.mu)
    assert np.array_equal(g2.predicate, g.predicate)


def test_game_arrays_frozen():
    g = chsh()
    with pytest.raises(ValueError):
        g.mu[0, 0] = 1.0


def test_always_win_predicate():
    g = always_win()
    assert np.all(g.predicate)
