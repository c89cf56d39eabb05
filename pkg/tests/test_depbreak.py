import numpy as np
import pytest

from repgames import matcore
from repgames.depbreak import (ALICE, BOB, DepBreakComputer, aligned_operators,
                               choose_C, dep_state, extended_joint, fine_povm,
                               skew_distances)
from repgames.games import always_win, chsh, win_set
from repgames.prob import ZeroProbabilityEvent, tv_distance
from repgames.strategy import born_joint, strategy_fixture

PRINTING_ITEM2 = 0.04099582234676859
PRINTING_DELTA = 2.2522279662062052
PRINTING_P_WIN_C = 0.8395988139831025
PRINTING_D_BOB = 0.09629913117677133
PRINTING_XI_BOB = 0.0402861854685278


def skew_item2_oracle(ext, g):
    """Recompute the coordinate-0 item-2 distance for n=2, C={1} from the
    raw conditioned table, independent of the skew implementation."""
    order = ("x1", "y1", "x2", "y2", "a2", "b2", "d1", "m1", "a1", "b1")
    t = ext.reordered(order).table.copy()
    # condition on winning round 2
    for x2 in range(g.x_size):
        for y2 in range(g.y_size):
            for a2 in range(g.a_size):
                for b2 in range(g.b_size):
                    if not g.predicate[x2, y2, a2, b2]:
                        t[:, :, x2, y2, a2, b2] = 0.0
    t /= t.sum()
    # joint law of (x1, y1, rest) with rest = (x2, y2, a2, b2); the round-1
    # pointer and answers are marginalized out
    p = t.sum(axis=(6, 7, 8, 9))
    anchored = p.sum(axis=1)                  # x1 x2 y2 a2 b2
    row = anchored.reshape(g.x_size, -1)
    kernel = row / row.sum(axis=1, keepdims=True)
    ref = g.mu[:, :, None] * kernel[:, None, :]
    return 0.5 * float(np.abs(p.reshape(g.x_size, g.y_size, -1) - ref).sum())


def test_extended_joint_keeps_output_distribution():
    g = chsh()
    s = strategy_fixture("printing", 2)
    ext = extended_joint(g, 2, s, (1,))
    names = ("x1", "x2", "y1", "y2", "a1", "a2", "b1", "b2")
    assert tv_distance(ext.marginal(names), born_joint(g, 2, s)) < 1e-12


def test_extended_joint_pointer_law():
    g = chsh()
    s = strategy_fixture("detprod", 2)
    ext = extended_joint(g, 2, s, (1,))
    d1 = ext.marginal(("d1",))
    assert np.allclose(d1.table, 0.5)
    # the pointer message copies the owner's question exactly
    cond = ext.given({"d1": ALICE})
    copied = cond.marginal(("x1", "m1")).table
    assert abs(np.trace(copied) - 1.0) < 1e-12
    cond_b = ext.given({"d1": BOB})
    copied_b = cond_b.marginal(("y1", "m1")).table
    assert abs(np.trace(copied_b) - 1.0) < 1e-12


def test_extended_joint_holdout_coordinates_have_no_pointer():
    g = chsh()
    s = strategy_fixture("detprod", 2)
    ext = extended_joint(g, 2, s, (1,))
    assert "d1" in ext.names and "m1" in ext.names
    assert "d2" not in ext.names and "m2" not in ext.names


def test_choose_c_prefers_empty_set_for_product_strategies():
    g = chsh()
    s = strategy_fixture("tsirelson", 3)
    joint = born_joint(g, 3, s)
    sel = choose_C(joint, g, 3, 0.5, 2)
    assert sel.C == ()
    assert abs(sel.score - np.cos(np.pi / 8) ** 2) < 1e-10
    assert sel.threshold_met
    assert sel.evaluated == 7 and sel.skipped == 0


def test_choose_c_always_win_scores_one():
    g = always_win()
    s = strategy_fixture("detprod", 2)
    joint = born_joint(g, 2, s)
    sel = choose_C(joint, g, 2, 0.5, 1)
    assert sel.C == () and sel.score == pytest.approx(1.0, abs=1e-12)


def test_choose_c_validates_t_max():
    g = chsh()
    joint = born_joint(g, 2, strategy_fixture("detprod", 2))
    with pytest.raises(ValueError):
        choose_C(joint, g, 2, 0.5, 0)
    with pytest.raises(ValueError):
        choose_C(joint, g, 2, 0.5, 3)


@pytest.mark.parametrize("name", ["tsirelson", "detprod"])
def test_skew_distances_vanish_for_product_strategies(name):
    g = chsh()
    s = strategy_fixture(name, 2)
    ext = extended_joint(g, 2, s, (1,))
    rep = skew_distances(ext, g, 2, (1,))
    assert rep.avg1 <= 1e-12
    assert rep.avg2 <= 1e-12
    assert rep.avg3 <= 1e-12


def test_skew_distances_printing_matches_independent_oracle():
    g = chsh()
    s = strategy_fixture("printing", 2)
    ext = extended_joint(g, 2, s, (1,))
    rep = skew_distances(ext, g, 2, (1,))
    oracle = skew_item2_oracle(ext, g)
    assert abs(rep.item2[0] - oracle) < 1e-12


def test_skew_distances_printing_regression_values():
    g = chsh()
    s = strategy_fixture("printing", 2)
    ext = extended_joint(g, 2, s, (1,))
    rep = skew_distances(ext, g, 2, (1,))
    assert rep.avg2 > 0.0
    assert abs(rep.avg2 - PRINTING_ITEM2) < 1e-10
    assert rep.avg1 < 1e-12 and rep.avg3 < 1e-12
    assert abs(rep.delta - PRINTING_DELTA) < 1e-10
    assert abs(rep.p_win_c - PRINTING_P_WIN_C) < 1e-10
    ratios = rep.ratios()
    assert ratios[1] == pytest.approx(rep.avg2 / np.sqrt(rep.delta))


def test_skew_distances_rejects_full_holdout():
    g = chsh()
    s = strategy_fixture("detprod", 2)
    ext = extended_joint(g, 2, s, (0, 1))
    with pytest.raises(ValueError):
        skew_distances(ext, g, 2, (0, 1))


def test_aligned_operators_factorization():
    rng = np.random.default_rng(0)
    coarse = matcore.random_psd(3, rng=rng)
    coarse = coarse / np.linalg.eigvalsh(coarse).max()
    rho = matcore.random_density(3, rng=rng)
    s_op, u = aligned_operators(coarse, rho)
    assert np.allclose(s_op.conj().T @ s_op, coarse, atol=1e-10)
    assert np.allclose(u @ u.conj().T, np.eye(3), atol=1e-10)
    prod = s_op @ matcore.mat_sqrt(rho)
    assert matcore.is_hermitian(prod, atol=1e-9)
    assert np.linalg.eigvalsh((prod + prod.conj().T) / 2).min() > -1e-9


def test_aligned_operators_deterministic():
    rng = np.random.default_rng(1)
    coarse = matcore.random_psd(2, rng=rng)
    coarse = coarse / np.linalg.eigvalsh(coarse).max()
    rho = matcore.random_density(2, rng=rng)
    s1, _ = aligned_operators(coarse, rho)
    s2, _ = aligned_operators(coarse.copy(), rho.copy())
    assert np.array_equal(s1, s2)


def fine_povm_oracle(s_op, fine_coarse):
    """Plain pseudoinverse conjugation, valid when the coarse operator is
    well conditioned.  Solves S-dagger E S = F for each element."""
    pinv = np.linalg.pinv(s_op)
    return np.stack([pinv.conj().T @ f @ pinv for f in fine_coarse])


def test_fine_povm_matches_pinv_conjugation_when_well_conditioned():
    rng = np.random.default_rng(2)
    d, k = 3, 2
    parts = np.stack([matcore.random_psd(d, rng=rng) for _ in range(k)])
    coarse = parts.sum(axis=0)
    parts = parts / np.linalg.eigvalsh(coarse).max()
    coarse = parts.sum(axis=0)
    rho = matcore.random_density(d, rng=rng)
    s_op, _ = aligned_operators(coarse, rho)
    fam = fine_povm(s_op, parts)
    oracle = fine_povm_oracle(s_op, parts)
    assert fam.shape == (k + 1, d, d)
    assert np.abs(fam[:k] - oracle).max() < 1e-9


def test_fine_povm_family_properties():
    rng = np.random.default_rng(3)
    d, k = 4, 3
    parts = np.stack([matcore.random_psd(d, rng=rng) for _ in range(k)])
    coarse = parts.sum(axis=0)
    parts = parts / np.linalg.eigvalsh(coarse).max()
    coarse = parts.sum(axis=0)
    rho = matcore.random_density(d, rng=rng)
    s_op, _ = aligned_operators(coarse, rho)
    fam = fine_povm(s_op, parts)
    assert np.allclose(fam.sum(axis=0), np.eye(d), atol=1e-8)
    for e in fam:
        assert matcore.is_hermitian(e, atol=1e-9)
        assert np.linalg.eigvalsh(e).min() > -1e-8


def test_fine_povm_rank_deficient_support():
    # a coarse operator supported on one dimension routes the rest of the
    # space to the reserved null outcome
    d = 2
    parts = np.stack([np.diag([0.6, 0.0]).astype(complex),
                      np.diag([0.4, 0.0]).astype(complex)])
    coarse = parts.sum(axis=0)
    s_op = matcore.mat_sqrt(coarse)
    fam = fine_povm(s_op, parts)
    assert np.allclose(fam.sum(axis=0), np.eye(d), atol=1e-10)
    assert abs(fam[2][1, 1] - 1.0) < 1e-10


def test_dep_state_normalization_and_weight():
    rng = np.random.default_rng(4)
    d = 2
    s_op = matcore.random_matrix(d, rng=rng) * 0.5
    t_op = matcore.random_matrix(d, rng=rng) * 0.5
    psi = matcore.random_pure(d * d, rng=rng)
    state, weight = dep_state(s_op, t_op, psi)
    assert abs(np.linalg.norm(state) - 1.0) < 1e-12
    direct = np.kron(s_op, t_op) @ psi
    assert abs(weight - np.linalg.norm(direct) ** 2) < 1e-12
    assert np.linalg.norm(state * np.sqrt(weight) - direct) < 1e-12


def test_dep_state_zero_weight_marks_absent():
    d = 2
    state, weight = dep_state(np.zeros((d, d)), np.eye(d),
                              np.eye(d).reshape(-1) / np.sqrt(d))
    assert state is None and weight <= 1e-12


def test_aligned_operators_identity_coarse():
    rng = np.random.default_rng(5)
    rho = matcore.random_density(3, rng=rng)
    s_op, u = aligned_operators(np.eye(3, dtype=complex), rho)
    # sqrt(rho) is already PSD, so no rotation is needed
    assert np.allclose(s_op, np.eye(3), atol=1e-10)
    assert np.allclose(u, np.eye(3), atol=1e-10)


def test_fine_povm_single_full_rank_answer():
    rng = np.random.default_rng(6)
    d = 3
    coarse = matcore.random_psd(d, rng=rng)
    coarse = coarse / (np.linalg.eigvalsh(coarse).max() * 2.0)
    s_op = matcore.mat_sqrt(coarse)
    fam = fine_povm(s_op, coarse[None])
    # one answer carrying the whole coarse operator conjugates to identity
    assert np.allclose(fam[0], np.eye(d), atol=1e-9)
    assert np.abs(fam[1]).max() < 1e-9


def test_dep_state_identity_operators_keep_state():
    rng = np.random.default_rng(7)
    d = 3
    psi = matcore.random_pure(d * d, rng=rng)
    state, weight = dep_state(np.eye(d), np.eye(d), psi)
    assert abs(weight - 1.0) < 1e-12
    assert np.linalg.norm(state - psi) < 1e-12


def test_coarse_family_empty_holdout_is_identity():
    # with no held coordinates the answer sum is the full POVM completeness
    comp = DepBreakComputer(chsh(), 1, strategy_fixture("tsirelson", 1), ())
    fam = comp.coarse_family("alice", {"d1": ALICE, "m1": 0})
    assert fam.shape == (comp.d, comp.d)
    assert np.allclose(fam, np.eye(comp.d), atol=1e-12)


@pytest.fixture(scope="module")
def printing_computer():
    return DepBreakComputer(chsh(), 2, strategy_fixture("printing", 2), (1,))


def test_computer_rejects_bad_holdouts():
    g = chsh()
    s = strategy_fixture("detprod", 2)
    with pytest.raises(ValueError):
        DepBreakComputer(g, 2, s, (2,))
    with pytest.raises(ValueError):
        DepBreakComputer(g, 2, s, (0, 1))


def test_usefulness_check_printing(printing_computer):
    rep = printing_computer.usefulness_check()
    assert rep.contexts > 0
    assert rep.max_residual <= 1e-8
    assert rep.max_null_mass <= 1e-8
    assert rep.ok()


def test_weight_check_printing(printing_computer):
    rep = printing_computer.weight_check()
    assert rep.contexts > 0
    assert rep.max_abs_error <= 1e-8
    assert rep.max_sum_error <= 1e-8


def test_state_weights_match_brute_force_conditionals(printing_computer):
    """Every dependency-breaking weight equals the conditional probability
    of the held answers read off the extended table."""
    comp = printing_computer
    ext = comp.ext
    checked = 0
    for r, _pr in comp.r_support(0):
        omega = {k: v for k, v in r.items()
                 if not (k.startswith("a") or k.startswith("b"))}
        for x_i in range(2):
            for y_i in range(2):
                try:
                    cond = ext.given({**omega, "x1": x_i, "y1": y_i})
                except ZeroProbabilityEvent:
                    continue
                table = cond.marginal(("a2", "b2")).table
                _st, w = comp.state_for(0, r, x_i, y_i)
                expect = float(table[r["a2"], r["b2"]])
                assert abs(w - expect) < 1e-8
                checked += 1
    assert checked > 0


def test_sampleability_distances_printing_regression(printing_computer):
    rep = printing_computer.sampleability_distances()
    assert rep.d_alice < 1e-12
    assert abs(rep.d_bob - PRINTING_D_BOB) < 1e-10
    assert abs(rep.d_cross - PRINTING_D_BOB) < 1e-10
    assert rep.max_triangle_slack <= 1e-9
    assert rep.skipped_mass < 1e-12


def test_sampleability_distances_vanish_for_product_strategy():
    comp = DepBreakComputer(chsh(), 2, strategy_fixture("detprod", 2), (1,))
    rep = comp.sampleability_distances()
    assert max(rep.d_alice, rep.d_bob, rep.d_cross) < 1e-10


def test_xi_raz_check_printing(printing_computer):
    rep_b = printing_computer.xi_raz_check(side="bob")
    assert rep_b.ok
    assert abs(rep_b.avg_mi - PRINTING_XI_BOB) < 1e-10
    assert abs(rep_b.delta - PRINTING_DELTA) < 1e-10
    rep_a = printing_computer.xi_raz_check(side="alice")
    assert rep_a.ok
    assert rep_a.avg_mi < 1e-10   # Alice's fixture angles are question-blind
    with pytest.raises(ValueError):
        printing_computer.xi_raz_check(side="center")


def test_usefulness_check_tsirelson_exact():
    comp = DepBreakComputer(chsh(), 2, strategy_fixture("tsirelson", 2), (1,))
    rep = comp.usefulness_check()
    assert rep.max_residual <= 1e-10
    wrep = comp.weight_check()
    assert wrep.max_abs_error <= 1e-10
