import pytest

from repgames import suites

SWEEPS = [
    suites.sweep_ando,
    suites.sweep_powers_stormer,
    suites.sweep_fuchs_van_de_graaf,
    suites.sweep_pure_state_bound,
    suites.sweep_pinsker,
    suites.sweep_min_entropy,
    suites.sweep_chain_rule,
]


@pytest.mark.parametrize("sweep", SWEEPS, ids=lambda f: f.__name__)
def test_sweep_has_no_violations(sweep):
    res = sweep(trials=60, seed=0)
    assert res.ok, res
    assert res.trials == 60
    assert res.violations == 0


def test_sweep_raz_has_no_violations():
    res = suites.sweep_raz(trials=40, seed=0)
    assert res.ok, res
    assert res.trials == 40


@pytest.mark.parametrize("sweep", SWEEPS, ids=lambda f: f.__name__)
def test_sweep_deterministic_per_seed(sweep):
    r1 = sweep(trials=25, seed=11)
    r2 = sweep(trials=25, seed=11)
    assert r1.max_slack == r2.max_slack
    r3 = sweep(trials=25, seed=12)
    assert r3.max_slack != r1.max_slack


def test_sweep_names_are_distinct():
    names = [s(trials=5, seed=0).name for s in SWEEPS]
    names.append(suites.sweep_raz(trials=5, seed=0).name)
    assert len(set(names)) == len(names)


def test_matrix_suite_composition():
    checks = suites.run_matrix_suite(trials=10, seed=0)
    assert len(checks) == 4
    assert all(c.ok for c in checks)


def test_entropy_suite_composition():
    checks = suites.run_entropy_suite(trials=10, seed=0, raz_trials=5)
    assert len(checks) == 4
    assert all(c.ok for c in checks)


def test_run_all_concatenates():
    checks = suites.run_all(trials=10, seed=0, raz_trials=5)
    assert len(checks) == 8
    assert all(c.ok for c in checks)
