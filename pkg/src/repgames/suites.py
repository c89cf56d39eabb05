"""Randomized verification sweeps for the matrix and entropy facts.

Each sweep draws seeded random instances, checks one inequality or
identity at its stated slack, and reports a CheckResult.  A nonzero
violation count in any result is a correctness failure, not noise.
"""

from __future__ import annotations

import numpy as np

from . import matcore
from .infotheory import (CheckResult, CQState, chain_rule_check,
                         raz_lemma_check, relative_entropy,
                         relative_min_entropy)

ANDO_ATOL = 1e-9
POWERS_ATOL = 1e-9
FVG_ATOL = 1e-9
PURE_ATOL = 1e-9
PINSKER_ATOL = 1e-9
MIN_ENTROPY_ATOL = 1e-9
RAZ_ATOL = 1e-8
CHAIN_ATOL = 1e-8


def _rng_for(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(tag)])


def sweep_ando(trials: int = 1000, seed: int = 0,
               dim_max: int = 8) -> CheckResult:
    """Purified two-sided expectations against the transposed trace form.

    For psi the symmetric purification of rho, the expectation of X (x) Y
    equals Tr(X sqrt(rho) Y_t sqrt(rho)) with the transpose taken in the
    eigenbasis of rho.
    """
    rng = _rng_for(seed, 1)
    worst = 0.0
    violations = 0
    for _ in range(trials):
        d = int(rng.integers(2, dim_max + 1))
        rho = matcore.random_density(d, rng=rng)
        psi = matcore.symmetric_purification(rho)
        x = matcore.random_matrix(d, rng)
        y = matcore.random_matrix(d, rng)
        lhs = complex(psi.conj() @ (np.kron(x, y) @ psi))
        w, v = matcore.eigh_desc(rho, "density matrix")
        y_t = v @ (v.conj().T @ y @ v).T @ v.conj().T
        sq = matcore.mat_sqrt(rho, "density matrix")
        rhs = complex(np.trace(x @ sq @ y_t @ sq))
        slack = abs(lhs - rhs)
        worst = max(worst, slack)
        if slack > ANDO_ATOL:
            violations += 1
    return CheckResult("ando_identity", trials, violations, worst)


def sweep_powers_stormer(trials: int = 1000, seed: int = 0,
                         dim_max: int = 8) -> CheckResult:
    """Frobenius gap of square roots against the trace gap of squares."""
    rng = _rng_for(seed, 2)
    worst = -np.inf
    violations = 0
    for _ in range(trials):
        d = int(rng.integers(2, dim_max + 1))
        a = matcore.random_psd(d, rng=rng)
        b = matcore.random_psd(d, rng=rng)
        lhs = float(matcore.frobenius(a - b)) ** 2
        rhs = float(matcore.trace_norm(a @ a - b @ b))
        worst = max(worst, lhs - rhs)
        if lhs > rhs + POWERS_ATOL:
            violations += 1
    return CheckResult("powers_stormer", trials, violations, float(worst))


def sweep_fuchs_van_de_graaf(trials: int = 1000, seed: int = 0,
                             dim_max: int = 8) -> CheckResult:
    """Both fidelity bounds on the trace distance."""
    rng = _rng_for(seed, 3)
    worst = -np.inf
    violations = 0
    for _ in range(trials):
        d = int(rng.integers(2, dim_max + 1))
        rho = matcore.random_density(d, rng=rng)
        sigma = matcore.random_density(d, rng=rng)
        m = matcore.metrics(rho, sigma)
        low = 1.0 - m.fidelity
        high = float(np.sqrt(max(0.0, 1.0 - m.fidelity ** 2)))
        slack = max(low - m.trace_distance, m.trace_distance - high)
        worst = max(worst, slack)
        if slack > FVG_ATOL:
            violations += 1
    return CheckResult("fuchs_van_de_graaf", trials, violations,
                       float(worst))


def sweep_pure_state_bound(trials: int = 1000, seed: int = 0,
                           dim_max: int = 8) -> CheckResult:
    """Trace norm of a pure-state difference against the vector gap."""
    rng = _rng_for(seed, 4)
    worst = -np.inf
    violations = 0
    for _ in range(trials):
        d = int(rng.integers(2, dim_max + 1))
        v = matcore.random_pure(d, rng)
        w = matcore.random_pure(d, rng)
        lhs = float(matcore.trace_norm(np.outer(v, v.conj())
                                       - np.outer(w, w.conj())))
        rhs = 2.0 * float(np.linalg.norm(v - w))
        worst = max(worst, lhs - rhs)
        if lhs > rhs + PURE_ATOL:
            violations += 1
    return CheckResult("pure_state_trace_bound", trials, violations,
                       float(worst))


def sweep_pinsker(trials: int = 1000, seed: int = 0,
                  dim_max: int = 8) -> CheckResult:
    """Half the squared trace norm against the relative entropy in bits.

    The nat-convention margin (relative entropy in nats minus the same
    quadratic term) is tracked in the details string.
    """
    rng = _rng_for(seed, 5)
    worst = -np.inf
    nat_margin = np.inf
    violations = 0
    ln2 = float(np.log(2.0))
    for _ in range(trials):
        d = int(rng.integers(2, dim_max + 1))
        rho = matcore.random_density(d, rng=rng)
        sigma = matcore.random_density(d, rng=rng)
        rel = relative_entropy(rho, sigma)
        l1 = 2.0 * float(matcore.trace_distance(rho, sigma))
        quad = 0.5 * l1 * l1
        worst = max(worst, quad - rel)
        nat_margin = min(nat_margin, rel * ln2 - quad)
        if quad > rel + PINSKER_ATOL:
            violations += 1
    return CheckResult("pinsker", trials, violations, float(worst),
                       details=f"min_nat_margin={nat_margin:.6e}")


def sweep_min_entropy(trials: int = 1000, seed: int = 0,
                      dim_max: int = 8) -> CheckResult:
    """Relative min-entropy dominates the relative entropy."""
    rng = _rng_for(seed, 6)
    worst = -np.inf
    violations = 0
    for _ in range(trials):
        d = int(rng.integers(2, dim_max + 1))
        rho = matcore.random_density(d, rng=rng)
        sigma = matcore.random_density(d, rng=rng)
        s_inf = relative_min_entropy(rho, sigma)
        s_rel = relative_entropy(rho, sigma)
        worst = max(worst, s_rel - s_inf)
        if s_inf + MIN_ENTROPY_ATOL < s_rel:
            violations += 1
    return CheckResult("min_entropy_dominates", trials, violations,
                       float(worst))


def _random_cq(k: int, d: int, rng: np.random.Generator) -> CQState:
    probs = rng.random(k) + 0.05
    probs /= probs.sum()
    states = np.stack([matcore.random_density(d, rng=rng) for _ in range(k)])
    return CQState(probs, states)


def sweep_raz(trials: int = 500, seed: int = 0) -> CheckResult:
    """Per-coordinate information sum against the product divergence."""
    rng = _rng_for(seed, 7)
    worst = -np.inf
    violations = 0
    for _ in range(trials):
        s1 = int(rng.integers(2, 4))
        s2 = int(rng.integers(2, 4))
        d = int(rng.integers(2, 5))
        cq = _random_cq(s1 * s2, d, rng)
        parts = []
        for size in (s1, s2):
            q = rng.random(size) + 0.05
            parts.append(q / q.sum())
        sigma_a = matcore.random_density(d, rng=rng)
        lhs, rhs, holds = raz_lemma_check(cq, (s1, s2), parts, sigma_a,
                                          RAZ_ATOL)
        if np.isfinite(rhs):
            worst = max(worst, lhs - rhs)
        if not holds:
            violations += 1
    return CheckResult("raz_lemma", trials, violations, float(worst))


def sweep_chain_rule(trials: int = 1000, seed: int = 0) -> CheckResult:
    """Decomposition of the cq relative entropy into two stages."""
    rng = _rng_for(seed, 8)
    worst = -np.inf
    violations = 0
    for _ in range(trials):
        k = int(rng.integers(2, 5))
        d = int(rng.integers(2, 4))
        cq_prime = _random_cq(k, d, rng)
        cq = _random_cq(k, d, rng)
        lhs, rhs, holds = chain_rule_check(cq_prime, cq, CHAIN_ATOL)
        if np.isfinite(lhs) and np.isfinite(rhs):
            worst = max(worst, abs(lhs - rhs))
        if not holds:
            violations += 1
    return CheckResult("chain_rule", trials, violations, float(worst))


SWEEPS = {
    "ando": sweep_ando,
    "powers_stormer": sweep_powers_stormer,
    "fuchs_van_de_graaf": sweep_fuchs_van_de_graaf,
    "pure_state_bound": sweep_pure_state_bound,
    "pinsker": sweep_pinsker,
    "min_entropy": sweep_min_entropy,
    "raz": sweep_raz,
    "chain_rule": sweep_chain_rule,
}


def run_matrix_suite(trials: int = 1000, seed: int = 0) -> list:
    return [sweep_ando(trials, seed), sweep_powers_stormer(trials, seed),
            sweep_fuchs_van_de_graaf(trials, seed),
            sweep_pure_state_bound(trials, seed)]


def run_entropy_suite(trials: int = 1000, seed: int = 0,
                      raz_trials: int = 500) -> list:
    return [sweep_pinsker(trials, seed), sweep_min_entropy(trials, seed),
            sweep_raz(raz_trials, seed), sweep_chain_rule(trials, seed)]


def run_all(trials: int = 1000, seed: int = 0,
            raz_trials: int = 500) -> list:
    return run_matrix_suite(trials, seed) + run_entropy_suite(
        trials, seed, raz_trials)
