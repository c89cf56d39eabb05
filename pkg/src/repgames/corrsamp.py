"""Correlated sampling: shared-randomness rejection and embezzlement.

The classical protocol lets two players holding nearby distributions accept
a common sample from a shared stream without communication.  The quantum
analogue aligns a large embezzlement state against each player's own
description of a target state; everything is computed in Schmidt
coefficient space so junk dimensions up to 2^20 stay cheap.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import matcore
from .prob import FiniteDistribution

MAX_EMBEZZLE_DIM = 2 ** 24
GRID_FLOOR = 1e-12


class SharedRandomStream:
    """Deterministic stream of (universe element, uniform real) pairs.

    The same (seed, stream_id) always yields the same stream; distinct
    stream ids give independent streams for parallel runs.
    """

    def __init__(self, seed: int, stream_id: int = 0, block: int = 256):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.block = int(block)
        self._rng = np.random.default_rng([self.seed, self.stream_id])

    def draw_block(self, universe_size: int) -> tuple:
        u = self._rng.integers(0, universe_size, size=self.block)
        p = self._rng.random(self.block)
        return u, p

    def pairs(self, universe_size: int):
        while True:
            u, p = self.draw_block(universe_size)
            yield from zip(u.tolist(), p.tolist())


@dataclass(frozen=True)
class CorrSampleResult:
    a_index: int
    b_index: int
    a_element: tuple | None
    b_element: tuple | None
    agreed: bool
    failed: bool
    draws_used: int


def _aligned_tables(p: FiniteDistribution, q: FiniteDistribution) -> tuple:
    if set(p.names) != set(q.names):
        raise ValueError("distributions must share the same variables")
    q = q.reordered(p.names)
    return p.table.ravel(), q.table.ravel(), p.table.shape


def classical_corr_sample(p: FiniteDistribution, q: FiniteDistribution,
                          stream: SharedRandomStream,
                          max_draws: int = 10_000) -> CorrSampleResult:
    """One run of the shared-stream rejection protocol.

    Each player accepts the first stream pair (u, t) with t at most their
    own probability of u.  Agreement means both accepted the same draw.
    Exhausting max_draws on either side gives an explicit failure result.
    """
    pt, qt, shape = _aligned_tables(p, q)
    size = pt.size
    a_idx = b_idx = -1
    a_u = b_u = -1
    used = 0
    for u, t in stream.pairs(size):
        if a_idx < 0 and t < pt[u]:
            a_idx, a_u = used, int(u)
        if b_idx < 0 and t < qt[u]:
            b_idx, b_u = used, int(u)
        used += 1
        if (a_idx >= 0 and b_idx >= 0) or used >= max_draws:
            break
    failed = a_idx < 0 or b_idx < 0
    elem = lambda flat: tuple(int(v) for v in np.unravel_index(flat, shape))
    return CorrSampleResult(
        a_idx, b_idx,
        elem(a_u) if a_idx >= 0 else None,
        elem(b_u) if b_idx >= 0 else None,
        bool(a_idx >= 0 and a_idx == b_idx), bool(failed), used)


@dataclass
class CorrSampleStats:
    n_runs: int
    agree_rate: float
    fail_rate: float
    tv_a: float
    tv_b: float
    chi2_pvalue_a: float
    counts_a: np.ndarray = field(repr=False, default=None)
    counts_b: np.ndarray = field(repr=False, default=None)


def corr_sample_experiment(p: FiniteDistribution, q: FiniteDistribution,
                           n_runs: int, seed: int,
                           max_draws: int = 10_000) -> CorrSampleStats:
    """Vectorized batch of independent protocol runs (one stream per run)."""
    pt, qt, _shape = _aligned_tables(p, q)
    size = pt.size
    rng = np.random.default_rng([int(seed)])
    a_idx = np.full(n_runs, -1, dtype=np.int64)
    b_idx = np.full(n_runs, -1, dtype=np.int64)
    a_u = np.full(n_runs, -1, dtype=np.int64)
    b_u = np.full(n_runs, -1, dtype=np.int64)
    open_mask = np.ones(n_runs, dtype=bool)
    for t in range(max_draws):
        if not open_mask.any():
            break
        u = rng.integers(0, size, size=n_runs)
        pr = rng.random(n_runs)
        hit_a = open_mask & (a_idx < 0) & (pr < pt[u])
        hit_b = open_mask & (b_idx < 0) & (pr < qt[u])
        a_idx[hit_a] = t
        a_u[hit_a] = u[hit_a]
        b_idx[hit_b] = t
        b_u[hit_b] = u[hit_b]
        open_mask &= (a_idx < 0) | (b_idx < 0)
    ok = (a_idx >= 0) & (b_idx >= 0)
    agree = ok & (a_idx == b_idx)
    counts_a = np.bincount(a_u[a_idx >= 0], minlength=size).astype(float)
    counts_b = np.bincount(b_u[b_idx >= 0], minlength=size).astype(float)
    tot_a = counts_a.sum()
    tot_b = counts_b.sum()
    tv_a = 0.5 * float(np.abs(counts_a / tot_a - pt).sum()) if tot_a else 1.0
    tv_b = 0.5 * float(np.abs(counts_b / tot_b - qt).sum()) if tot_b else 1.0
    keep = pt > 0
    pval = float(stats.chisquare(counts_a[keep],
                                 tot_a * pt[keep] / pt[keep].sum()).pvalue)
    return CorrSampleStats(n_runs, float(agree.sum()) / n_runs,
                           1.0 - float(ok.sum()) / n_runs, tv_a, tv_b, pval,
                           counts_a, counts_b)


@dataclass(frozen=True)
class EmbezzlementVector:
    """Coefficients (1/sqrt(j)) / sqrt(H_N), j = 1..N, stored once."""

    dim: int
    coefficients: np.ndarray = field(repr=False)

    def norm_error(self) -> float:
        return abs(float(self.coefficients @ self.coefficients) - 1.0)


@functools.lru_cache(maxsize=16)
def _embezzlement_cached(n: int) -> np.ndarray:
    j = np.arange(1, n + 1, dtype=np.float64)
    h_n = float(np.sum(1.0 / j))
    c = 1.0 / np.sqrt(j * h_n)
    c.flags.writeable = False
    return c


def embezzlement(n: int) -> EmbezzlementVector:
    if n < 1:
        raise ValueError("dimension must be at least 1")
    if n > MAX_EMBEZZLE_DIM:
        raise ValueError("dimension exceeds the structural cap")
    return EmbezzlementVector(int(n), _embezzlement_cached(int(n)))


@dataclass(frozen=True, eq=False)
class AlignmentIsometry:
    """Local alignment of an embezzlement state toward one player's target.

    perm[j] is the flat (target k, junk l) slot that the j-th largest
    embezzlement coefficient is routed to.  rot_left and rot_right are the
    target state's two local Schmidt bases; the player acting on the left
    factor applies rot_left on the target register, the right player
    rot_right.  coeffs_exact holds the unrounded Schmidt coefficients.
    """

    d: int
    d_prime: int
    alpha: float
    perm: np.ndarray = field(repr=False)
    rot_left: np.ndarray = field(repr=False)
    rot_right: np.ndarray = field(repr=False)
    coeffs_exact: np.ndarray = field(repr=False)
    coeffs_grid: np.ndarray = field(repr=False)


def _grid_round(s: np.ndarray, alpha: float) -> np.ndarray:
    out = np.zeros_like(s)
    pos = s > GRID_FLOOR
    g = np.rint(-np.log(s[pos]) / math.log1p(alpha))
    g = np.maximum(g, 0.0)
    out[pos] = np.exp(-g * math.log1p(alpha))
    norm = np.linalg.norm(out)
    if norm > 0.0:
        out /= norm
    return out


def _canonical_degenerate_blocks(u: np.ndarray, s: np.ndarray,
                                 vh: np.ndarray,
                                 rel_tol: float = 1e-4) -> tuple:
    """Pin the factorization basis inside repeated-singular-value blocks.

    Within such a block the decomposition is free up to a unitary mixing,
    and two parties whose inputs differ by rounding noise would otherwise
    land on unrelated bases.  Diagonalizing a fixed reference observable
    (the coordinate index operator) inside each block makes the choice a
    continuous deterministic function of the input whenever the reference
    spectrum inside the block is simple.  The grouping tolerance sits far
    below the coefficient rounding grid, so merging near-ties perturbs the
    factorization by less than the rounding step itself.
    """
    d = s.size
    if d < 2:
        return u, vh
    u = u.copy()
    vh = vh.copy()
    tol = rel_tol * float(s[0]) if float(s[0]) > 0.0 else 0.0
    ref = np.arange(u.shape[0], dtype=np.float64)
    start = 0
    for stop in range(1, d + 1):
        if stop < d and s[stop - 1] - s[stop] <= tol:
            continue
        if stop - start > 1:
            blk = u[:, start:stop]
            g = (blk.conj().T * ref) @ blk
            g = (g + g.conj().T) / 2
            _vals, z = np.linalg.eigh(g)
            w = blk @ z
            for c in range(w.shape[1]):
                nz = np.flatnonzero(np.abs(w[:, c]) > 1e-12)
                if nz.size:
                    ph = w[nz[0], c] / abs(w[nz[0], c])
                    w[:, c] = w[:, c] / ph
                    z[:, c] = z[:, c] / ph
            u[:, start:stop] = w
            vh[start:stop, :] = z.conj().T @ vh[start:stop, :]
        start = stop
    return u, vh


def qcs_isometry(own_state: np.ndarray, d_prime: int,
                 alpha: float = 0.01) -> AlignmentIsometry:
    """Alignment isometry for one player's description of the target.

    Schmidt coefficients are rounded to the grid (1+alpha)^-g, multiplied
    into the junk embezzlement coefficients, and the resulting slot values
    are matched in sorted order (ties broken by slot index) against the
    big embezzlement coefficients.
    """
    own_state = np.asarray(own_state, dtype=np.complex128).ravel()
    d2 = own_state.size
    d = int(round(math.sqrt(d2)))
    if d * d != d2:
        raise ValueError("state length must be a perfect square")
    if abs(np.linalg.norm(own_state) - 1.0) > 1e-9:
        raise ValueError("state must be normalized")
    if d * d_prime > MAX_EMBEZZLE_DIM:
        raise ValueError("d * d_prime exceeds the structural cap")
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    u, s, vh = matcore.svd_canonical(own_state.reshape(d, d))
    s = np.clip(s, 0.0, None)
    u, vh = _canonical_degenerate_blocks(u, s, vh)
    s_grid = _grid_round(s, alpha)
    junk = embezzlement(d_prime).coefficients
    tau = np.multiply.outer(s_grid, junk).ravel()
    slots = np.arange(d * d_prime, dtype=np.int64)
    order = np.lexsort((slots % d_prime, slots // d_prime, -tau))
    return AlignmentIsometry(d, int(d_prime), float(alpha),
                             order.astype(np.int64), u, vh.T,
                             s.copy(), s_grid)


@dataclass
class QCSResult:
    produced_target: np.ndarray
    err: float
    overlap: float


def qcs_error_against(iso_a: AlignmentIsometry, iso_b: AlignmentIsometry,
                      target_state: np.ndarray) -> float:
    """Distance between the produced vector and an explicit target state.

    The target is any normalized bipartite state on the two d-dimensional
    factors; it is paired with a fresh junk embezzlement state.  Computed
    from coefficients only, no dense product vector.
    """
    d, dp = iso_a.d, iso_a.d_prime
    if (d, dp) != (iso_b.d, iso_b.d_prime):
        raise ValueError("isometry dimensions do not match")
    tgt = np.asarray(target_state, dtype=np.complex128).reshape(d, d)
    big = embezzlement(d * dp).coefficients
    junk = embezzlement(dp).coefficients
    k_a, l_a = iso_a.perm // dp, iso_a.perm % dp
    k_b, l_b = iso_b.perm // dp, iso_b.perm % dp
    same = l_a == l_b
    g = iso_a.rot_left.T @ tgt.conj() @ iso_b.rot_right
    overlap = np.sum(big[same] * junk[l_a[same]]
                     * g[k_a[same], k_b[same]])
    return math.sqrt(max(0.0, 2.0 - 2.0 * float(np.real(overlap))))


def _class_keys(perm: np.ndarray, other_perm: np.ndarray, d: int,
                d_prime: int, coeffs: np.ndarray) -> list:
    """Split slot assignments into target-pair classes with junk keys."""
    k_a, l_a = perm // d_prime, perm % d_prime
    k_b, l_b = other_perm // d_prime, other_perm % d_prime
    pos = k_a * d + k_b
    key = l_a.astype(np.int64) * d_prime + l_b.astype(np.int64)
    classes = []
    for p in range(d * d):
        sel = pos == p
        keys = key[sel]
        vals = coeffs[sel]
        srt = np.argsort(keys)
        classes.append((keys[srt], vals[srt]))
    return classes


def qcs_execute(iso_a: AlignmentIsometry, iso_b: AlignmentIsometry,
                target_dim: int) -> QCSResult:
    """Outcome of both alignment isometries acting on the shared state.

    Works entirely on coefficients: the reduced state on the two target
    factors is accumulated by matching junk-index keys between slot
    classes, then rotated by the players' local bases.  err is the
    Euclidean distance between the full produced vector and iso_a's
    target state paired with a fresh junk embezzlement state.
    """
    d, dp = iso_a.d, iso_a.d_prime
    if (d, dp) != (iso_b.d, iso_b.d_prime) or d != target_dim:
        raise ValueError("isometry dimensions do not match")
    big = embezzlement(d * dp).coefficients
    junk = embezzlement(dp).coefficients
    k_a, l_a = iso_a.perm // dp, iso_a.perm % dp
    k_b, l_b = iso_b.perm // dp, iso_b.perm % dp

    same = l_a == l_b
    cross = iso_a.rot_right.conj().T @ iso_b.rot_right
    overlap = np.sum(big[same] * iso_a.coeffs_exact[k_a[same]]
                     * junk[l_a[same]] * cross[k_a[same], k_b[same]])
    err = math.sqrt(max(0.0, 2.0 - 2.0 * float(np.real(overlap))))

    classes = _class_keys(iso_a.perm, iso_b.perm, d, dp, big)
    rho = np.zeros((d * d, d * d))
    for p in range(d * d):
        keys_p, vals_p = classes[p]
        for q in range(p, d * d):
            keys_q, vals_q = classes[q]
            if keys_p.size == 0 or keys_q.size == 0:
                continue
            idx = np.searchsorted(keys_q, keys_p)
            idx_ok = idx < keys_q.size
            match = np.zeros(keys_p.size, dtype=bool)
            match[idx_ok] = keys_q[idx[idx_ok]] == keys_p[idx_ok]
            val = float(np.sum(vals_p[match] * vals_q[idx[match]]))
            rho[p, q] = val
            rho[q, p] = val
    k = np.kron(iso_a.rot_left, iso_b.rot_right)
    produced = k @ rho.astype(np.complex128) @ k.conj().T
    produced = (produced + produced.conj().T) / 2
    return QCSResult(produced, err, float(np.real(overlap)))
