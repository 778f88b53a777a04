"""GLRT block demodulation for the quantized noncoherent channel.

The decision rule picks the input whose best-case metric max_phi P(z | x, phi)
is largest. Two structural facts keep the search tiny. First, adding one
constellation step to every symbol only shifts the maximizing phase, so
solutions come in constant-addition families and only one 2*pi/M period of
phi needs scanning. Second, within that period the per-symbol coherent
decision switches to the next constellation point exactly once, at a
"crossover" angle determined by the observed sector alone; sorting the
distinct crossover angles splits the period into segments whose coherent
decisions are the only GLRT candidates.

For undithered configs the observation further reduces: z = a*q + r with
r = z mod a, the winner for z is the winner for r plus q. Dither breaks that
reduction (each position carries its own rotation), so the dithered path
sweeps per-symbol crossovers on the full observation, at most one per symbol.

Metrics are evaluated on a phi grid whose size is a multiple of K (exact
symmetry on the grid), then polished by golden-section refinement of a smooth
log-likelihood interpolant to ~1e-6 rad. Exactly tied candidates (the
signature failure of K = 2M without dither) are flagged when the top-two
relative gap falls below tie_tol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import product

import numpy as np
from scipy.optimize import brentq

from .core import TWO_PI, SystemConfig
from .transition import TransitionKernel, kernel_bank_for, kernel_for, sector_probability

DEFAULT_TIE_TOL = 1e-6
_SCAN_TARGET = 720
# Candidates within this log-metric window of the grid best get refined; a
# grid max can undershoot the true max by at most curvature * (step/2)^2,
# far inside this margin at every tested SNR.
_REFINE_LOG_WINDOW = 0.105
_GOLDEN_ITERS = 26
_ALPHA_DEDUPE = 1e-12


def default_n_scan(K: int, target: int = _SCAN_TARGET) -> int:
    """Smallest multiple of K at or above the scan target."""
    return K * math.ceil(target / K)


@dataclass(frozen=True)
class GlrtCandidate:
    """One evaluated hypothesis: input vector, best phase, metric value."""

    x: tuple[int, ...]
    phi_star: float
    metric: float


@dataclass(frozen=True)
class GlrtResult:
    """Demodulation outcome with diagnostics.

    winner is the selected input (ties resolved by the caller's rng when
    given, else lowest candidate index); tie_gap is the relative gap between
    the top two metrics (None with a single candidate).
    """

    winner: tuple[int, ...]
    candidates: tuple[GlrtCandidate, ...]
    tie: bool
    tie_gap: float | None
    crossovers: tuple[float, ...]


@dataclass
class DemodRecord:
    """Deterministic per-observation demod work, reusable across blocks."""

    candidates: np.ndarray  # (n_cand, L)
    log_metrics: np.ndarray  # (n_cand,)
    phi_stars: np.ndarray  # (n_cand,)
    winner_index: int
    tie_indices: np.ndarray
    tie: bool
    tie_gap: float | None
    crossovers: np.ndarray


# ---- crossover geometry ---------------------------------------------------


def _symbol_crossovers(Z: np.ndarray, config: SystemConfig) -> np.ndarray:
    """Per-symbol crossover angles in (0, 2*pi/M], shape like Z.

    The coherent per-symbol decision switches where the rotated sector
    midpoint is equidistant between adjacent constellation points:
    alpha = (midpoint - theta0 - dither - pi/M) mod 2*pi/M, with 0 folded to
    the top of the window.
    """
    K, M = config.K, config.M
    window = TWO_PI / M
    mid = (Z + 0.5) * (TWO_PI / K)
    alpha = np.mod(mid - config.theta0 - np.asarray(config.dither) - math.pi / M, window)
    return np.where(alpha < _ALPHA_DEDUPE, alpha + window, alpha)


def crossover_angles(
    z,
    config: SystemConfig,
    validate: bool = False,
    root_tol: float = 1e-9,
) -> np.ndarray:
    """Sorted distinct crossover angles of a block, in (0, 2*pi/M].

    validate=True re-derives each angle as the root of the likelihood
    equality between the two adjacent constellation points (brentq on the
    quadrature path) and raises if the geometric value is off by more than
    root_tol.
    """
    z = np.asarray(z, dtype=np.int64)
    if z.size != config.L:
        raise ValueError(f"z must have L={config.L} entries")
    if np.any((z < 0) | (z >= config.K)):
        raise ValueError("z components must lie in 0..K-1")
    alphas = _symbol_crossovers(z[None, :], config)[0]
    order = np.argsort(alphas)
    distinct = []
    for idx in order:
        if not distinct or alphas[idx] - distinct[-1][0] > _ALPHA_DEDUPE:
            distinct.append((alphas[idx], idx))
    if validate:
        values = np.array([v for v, _ in distinct])
        gaps = np.diff(np.concatenate([values, [values[0] + TWO_PI / config.M]]))
        min_gap = float(gaps.min()) if values.size > 1 else TWO_PI / config.M
        for value, sym in distinct:
            _validate_crossover(value, int(z[sym]), sym, config, min_gap, root_tol)
    return np.array([v for v, _ in distinct])


def _validate_crossover(
    alpha: float, z_sym: int, sym: int, config: SystemConfig, gap: float, root_tol: float
) -> None:
    cfg_sym = replace(
        config, L=1, dither=None, theta0=config.theta0 + config.dither[sym]
    )
    span = 0.49 * min(gap, TWO_PI / config.M)
    zeta = z_sym * (TWO_PI / config.K) - cfg_sym.theta0
    half_w = math.pi / config.K
    probe = alpha - 1e-6 * TWO_PI / config.M
    m_lo = int(round((zeta + half_w - probe) * config.M / TWO_PI)) % config.M
    # the coherent argmax decreases with phi, so crossing alpha hands the
    # decision from m_lo to m_lo - 1
    m_hi = (m_lo - 1) % config.M

    def diff(phi: float) -> float:
        return sector_probability(z_sym, m_lo, phi, cfg_sym) - sector_probability(
            z_sym, m_hi, phi, cfg_sym
        )

    root = brentq(diff, alpha - span, alpha + span, xtol=1e-12)
    if abs(root - alpha) > root_tol:
        raise RuntimeError(
            f"crossover mismatch at symbol {sym}: geometric {alpha!r}, root {root!r}"
        )


# ---- metric evaluation ------------------------------------------------------


def _golden_max(f, lo: np.ndarray, hi: np.ndarray, iters: int = _GOLDEN_ITERS):
    """Vectorized golden-section maximization over [lo, hi] per element."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    for _ in range(iters):
        span = hi - lo
        x1 = hi - invphi * span
        x2 = lo + invphi * span
        keep_low = f(x1) >= f(x2)
        hi = np.where(keep_low, x2, hi)
        lo = np.where(keep_low, x1, lo)
    mid = 0.5 * (lo + hi)
    return mid, f(mid)


def _evaluate_candidates(
    Z: np.ndarray,
    C: np.ndarray,
    valid: np.ndarray,
    kernels: tuple[TransitionKernel, ...],
    n_scan: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Refined (log metric, phi_star) for candidate array C (n, D, L).

    Grid-scans every candidate, then refines those within the contention
    window of each row's best; the rest keep grid values (their true maxima
    cannot overtake the window).
    """
    n, D, L = C.shape
    K = kernels[0].K
    a = kernels[0].a
    S = (Z[:, None, :] - a * C) % K

    scan_grids = [k.scan_log_table(n_scan) for k in kernels]
    phi_scan = scan_grids[0][0]
    log_tables = [g[1] for g in scan_grids]

    grid_val = np.full((n, D), -np.inf)
    grid_arg = np.zeros((n, D), dtype=np.int64)
    chunk = max(1, 4_000_000 // (max(D, 1) * n_scan))
    for lo_i in range(0, n, chunk):
        hi_i = min(lo_i + chunk, n)
        acc = log_tables[0][S[lo_i:hi_i, :, 0], :].copy()
        for l in range(1, L):
            acc += log_tables[l][S[lo_i:hi_i, :, l], :]
        grid_val[lo_i:hi_i] = acc.max(axis=2)
        grid_arg[lo_i:hi_i] = acc.argmax(axis=2)
    grid_val[~valid] = -np.inf

    log_metric = grid_val.copy()
    phi_star = phi_scan[grid_arg]

    best = grid_val.max(axis=1, keepdims=True)
    refine = valid & (grid_val >= best - _REFINE_LOG_WINDOW) & np.isfinite(grid_val)
    if refine.any():
        rows, cands = np.nonzero(refine)
        offsets = S[rows, cands, :] * (TWO_PI / K) - np.array(
            [k.theta0 for k in kernels]
        )[None, :]
        splines = [k.log_offset_interpolant() for k in kernels]

        def f(phi_arr: np.ndarray) -> np.ndarray:
            vals = np.zeros(phi_arr.shape)
            for l in range(L):
                vals += splines[l](offsets[:, l] - phi_arr)
            return vals

        centers = phi_scan[grid_arg[rows, cands]]
        delta = TWO_PI / n_scan
        phi_ref, val_ref = _golden_max(f, centers - delta, centers + delta)
        log_metric[rows, cands] = val_ref
        phi_star[rows, cands] = np.mod(phi_ref, TWO_PI)
    return log_metric, phi_star


def _relative_gap(log_top: float, log_other: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        return np.abs(np.expm1(log_other - log_top))


def demodulate_rows(
    Z: np.ndarray,
    config: SystemConfig,
    kernels: tuple[TransitionKernel, ...],
    n_scan: int | None = None,
    tie_tol: float = DEFAULT_TIE_TOL,
) -> list[DemodRecord]:
    """Run the candidate sweep on each row of Z (n, L).

    Z rows are taken as-is: pass residues with an undithered kernel bank (the
    caller re-adds q), or full observations with a dithered bank.
    """
    Z = np.asarray(Z, dtype=np.int64)
    n, L = Z.shape
    M, K = config.M, config.K
    if n_scan is None:
        n_scan = default_n_scan(K)

    alphas = np.sort(_symbol_crossovers(Z, config), axis=1)
    dup = np.zeros_like(alphas, dtype=bool)
    dup[:, 1:] = np.diff(alphas, axis=1) <= _ALPHA_DEDUPE
    compact = np.where(dup, np.inf, alphas)
    compact = np.sort(compact, axis=1)
    n_distinct = (~dup).sum(axis=1)
    D = int(n_distinct.max())
    edges = compact[:, :D]
    prev = np.concatenate([np.zeros((n, 1)), edges[:, : D - 1]], axis=1)
    probes = 0.5 * (prev + edges)
    valid = np.arange(D)[None, :] < n_distinct[:, None]

    zeta = Z * (TWO_PI / K) - config.theta0 - np.asarray(config.dither)[None, :]
    half_w = math.pi / K
    args = (zeta[:, None, :] + half_w - np.where(valid, probes, 0.0)[:, :, None]) * (
        M / TWO_PI
    )
    C = np.round(args).astype(np.int64) % M

    log_metric, phi_star = _evaluate_candidates(Z, C, valid, kernels, n_scan)

    records = []
    for i in range(n):
        d = int(n_distinct[i])
        lm = log_metric[i, :d]
        winner = int(np.argmax(lm))
        gaps = _relative_gap(lm[winner], lm)
        tie_idx = np.nonzero(gaps <= tie_tol)[0]
        if d > 1:
            others = np.delete(gaps, winner)
            tie_gap = float(others.min())
        else:
            tie_gap = None
        records.append(
            DemodRecord(
                candidates=C[i, :d],
                log_metrics=lm,
                phi_stars=phi_star[i, :d],
                winner_index=winner,
                tie_indices=tie_idx,
                tie=tie_idx.size > 1,
                tie_gap=tie_gap,
                crossovers=edges[i, :d].copy(),
            )
        )
    return records


def _result_from_record(
    rec: DemodRecord,
    shift: np.ndarray,
    M: int,
    rng: np.random.Generator | None,
) -> GlrtResult:
    cands = tuple(
        GlrtCandidate(
            x=tuple(int(v) for v in (rec.candidates[j] + shift) % M),
            phi_star=float(rec.phi_stars[j]),
            metric=float(math.exp(rec.log_metrics[j])) if np.isfinite(rec.log_metrics[j]) else 0.0,
        )
        for j in range(rec.candidates.shape[0])
    )
    idx = rec.winner_index
    if rec.tie and rng is not None:
        idx = int(rng.choice(rec.tie_indices))
    return GlrtResult(
        winner=cands[idx].x,
        candidates=cands,
        tie=rec.tie,
        tie_gap=rec.tie_gap,
        crossovers=tuple(float(v) for v in rec.crossovers),
    )


# ---- public entry points ---------------------------------------------------


def glrt_demodulate(
    z,
    config: SystemConfig,
    kernel: TransitionKernel | None = None,
    n_scan: int | None = None,
    tie_tol: float = DEFAULT_TIE_TOL,
    rng: np.random.Generator | None = None,
) -> GlrtResult:
    """Demodulate one undithered block via the residue reduction.

    Solves the sweep on r = z mod a and adds back q = z div a per position;
    at most a candidates are evaluated. Ties are resolved uniformly from rng
    when given, else deterministically by candidate order.
    """
    if config.is_dithered:
        raise ValueError("glrt_demodulate requires an undithered config")
    z = np.asarray(z, dtype=np.int64)
    if z.size != config.L:
        raise ValueError(f"z must have L={config.L} entries")
    if np.any((z < 0) | (z >= config.K)):
        raise ValueError("z components must lie in 0..K-1")
    if kernel is None:
        kernel = kernel_for(config)
    r = z % config.a
    q = z // config.a
    rec = demodulate_rows(r[None, :], config, (kernel,) * config.L, n_scan, tie_tol)[0]
    return _result_from_record(rec, q, config.M, rng)


def glrt_demodulate_dithered(
    z,
    config: SystemConfig,
    kernels: tuple[TransitionKernel, ...] | None = None,
    n_scan: int | None = None,
    tie_tol: float = DEFAULT_TIE_TOL,
    rng: np.random.Generator | None = None,
) -> GlrtResult:
    """Demodulate one block under the config's dither (no residue reduction).

    Per-symbol rotations give up to L distinct crossover angles, hence at most
    L + 1 candidates per 2*pi/M period.
    """
    z = np.asarray(z, dtype=np.int64)
    if z.size != config.L:
        raise ValueError(f"z must have L={config.L} entries")
    if np.any((z < 0) | (z >= config.K)):
        raise ValueError("z components must lie in 0..K-1")
    if kernels is None:
        kernels = kernel_bank_for(config)
    rec = demodulate_rows(z[None, :], config, kernels, n_scan, tie_tol)[0]
    return _result_from_record(rec, np.zeros(config.L, dtype=np.int64), config.M, rng)


def glrt_metric(
    z,
    x,
    config: SystemConfig,
    kernels: tuple[TransitionKernel, ...] | None = None,
    n_scan: int | None = None,
) -> GlrtCandidate:
    """max_phi P(z | x, phi) for one explicit hypothesis (always refined)."""
    z = np.asarray(z, dtype=np.int64)
    x = np.asarray(x, dtype=np.int64)
    if kernels is None:
        kernels = kernel_bank_for(config)
    if n_scan is None:
        n_scan = default_n_scan(config.K)
    valid = np.ones((1, 1), dtype=bool)
    lm, ph = _evaluate_candidates(z[None, :], x[None, None, :], valid, kernels, n_scan)
    metric = float(math.exp(lm[0, 0])) if np.isfinite(lm[0, 0]) else 0.0
    return GlrtCandidate(x=tuple(int(v) for v in x), phi_star=float(ph[0, 0]), metric=metric)


def brute_force_glrt(
    z,
    config: SystemConfig,
    kernels: tuple[TransitionKernel, ...] | None = None,
    n_scan: int | None = None,
    tie_tol: float = DEFAULT_TIE_TOL,
) -> GlrtResult:
    """Oracle demodulator: score every input, without the candidate sweep.

    Adding a constant to every symbol leaves the metric exactly invariant
    (it only shifts the maximizing phase), so inputs are enumerated with the
    first symbol pinned to 0, one representative per constant-addition orbit;
    the tie flag then reports genuine cross-orbit ties rather than firing on
    every orbit. Exponential in L by construction.
    """
    z = np.asarray(z, dtype=np.int64)
    if z.size != config.L:
        raise ValueError(f"z must have L={config.L} entries")
    if config.M ** (config.L - 1) > 300_000:
        raise ValueError("brute-force input space too large")
    if kernels is None:
        kernels = kernel_bank_for(config)
    if n_scan is None:
        n_scan = default_n_scan(config.K)
    tails = np.array(list(product(range(config.M), repeat=config.L - 1)), dtype=np.int64)
    C = np.concatenate([np.zeros((tails.shape[0], 1), dtype=np.int64), tails], axis=1)[
        None, :, :
    ]
    valid = np.ones((1, C.shape[1]), dtype=bool)
    lm, ph = _evaluate_candidates(z[None, :], C, valid, kernels, n_scan)
    lm, ph = lm[0], ph[0]
    winner = int(np.argmax(lm))
    gaps = _relative_gap(lm[winner], lm)
    tie_idx = np.nonzero(gaps <= tie_tol)[0]
    others = np.delete(gaps, winner)
    cands = tuple(
        GlrtCandidate(
            x=tuple(int(v) for v in C[0, j]),
            phi_star=float(ph[j]),
            metric=float(math.exp(lm[j])) if np.isfinite(lm[j]) else 0.0,
        )
        for j in range(C.shape[1])
    )
    return GlrtResult(
        winner=cands[winner].x,
        candidates=cands,
        tie=tie_idx.size > 1,
        tie_gap=float(others.min()) if others.size else None,
        crossovers=(),
    )
