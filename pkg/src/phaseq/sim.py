"""Monte Carlo error-rate measurement for the GLRT receiver.

Blocks are simulated in fixed-size chunks, each driven by its own child of a
single SeedSequence, so results are bit-identical for any worker count: the
chunk layout depends only on (trials, chunk_size) and every random draw
happens inside its chunk's stream. Demodulation work is memoized on the
observation row (the residue vector when undithered, the full sector vector
under dither); tie resolution is re-drawn per block from the chunk stream so
memoization never correlates tie outcomes across blocks.

The constant-addition ambiguity of the metric means raw block decisions are
only defined up to a common constellation shift. Two scoring conventions:

* pilot: position 0 carries a known reference symbol (fixed to 0); the
  decision is rotated to match it and errors are counted on the remaining
  L - 1 positions.
* genie: errors are counted under the best of the M shifts, over all L
  positions. Lower by construction; useful as an optimistic bound.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .core import SystemConfig, sample_blocks
from .demod import DEFAULT_TIE_TOL, DemodRecord, default_n_scan, demodulate_rows
from .transition import kernel_bank_for

DEFAULT_CHUNK = 4096
_CONVENTIONS = ("pilot", "genie")


@dataclass(frozen=True)
class SerPoint:
    """One measured operating point with a 95% Wilson interval on SER."""

    snr_db: float
    trials: int
    errors: int
    symbols: int
    ser: float
    ci_low: float
    ci_high: float
    tie_rate: float
    convention: str


@dataclass(frozen=True)
class TieCensus:
    """Exact-tie statistics of the demodulator at one operating point."""

    trials: int
    tie_blocks: int
    tie_rate: float
    ci_low: float
    ci_high: float
    mean_candidates: float
    max_candidates: int


def wilson_interval(successes: int, total: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if total <= 0:
        return (0.0, 1.0)
    p = successes / total
    z2 = z * z
    denom = 1.0 + z2 / total
    center = (p + z2 / (2 * total)) / denom
    half = z * math.sqrt(p * (1.0 - p) / total + z2 / (4 * total * total)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def coherent_qpsk_ser(snr_db: float) -> float:
    """Symbol error rate of coherent Gray-mapped QPSK at the same Es/N0."""
    q = 1.0 - float(ndtr(math.sqrt(10.0 ** (snr_db / 10.0))))
    return 2.0 * q - q * q


def ser_crossing_snr(snrs_db, sers, target: float) -> float:
    """SNR where a measured curve crosses the target rate, by log-linear
    interpolation between the bracketing grid points.

    Expects sers decreasing in snrs_db overall; uses the first bracket with
    ser >= target on the left and ser < target on the right.
    """
    snrs_db = np.asarray(snrs_db, dtype=float)
    sers = np.asarray(sers, dtype=float)
    if snrs_db.shape != sers.shape or snrs_db.ndim != 1:
        raise ValueError("snrs_db and sers must be equal-length 1-d arrays")
    if np.any(sers <= 0.0):
        raise ValueError("crossing interpolation needs strictly positive rates")
    for i in range(len(sers) - 1):
        if sers[i] >= target > sers[i + 1]:
            ly0, ly1 = math.log(sers[i]), math.log(sers[i + 1])
            frac = (math.log(target) - ly0) / (ly1 - ly0)
            return float(snrs_db[i] + frac * (snrs_db[i + 1] - snrs_db[i]))
    raise ValueError(f"curve never crosses {target!r} on the given grid")


# ---- chunk engine -----------------------------------------------------------


def _chunk_sizes(trials: int, chunk_size: int) -> list[int]:
    full, rem = divmod(trials, chunk_size)
    return [chunk_size] * full + ([rem] if rem else [])


def _demod_chunk(
    rows: np.ndarray,
    config: SystemConfig,
    kernels,
    n_scan: int,
    tie_tol: float,
    cache: dict[tuple[int, ...], DemodRecord],
) -> list[DemodRecord]:
    """Records for each row, computing only rows the cache has not seen."""
    keys = [tuple(int(v) for v in row) for row in rows]
    missing: list[tuple[int, ...]] = []
    seen: set[tuple[int, ...]] = set()
    for key in keys:
        if key not in cache and key not in seen:
            seen.add(key)
            missing.append(key)
    if missing:
        recs = demodulate_rows(
            np.array(missing, dtype=np.int64), config, kernels, n_scan, tie_tol
        )
        for key, rec in zip(missing, recs):
            cache[key] = rec
    return [cache[key] for key in keys]


def _run_chunk(
    config: SystemConfig,
    kernels,
    n_blocks: int,
    seed_seq: np.random.SeedSequence,
    convention: str,
    n_scan: int,
    tie_tol: float,
    cache: dict,
) -> tuple[int, int, int, int]:
    """Simulate one chunk; returns (errors, tie blocks, candidate sum, candidate max)."""
    M, L, a = config.M, config.L, config.a
    rng = np.random.default_rng(seed_seq)
    X = rng.integers(0, M, size=(n_blocks, L))
    if convention == "pilot":
        X[:, 0] = 0
    _, Z = sample_blocks(X, config, rng)

    if config.is_dithered:
        rows, shifts = Z, np.zeros_like(Z)
    else:
        rows, shifts = Z % a, Z // a
    records = _demod_chunk(rows, config, kernels, n_scan, tie_tol, cache)

    errors = 0
    tie_blocks = 0
    cand_total = 0
    cand_max = 0
    for b, rec in enumerate(records):
        cand_total += rec.candidates.shape[0]
        cand_max = max(cand_max, rec.candidates.shape[0])
        idx = rec.winner_index
        if rec.tie:
            tie_blocks += 1
            idx = int(rng.choice(rec.tie_indices))
        xhat = (rec.candidates[idx] + shifts[b]) % M
        if convention == "pilot":
            xhat = (xhat - xhat[0]) % M
            errors += int(np.count_nonzero(xhat[1:] != X[b, 1:]))
        else:
            hams = [
                int(np.count_nonzero((xhat + m) % M != X[b])) for m in range(M)
            ]
            errors += min(hams)
    return errors, tie_blocks, cand_total, cand_max


def _resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get("PHASEQ_WORKERS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def _simulate(
    config: SystemConfig,
    trials: int,
    seed,
    convention: str,
    workers: int | None,
    n_scan: int | None,
    tie_tol: float,
    chunk_size: int,
) -> tuple[int, int, int, int]:
    if trials < 1:
        raise ValueError("trials must be positive")
    if convention not in _CONVENTIONS:
        raise ValueError(f"convention must be one of {_CONVENTIONS}")
    if convention == "pilot" and config.L < 2:
        raise ValueError("pilot convention needs L >= 2")
    if n_scan is None:
        n_scan = default_n_scan(config.K)
    kernels = kernel_bank_for(config)
    sizes = _chunk_sizes(trials, chunk_size)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(len(sizes))
    cache: dict[tuple[int, ...], DemodRecord] = {}

    def job(args):
        size, child = args
        return _run_chunk(
            config, kernels, size, child, convention, n_scan, tie_tol, cache
        )

    n_workers = _resolve_workers(workers)
    if n_workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(job, zip(sizes, children)))
    else:
        results = [job(arg) for arg in zip(sizes, children)]
    errors = sum(r[0] for r in results)
    ties = sum(r[1] for r in results)
    cands = sum(r[2] for r in results)
    cand_max = max(r[3] for r in results)
    return errors, ties, cands, cand_max


def run_ser(
    config: SystemConfig,
    trials: int,
    seed=0,
    convention: str = "pilot",
    workers: int | None = None,
    n_scan: int | None = None,
    tie_tol: float = DEFAULT_TIE_TOL,
    chunk_size: int = DEFAULT_CHUNK,
) -> SerPoint:
    """Measure SER at config's operating point over `trials` blocks.

    Reproducible for a given (seed, trials, chunk_size) regardless of
    workers; seed may be an int or a SeedSequence.
    """
    errors, ties, _, _ = _simulate(
        config, trials, seed, convention, workers, n_scan, tie_tol, chunk_size
    )
    symbols = trials * (config.L - 1 if convention == "pilot" else config.L)
    lo, hi = wilson_interval(errors, symbols)
    return SerPoint(
        snr_db=config.snr_db,
        trials=trials,
        errors=errors,
        symbols=symbols,
        ser=errors / symbols,
        ci_low=lo,
        ci_high=hi,
        tie_rate=ties / trials,
        convention=convention,
    )


def run_tie_census(
    config: SystemConfig,
    trials: int,
    seed=0,
    workers: int | None = None,
    n_scan: int | None = None,
    tie_tol: float = DEFAULT_TIE_TOL,
    chunk_size: int = DEFAULT_CHUNK,
) -> TieCensus:
    """Count exact metric ties over random blocks (genie-style inputs)."""
    _, ties, cands, cand_max = _simulate(
        config, trials, seed, "genie", workers, n_scan, tie_tol, chunk_size
    )
    lo, hi = wilson_interval(ties, trials)
    return TieCensus(
        trials=trials,
        tie_blocks=ties,
        tie_rate=ties / trials,
        ci_low=lo,
        ci_high=hi,
        mean_candidates=cands / trials,
        max_candidates=cand_max,
    )
