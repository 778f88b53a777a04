"""Mutual information of the quantized block channel.

I(X; Z) = H(Z) - H(Z|X) in bits per block. The conditional entropy needs only
the all-zero input (it is input-independent by symmetry, which the test suite
verifies rather than assumes blindly), summed over canonical output classes;
the output entropy runs over residue classes with the grouped-input-average
marginal. A full-enumeration brute-force path is shipped alongside as the
oracle, and a Monte Carlo estimator covers dithered configurations where the
reduction does not apply.

Normalization: the first symbol effectively spends its information resolving
the unknown block phase, so the per-symbol rate divides by L - 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .combinatorics import canonical_output_classes, grouped_input_classes, reduced_output_classes
from .core import SystemConfig, sample_blocks
from .transition import (
    TransitionKernel,
    block_conditional_batch,
    kernel_bank_for,
    kernel_for,
)

LOG2E = 1.0 / math.log(2.0)


@dataclass(frozen=True)
class CapacityResult:
    """One capacity evaluation: entropies and rates in bits.

    per_symbol is mi / (L - 1); None for L = 1 where no payload positions
    exist. error_bar is the Monte Carlo standard error of mi (None for the
    exact methods).
    """

    snr_db: float
    M: int
    K: int
    L: int
    method: str
    h_cond: float
    h_out: float
    mi: float
    per_symbol: float | None
    error_bar: float | None = None


def _entropy_terms(p: np.ndarray) -> np.ndarray:
    terms = np.zeros_like(p)
    mask = p > 0
    terms[mask] = p[mask] * np.log2(p[mask])
    return terms


def conditional_entropy(config: SystemConfig, kernel: TransitionKernel | None = None) -> float:
    """H(Z | X) in bits for an undithered config, via canonical classes.

    Equals -sum over classes of K * multiplicity * P(rep|0) * log2 P(rep|0):
    each canonical representative stands for K constant-addition shifts times
    the permutation multiplicity of its free positions.
    """
    if config.is_dithered:
        raise ValueError("conditional_entropy requires an undithered config")
    if kernel is None:
        kernel = kernel_for(config)
    classes = canonical_output_classes(config.K, config.L)
    reps = np.array([c.representative for c in classes], dtype=np.int64)
    mult = np.array([c.multiplicity for c in classes], dtype=float)
    probs = block_conditional_batch(reps, kernel)
    return float(-(config.K * mult * _entropy_terms(probs)).sum())


def marginal_probability(
    z, config: SystemConfig, kernel: TransitionKernel | None = None
) -> float:
    """P(z) for a reduced output block (components below a = K/M).

    Weighted average of P(z | x) over the grouped input classes; weights are
    the class sizes, so this equals the plain average over all M^L inputs.
    """
    z = np.asarray(z, dtype=np.int64)
    if np.any((z < 0) | (z >= config.a)):
        raise ValueError("marginal_probability expects residue outputs in 0..a-1")
    if config.is_dithered:
        raise ValueError("marginal_probability requires an undithered config")
    if kernel is None:
        kernel = kernel_for(config)
    classes = grouped_input_classes(z, config.M)
    xs = np.array([c.representative for c in classes], dtype=np.int64)
    weights = np.array([c.weight for c in classes], dtype=float)
    S = (z[None, :] - config.a * xs) % config.K
    probs = block_conditional_batch(S, kernel)
    return float((weights * probs).sum() / config.M**config.L)


def output_entropy(config: SystemConfig, kernel: TransitionKernel | None = None) -> float:
    """H(Z) in bits for an undithered config, via residue classes.

    Each residue-class representative covers multiplicity * a residue blocks,
    and each residue block stands for M^L full-alphabet blocks of equal
    probability.
    """
    if config.is_dithered:
        raise ValueError("output_entropy requires an undithered config")
    if kernel is None:
        kernel = kernel_for(config)
    total = 0.0
    scale = float(config.M**config.L)
    for cls in reduced_output_classes(config.a, config.L):
        p = marginal_probability(cls.representative, config, kernel)
        if p > 0:
            total -= scale * config.a * cls.multiplicity * p * math.log2(p)
    return total


def mutual_information(
    config: SystemConfig,
    kernel: TransitionKernel | None = None,
    method: str = "reduced",
) -> CapacityResult:
    """Exact I(X; Z) per block for an undithered config.

    method="reduced" sums over canonical classes; method="brute" enumerates
    the full K^L output space (and all M^L inputs for the marginal) and exists
    as the independent check of the reduction.
    """
    if config.is_dithered:
        raise ValueError("exact mutual information requires an undithered config")
    if kernel is None:
        kernel = kernel_for(config)
    if method == "reduced":
        h_cond = conditional_entropy(config, kernel)
        h_out = output_entropy(config, kernel)
        label = "reduced-exact"
    elif method == "brute":
        h_cond = brute_force_conditional_entropy(config, kernel)
        h_out = brute_force_output_entropy(config, kernel)
        label = "brute-force"
    else:
        raise ValueError(f"unknown method: {method!r}")
    mi = h_out - h_cond
    per_symbol = mi / (config.L - 1) if config.L > 1 else None
    return CapacityResult(
        snr_db=config.snr_db,
        M=config.M,
        K=config.K,
        L=config.L,
        method=label,
        h_cond=h_cond,
        h_out=h_out,
        mi=mi,
        per_symbol=per_symbol,
    )


# ---- brute-force oracle --------------------------------------------------


def _all_outputs(K: int, L: int) -> np.ndarray:
    grids = np.meshgrid(*([np.arange(K)] * L), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def block_probs_all_outputs(kernel: TransitionKernel, x) -> np.ndarray:
    """P(z | x) for every z in lexicographic order, one chained outer product."""
    x = np.asarray(x, dtype=np.int64)
    K, n_phi = kernel.K, kernel.n_phi
    acc = np.ones((1, n_phi))
    for xl in x:
        rows = kernel.table[(np.arange(K) - kernel.a * int(xl)) % K]
        acc = (acc[:, None, :] * rows[None, :, :]).reshape(-1, n_phi)
    return acc.mean(axis=1)


def brute_force_conditional_entropy(
    config: SystemConfig, kernel: TransitionKernel | None = None
) -> float:
    """H(Z | X = 0) by summing the full K^L output space."""
    if kernel is None:
        kernel = kernel_for(config)
    probs = block_probs_all_outputs(kernel, np.zeros(config.L, dtype=np.int64))
    return float(-_entropy_terms(probs).sum())


def brute_force_output_probs(
    config: SystemConfig, kernel: TransitionKernel | None = None
) -> np.ndarray:
    """P(z) for every z in lexicographic order, averaging all M^L inputs."""
    if kernel is None:
        kernel = kernel_for(config)
    total = np.zeros(config.K**config.L)
    for x in product(range(config.M), repeat=config.L):
        total += block_probs_all_outputs(kernel, np.array(x, dtype=np.int64))
    return total / config.M**config.L


def brute_force_output_entropy(
    config: SystemConfig, kernel: TransitionKernel | None = None
) -> float:
    probs = brute_force_output_probs(config, kernel)
    return float(-_entropy_terms(probs).sum())


# ---- Monte Carlo path ------------------------------------------------------


def mutual_information_mc(
    config: SystemConfig,
    trials: int,
    rng: np.random.Generator,
    n_phi: int | None = None,
    batch: int = 8192,
) -> CapacityResult:
    """Monte Carlo I(X; Z) estimate, valid for dithered configs too.

    Averages log2(P(z|x) / P(z)) over sampled (x, z). P(z|x) is the phase-grid
    block conditional; P(z) is its exact average over all M^L inputs, computed
    through the per-symbol factorization that holds conditioned on each phase
    grid point (finite-sum exchange, no sampling of the input space).
    """
    if trials < 100:
        raise ValueError("trials must be at least 100")
    kernels = kernel_bank_for(config, n_phi=n_phi)
    L, M, K, a = config.L, config.M, config.K, config.a
    tables = [k.table for k in kernels]
    mix_idx = (np.arange(K)[:, None] - a * np.arange(M)[None, :]) % K
    mixed = [t[mix_idx].mean(axis=1) for t in tables]

    sum_ratio = 0.0
    sum_ratio_sq = 0.0
    sum_cond = 0.0
    sum_out = 0.0
    done = 0
    while done < trials:
        n = min(batch, trials - done)
        X = rng.integers(0, M, size=(n, L))
        _, Z = sample_blocks(X, config, rng)
        S = (Z - a * X) % K
        acc_cond = tables[0][S[:, 0]].copy()
        acc_out = mixed[0][Z[:, 0]].copy()
        for l in range(1, L):
            acc_cond *= tables[l][S[:, l]]
            acc_out *= mixed[l][Z[:, l]]
        p_cond = acc_cond.mean(axis=1)
        p_out = acc_out.mean(axis=1)
        ratio = np.log2(p_cond) - np.log2(p_out)
        sum_ratio += ratio.sum()
        sum_ratio_sq += (ratio * ratio).sum()
        sum_cond += -np.log2(p_cond).sum()
        sum_out += -np.log2(p_out).sum()
        done += n

    mi = sum_ratio / trials
    var = max(sum_ratio_sq / trials - mi * mi, 0.0)
    se = math.sqrt(var / trials)
    per_symbol = mi / (L - 1) if L > 1 else None
    return CapacityResult(
        snr_db=config.snr_db,
        M=M,
        K=K,
        L=L,
        method="monte-carlo",
        h_cond=sum_cond / trials,
        h_out=sum_out / trials,
        mi=mi,
        per_symbol=per_symbol,
        error_bar=se,
    )
