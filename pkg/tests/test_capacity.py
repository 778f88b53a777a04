"""Mutual information: reduced-class sums vs brute force vs Monte Carlo."""

from __future__ import annotations

import math

import numpy as np
import pytest

from phaseq import (
    SystemConfig,
    brute_force_conditional_entropy,
    brute_force_output_entropy,
    brute_force_output_probs,
    conditional_entropy,
    kernel_for,
    marginal_probability,
    mutual_information,
    mutual_information_mc,
    output_entropy,
)
from phaseq.capacity import block_probs_all_outputs


class TestDegenerateLimits:
    def test_single_symbol_block_carries_nothing(self):
        cfg = SystemConfig(M=4, K=8, L=1, snr_db=12.0)
        res = mutual_information(cfg)
        assert abs(res.mi) < 1e-9
        assert res.per_symbol is None
        assert res.h_cond == pytest.approx(3.0, abs=1e-9)
        assert res.h_out == pytest.approx(3.0, abs=1e-9)

    def test_deep_noise_entropies_saturate(self):
        cfg = SystemConfig(M=4, K=8, L=3, snr_db=-40.0)
        res = mutual_information(cfg)
        assert res.h_cond == pytest.approx(3 * 3.0, abs=1e-2)
        assert res.h_out == pytest.approx(3 * 3.0, abs=1e-2)
        assert 0.0 <= res.mi < 1e-2


class TestBruteForceAgreement:
    def test_entropies_match_brute_force(self):
        cfg = SystemConfig(M=4, K=8, L=3, snr_db=5.0)
        kernel = kernel_for(cfg)
        h_cond = conditional_entropy(cfg, kernel)
        h_out = output_entropy(cfg, kernel)
        assert h_cond == pytest.approx(brute_force_conditional_entropy(cfg, kernel), rel=1e-9)
        assert h_out == pytest.approx(brute_force_output_entropy(cfg, kernel), rel=1e-9)

    def test_mutual_information_reduced_equals_brute(self):
        cfg = SystemConfig(M=4, K=8, L=2, snr_db=10.0)
        red = mutual_information(cfg, method="reduced")
        brute = mutual_information(cfg, method="brute")
        assert red.mi == pytest.approx(brute.mi, rel=1e-9)
        assert red.method == "reduced-exact"
        assert brute.method == "brute-force"

    def test_marginal_probability_matches_brute_average(self):
        cfg = SystemConfig(M=4, K=8, L=3, snr_db=6.0)
        kernel = kernel_for(cfg)
        probs = brute_force_output_probs(cfg, kernel)
        z = np.array([1, 0, 1])
        # brute table is indexed over full K-ary outputs; residues embed directly
        idx = int(np.ravel_multi_index(tuple(z), (8, 8, 8)))
        assert marginal_probability(z, cfg, kernel) == pytest.approx(
            float(probs[idx]), rel=1e-10
        )

    def test_marginal_single_symbol_uniform(self):
        cfg = SystemConfig(M=4, K=8, L=1, snr_db=6.0)
        assert marginal_probability([0], cfg) == pytest.approx(1 / 8, abs=1e-12)
        assert marginal_probability([1], cfg) == pytest.approx(1 / 8, abs=1e-12)


class TestInvariants:
    @pytest.mark.parametrize("snr_db", [0.0, 6.0, 12.0])
    def test_bounds(self, snr_db):
        cfg = SystemConfig(M=4, K=12, L=3, snr_db=snr_db)
        res = mutual_information(cfg)
        assert 0.0 <= res.mi <= 2.0 * (cfg.L - 1) + 1e-9
        assert res.h_cond <= res.h_out + 1e-12
        assert res.per_symbol == pytest.approx(res.mi / (cfg.L - 1))

    def test_per_symbol_monotone_in_snr(self):
        cfg = SystemConfig(M=4, K=8, L=3, snr_db=0.0)
        vals = [mutual_information(cfg.with_snr(s)).per_symbol for s in (0.0, 4.0, 8.0, 12.0)]
        diffs = np.diff(vals)
        assert np.all(diffs > -1e-6)

    def test_exact_methods_have_no_error_bar(self):
        cfg = SystemConfig(M=4, K=8, L=2, snr_db=6.0)
        assert mutual_information(cfg).error_bar is None

    def test_result_records_config(self):
        cfg = SystemConfig(M=4, K=12, L=2, snr_db=7.0)
        res = mutual_information(cfg)
        assert (res.M, res.K, res.L, res.snr_db) == (4, 12, 2, 7.0)


class TestValidation:
    def test_dithered_config_rejected_by_exact_paths(self):
        cfg = SystemConfig(M=4, K=8, L=2, snr_db=6.0, dither="ramp")
        with pytest.raises(ValueError, match="undithered"):
            conditional_entropy(cfg)
        with pytest.raises(ValueError, match="undithered"):
            output_entropy(cfg)
        with pytest.raises(ValueError, match="undithered"):
            mutual_information(cfg)

    def test_marginal_rejects_full_range_outputs(self):
        cfg = SystemConfig(M=4, K=8, L=2, snr_db=6.0)
        with pytest.raises(ValueError, match="residue"):
            marginal_probability([0, 5], cfg)

    def test_unknown_method_rejected(self):
        cfg = SystemConfig(M=4, K=8, L=2, snr_db=6.0)
        with pytest.raises(ValueError, match="method"):
            mutual_information(cfg, method="guess")

    def test_mc_requires_enough_trials(self):
        cfg = SystemConfig(M=4, K=8, L=2, snr_db=6.0)
        with pytest.raises(ValueError, match="trials"):
            mutual_information_mc(cfg, 50, np.random.default_rng(0))


class TestMonteCarlo:
    def test_estimate_brackets_exact_value(self):
        cfg = SystemConfig(M=4, K=8, L=2, snr_db=6.0)
        exact = mutual_information(cfg).mi
        res = mutual_information_mc(cfg, 40_000, np.random.default_rng(7))
        assert res.method == "monte-carlo"
        assert res.error_bar is not None and res.error_bar > 0
        assert abs(res.mi - exact) < 3 * res.error_bar
        assert res.per_symbol == pytest.approx(res.mi / (cfg.L - 1))

    def test_deep_noise_estimate_near_zero(self):
        cfg = SystemConfig(M=4, K=8, L=2, snr_db=-40.0)
        res = mutual_information_mc(cfg, 5_000, np.random.default_rng(3))
        assert abs(res.mi) < 3 * res.error_bar + 1e-6

    def test_dither_strictly_helps_at_moderate_snr(self):
        # the undithered K=2M ambiguity costs rate; dither recovers it
        base = SystemConfig(M=4, K=8, L=2, snr_db=10.0)
        plain = mutual_information(base).mi
        dith = mutual_information_mc(
            SystemConfig(M=4, K=8, L=2, snr_db=10.0, dither="ramp"),
            60_000,
            np.random.default_rng(11),
        )
        assert dith.mi - plain > 3 * dith.error_bar

    def test_single_symbol_mc_is_zero(self):
        cfg = SystemConfig(M=4, K=8, L=1, snr_db=6.0)
        res = mutual_information_mc(cfg, 2_000, np.random.default_rng(5))
        assert abs(res.mi) < 1e-9
        assert res.per_symbol is None


def test_block_probs_all_outputs_normalizes():
    cfg = SystemConfig(M=4, K=8, L=2, snr_db=6.0)
    kernel = kernel_for(cfg)
    probs = block_probs_all_outputs(kernel, np.array([1, 3]))
    assert probs.shape == (64,)
    assert probs.sum() == pytest.approx(1.0, abs=1e-8)


def test_brute_output_probs_normalize():
    cfg = SystemConfig(M=4, K=8, L=2, snr_db=6.0)
    probs = brute_force_output_probs(cfg, kernel_for(cfg))
    assert probs.sum() == pytest.approx(1.0, abs=1e-8)
    assert probs.min() > 0
