"""Construction tests: exact chain-rule telescoping, entropy estimates
against closed forms, polarization trends, classification rules, caching."""

import numpy as np
import pytest

from graywyner import rng
from graywyner.numerics import binary_entropy
from graywyner.polar import (
    CLASS_FROZEN_DETERMINISTIC,
    CLASS_FROZEN_RANDOM,
    CLASS_INFO,
    classify_indices,
    construct_profile,
    construct_profile_cached,
    crossover_side_info,
    load_profile,
    lossless_source,
    polar_transform,
    profile_path,
    save_profile,
    sc_traverse,
)
from graywyner.polar.profile import below_log_threshold

A1 = 0.0584119566836076573


class TestChainRuleExact:
    """The per-block sum of leaf surprisals telescopes to the exact block
    log-likelihood; this pins the whole traversal arithmetic at once."""

    @pytest.mark.parametrize("block_len", [8, 64])
    def test_telescoping_matches_direct_likelihood(self, block_len):
        channel = crossover_side_info(0.17)
        gen = rng.stream(99, rng.STREAM_SOURCE)
        x, y = channel.sample(5, block_len, gen)
        u_true = polar_transform(x)
        evidence = channel.leaf_evidence(y)[None]
        surprisal = np.zeros(5)

        def decide(i, probs):
            bits = u_true[:, i]
            p_true = probs[0, np.arange(5), bits.astype(np.intp)]
            surprisal[:] += -np.log2(p_true)
            return bits

        sc_traverse(evidence, decide)
        table = channel.conditional_table()
        direct = -np.log2(table[y, x.astype(np.intp)]).sum(axis=1)
        np.testing.assert_allclose(surprisal, direct, atol=1e-9)

    def test_prior_chain_telescoping(self):
        channel = lossless_source(0.11)
        gen = rng.stream(4, rng.STREAM_SOURCE)
        x, _ = channel.sample(6, 64, gen)
        u_true = polar_transform(x)
        evidence = np.asarray(channel.prior_evidence((6, 64)))[None]
        surprisal = np.zeros(6)

        def decide(i, probs):
            bits = u_true[:, i]
            surprisal[:] += -np.log2(probs[0, np.arange(6), bits.astype(np.intp)])
            return bits

        sc_traverse(evidence, decide)
        weight = x.sum(axis=1)
        direct = -(weight * np.log2(0.11) + (64 - weight) * np.log2(0.89))
        np.testing.assert_allclose(surprisal, direct, atol=1e-9)


class TestEntropyEstimates:
    def test_plain_source_estimates(self):
        profile = construct_profile(lossless_source(0.11), 1024,
                                    sample_count=500, seed=21)
        h = binary_entropy(0.11)
        assert profile.conditional_entropy_estimate() == pytest.approx(h, abs=0.01 * h)
        assert profile.prior_entropy_estimate() == pytest.approx(h, abs=0.01 * h)

    def test_side_info_estimates(self):
        profile = construct_profile(crossover_side_info(A1), 1024,
                                    sample_count=500, seed=22)
        assert profile.conditional_entropy_estimate() == pytest.approx(
            binary_entropy(A1), abs=0.01)
        # uniform coded variable: prior chain is exactly uniform
        np.testing.assert_array_equal(profile.z_prior, np.ones(1024))
        np.testing.assert_array_equal(profile.h_prior, np.ones(1024))
        assert profile.prior_entropy_estimate() == 1.0


class TestPolarizationTrend:
    @pytest.mark.parametrize("channel_factory,stat", [
        (lambda: lossless_source(0.11), "z_prior"),
        (lambda: crossover_side_info(A1), "z_cond"),
    ])
    def test_extreme_fractions_grow_with_block_length(self, channel_factory, stat):
        lows, highs = [], []
        for exponent in (8, 10, 12):
            profile = construct_profile(channel_factory(), 2 ** exponent,
                                        sample_count=200, seed=31)
            z = getattr(profile, stat)
            lows.append(float(np.mean(z < 0.01)))
            highs.append(float(np.mean(z > 0.99)))
        assert lows[0] <= lows[1] <= lows[2]
        assert highs[0] <= highs[1] <= highs[2]
        assert lows[2] + highs[2] > 0.75


class TestClassification:
    def test_log_domain_threshold(self):
        assert below_log_threshold(0.0, 16.0)[0]
        assert below_log_threshold(-1e-18, 16.0)[0]
        assert below_log_threshold(2.0 ** -17, 16.0)[0]
        assert below_log_threshold(2.0 ** -16, 16.0)[0]
        assert not below_log_threshold(2.0 ** -15, 16.0)[0]
        # underflow-prone inputs still classify correctly
        assert below_log_threshold(1e-320, 100.0)[0]

    def test_rules_reproduce_classes(self):
        profile = construct_profile(lossless_source(0.11), 256,
                                    sample_count=300, seed=41)
        expected = classify_indices(profile.z_cond, profile.z_prior, 256, profile.beta)
        np.testing.assert_array_equal(profile.classes, expected)
        assert set(np.unique(profile.classes)) <= {CLASS_INFO, CLASS_FROZEN_RANDOM,
                                                   CLASS_FROZEN_DETERMINISTIC}

    def test_deterministic_wins_ties(self):
        z_cond = np.array([1.0, 1.0])
        z_prior = np.array([0.0, 1.0])
        classes = classify_indices(z_cond, z_prior, 2, 0.25)
        assert classes[0] == CLASS_FROZEN_DETERMINISTIC
        assert classes[1] == CLASS_FROZEN_RANDOM

    def test_constant_source_is_all_deterministic(self):
        profile = construct_profile(lossless_source(0.0), 128,
                                    sample_count=50, seed=5)
        assert np.all(profile.classes == CLASS_FROZEN_DETERMINISTIC)
        np.testing.assert_allclose(profile.h_cond, 0.0, atol=1e-12)

    def test_uniform_prior_has_no_deterministic(self):
        profile = construct_profile(crossover_side_info(0.2), 256,
                                    sample_count=200, seed=6)
        assert not profile.has_deterministic


class TestRateControl:
    def test_payload_cap_demotes_least_reliable(self):
        profile = construct_profile(crossover_side_info(0.2), 256,
                                    sample_count=200, seed=6)
        capped = profile.with_payload_cap(0.3)
        assert len(capped.info_positions()) <= int(0.3 * 256)
        demoted = np.setdiff1d(profile.info_positions(), capped.info_positions())
        if len(demoted) and len(capped.info_positions()):
            assert profile.z_cond[demoted].min() >= profile.z_cond[
                capped.info_positions()].max() - 1e-12
        # demoted indices became frozen-random
        assert np.all(capped.classes[demoted] == CLASS_FROZEN_RANDOM)

    def test_cap_wider_than_info_is_identity(self):
        profile = construct_profile(crossover_side_info(0.2), 128,
                                    sample_count=100, seed=7)
        assert profile.with_payload_cap(1.0) is profile

    def test_stored_mask_picks_highest_z(self):
        profile = construct_profile(lossless_source(0.11), 128,
                                    sample_count=100, seed=8)
        mask = profile.stored_mask(0.25)
        count = int(np.ceil(0.25 * 128))
        assert mask.sum() == count
        inside = profile.z_cond[mask].min()
        outside = profile.z_cond[~mask].max()
        assert inside >= outside - 1e-12


class TestProfileCache:
    def test_round_trip_is_bit_identical(self, tmp_path):
        profile = construct_profile(lossless_source(0.11), 64,
                                    sample_count=60, seed=9)
        path = save_profile(profile, tmp_path)
        loaded = load_profile(path)
        for name in ("z_cond", "z_prior", "h_cond", "h_prior"):
            np.testing.assert_array_equal(getattr(loaded, name), getattr(profile, name))
        np.testing.assert_array_equal(loaded.classes, profile.classes)
        assert (loaded.channel_id, loaded.block_len, loaded.beta,
                loaded.sample_count, loaded.seed) == (
            profile.channel_id, profile.block_len, profile.beta,
            profile.sample_count, profile.seed)

    def test_cached_constructor_prefers_disk(self, tmp_path):
        channel = lossless_source(0.11)
        first = construct_profile_cached(channel, 64, tmp_path,
                                         sample_count=60, seed=9)
        # plant a marker in the cached file; a cache hit must surface it
        import dataclasses
        marked = dataclasses.replace(first, h_cond=first.h_cond + 1.0)
        save_profile(marked, tmp_path)
        again = construct_profile_cached(channel, 64, tmp_path,
                                         sample_count=60, seed=9)
        np.testing.assert_array_equal(again.h_cond, first.h_cond + 1.0)

    def test_distinct_parameters_distinct_paths(self, tmp_path):
        a = profile_path(tmp_path, "profile_xyz_n64_b0.25_s60_r9")
        channel = lossless_source(0.11)
        p1 = construct_profile_cached(channel, 64, tmp_path, sample_count=60, seed=9)
        p2 = construct_profile_cached(channel, 64, tmp_path, sample_count=60, seed=10)
        assert profile_path(tmp_path, p1) != profile_path(tmp_path, p2)
        assert a.parent == profile_path(tmp_path, p1).parent
