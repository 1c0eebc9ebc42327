import itertools

import numpy as np
import pytest

from cmsign.baselines import (
    PhaseAlphabet,
    SlmConfig,
    exhaustive_sign_search,
    random_signs,
    slm_phase_vectors,
    slm_reduce,
)
from cmsign.ce import EXHAUSTIVE, SignProblem, ce_reduce, exact_ce_reduce, initial_expectation
from cmsign.errors import CapacityError, ConfigurationError
from cmsign.harness import draw_frame
from cmsign.ofdm import SymbolFrame, srcm, synthesize, synthesize_data

from conftest import random_problem


class TestSlm:
    def test_identity_only(self, rng):
        frame = SymbolFrame(draw_frame(rng, "qam16", 32), 10.0)
        out = slm_reduce(frame, SlmConfig(s=1))
        assert out.candidate == 0
        np.testing.assert_array_equal(out.frame.data, frame.data)
        assert out.eta == srcm(synthesize(frame))

    @pytest.mark.parametrize("alphabet", ["pm1", "qpsk"])
    def test_never_worse_than_original(self, rng, alphabet):
        for seed in range(20):
            frame = SymbolFrame(draw_frame(rng, "qam16", 64), 10.0)
            out = slm_reduce(frame, SlmConfig(20, alphabet, seed))
            assert out.eta <= srcm(synthesize(frame))
            assert out.eta == pytest.approx(srcm(synthesize(out.frame)), rel=1e-12)

    def test_phase_vectors(self):
        ph = slm_phase_vectors(16, SlmConfig(50, "qpsk", 3))
        assert ph.shape == (50, 16)
        assert np.all(ph[0] == 1)
        assert set(ph.ravel().tolist()) <= {1, -1, 1j, -1j}
        np.testing.assert_array_equal(ph, slm_phase_vectors(16, SlmConfig(50, "qpsk", 3)))
        assert set(slm_phase_vectors(16, SlmConfig(50, "pm1", 3)).ravel().tolist()) <= {1, -1}

    def test_ties_pick_lowest_index(self):
        # one subcarrier: every candidate has the same SRCM
        out = slm_reduce(SymbolFrame([3 + 1j], 10.0), SlmConfig(10, "qpsk", 1))
        assert out.candidate == 0

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            SlmConfig(0)
        with pytest.raises(ConfigurationError):
            SlmConfig(4, "8psk")
        assert SlmConfig(4, "pm1").phase_alphabet is PhaseAlphabet.PM1


class TestExhaustive:
    def test_single_subcarrier(self):
        signs, eta = exhaustive_sign_search(SignProblem([1 + 1j], 0, 4, 2.0))
        assert signs.tolist() == [1]

    @pytest.mark.parametrize("n_f", [0, 2])
    def test_matches_brute_force(self, rng, n_f):
        p = random_problem(rng, "qam16", 7, n_f)
        signs, eta = exhaustive_sign_search(p)
        best = None
        for tail in itertools.product([1, -1], repeat=p.n - n_f):
            x = np.array([1] * n_f + list(tail))
            e = srcm(synthesize_data(p.c * x, p.sigma_b_sq, p.oversampling))
            if best is None or e < best[1] - 1e-12:
                best = (x, e)
        assert eta == pytest.approx(best[1], rel=1e-12)
        assert eta == pytest.approx(srcm(synthesize_data(p.c * signs, p.sigma_b_sq, 4)), rel=1e-12)

    def test_canonical_of_negation_pair(self, rng):
        for _ in range(10):
            p = random_problem(rng, "qpsk", 8)
            signs, _ = exhaustive_sign_search(p)
            # x and -x are co-optimal; the lexicographic rule picks x[0] = +1
            assert signs[0] == 1
            q = SignProblem(-p.c, 0, 4, p.sigma_b_sq)
            np.testing.assert_array_equal(exhaustive_sign_search(q)[0], signs)

    def test_dominates_ce_and_initial_expectation(self, rng):
        for _ in range(15):
            p = random_problem(rng, "qpsk", 10)
            _, eta_min = exhaustive_sign_search(p)
            assert eta_min <= ce_reduce(p).eta + 1e-12
            assert eta_min <= exact_ce_reduce(p, EXHAUSTIVE).eta + 1e-12
            assert eta_min <= initial_expectation(p) + 1e-12

    def test_capacity(self, rng):
        with pytest.raises(CapacityError):
            exhaustive_sign_search(random_problem(rng, "qpsk", 21))


class TestRandomSigns:
    def test_reproducible_and_prefix(self, rng):
        p = random_problem(rng, "qam16", 40, n_f=12)
        a = random_signs(p, 9)
        np.testing.assert_array_equal(a, random_signs(p, 9))
        assert np.all(a[:12] == 1)
        assert set(a[12:].tolist()) <= {1, -1}

    def test_distribution_matches_random_frames(self, rng):
        # random signs on M' data is the same as drawing uniformly from M
        n, trials = 32, 3000
        signed, plain = [], []
        for _ in range(trials):
            p = random_problem(rng, "qam16", n)
            x = random_signs(p, int(rng.integers(2**32)))
            signed.append(srcm(synthesize_data(p.c * x, p.sigma_b_sq, 4)))
            plain.append(srcm(synthesize_data(draw_frame(rng, "qam16", n), p.sigma_b_sq, 4)))
        signed, plain = np.array(signed), np.array(plain)
        se = np.sqrt(signed.var() / trials + plain.var() / trials)
        assert abs(signed.mean() - plain.mean()) < 4 * se
        # one-sided CCDF points agree as well
        for q in (0.5, 0.9):
            t = np.quantile(plain, q)
            assert abs(np.mean(signed > t) - np.mean(plain > t)) < 0.04
