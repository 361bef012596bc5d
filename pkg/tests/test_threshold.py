import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pdgbs.matfunc import det_pd
from pdgbs.model import coefficients, haar_random_unitary, q_matrix
from pdgbs.pnr import GBSModel
from pdgbs.threshold import (marginal_noclick_indist, marginal_noclick_virtual, prob_threshold,
                             prob_threshold_ideal)

from conftest import make_cfg


def all_click_sets(K):
    return [U for r in range(K + 1) for U in itertools.combinations(range(K), r)]


def random_instance(seed, max_K=6, eta_ind=None):
    rng = np.random.default_rng(seed)
    K = int(rng.integers(1, max_K + 1))
    M = int(rng.integers(1, K + 1))
    cfg = make_cfg(K=K, M=M, r=rng.uniform(0.05, 1.2), eta_t=rng.uniform(0.2, 1),
                   eta_ind=rng.uniform(0, 1) if eta_ind is None else eta_ind)
    return cfg, GBSModel(cfg, haar_random_unitary(K, seed)), rng


class TestMarginals:
    def test_empty_set(self, small):
        cfg, T = small
        assert marginal_noclick_indist(cfg, T, []) == 1
        assert marginal_noclick_virtual(cfg, T, 1, []) == 1

    def test_vacuum(self):
        cfg = make_cfg(r=0.0)
        T = haar_random_unitary(cfg.K, 0)
        assert marginal_noclick_indist(cfg, T, [0, 2]) == pytest.approx(1)
        assert marginal_noclick_virtual(cfg, T, 2, [0, 1, 2]) == 1

    def test_no_distinguishable_part(self, small):
        cfg, T = small
        assert marginal_noclick_virtual(cfg.replace(eta_ind=1.0), T, 1, [0, 1]) == 1

    def test_virtual_full_set(self, small):
        cfg, T = small
        full = marginal_noclick_virtual(cfg, T, 2, range(cfg.K))
        assert full == pytest.approx(det_pd(q_matrix(cfg, T, 2)) ** -0.5, rel=1e-12)

    def test_virtual_matches_q_submatrix(self, small):
        cfg, T = small
        idx = [0, 2, 3, 5]
        sub = q_matrix(cfg, T, 1)[np.ix_(idx, idx)]
        assert marginal_noclick_virtual(cfg, T, 1, [0, 2]) == pytest.approx(det_pd(sub) ** -0.5)

    @given(st.integers(0, 10**6))
    @settings(max_examples=25, deadline=None)
    def test_monotone(self, seed):
        cfg, gm, rng = random_instance(seed)
        R2 = [k for k in range(cfg.K) if rng.random() < 0.6]
        R1 = [k for k in R2 if rng.random() < 0.5]
        assert marginal_noclick_indist(cfg, gm, R1) >= marginal_noclick_indist(cfg, gm, R2) - 1e-14
        for m in range(1, cfg.M + 1):
            assert (marginal_noclick_virtual(cfg, gm, m, R1)
                    >= marginal_noclick_virtual(cfg, gm, m, R2) - 1e-14)

    def test_schur_form(self, small):
        cfg, T = small
        Q = q_matrix(cfg, T, 0)
        R, V = [0, 2], [1]
        iR = R + [k + cfg.K for k in R]
        iV = V + [k + cfg.K for k in V]
        lhs = det_pd(Q[np.ix_(iR, iR)])
        rhs = det_pd(Q) * det_pd(np.linalg.inv(Q)[np.ix_(iV, iV)])
        assert lhs == pytest.approx(rhs, rel=1e-9)


class TestThreshold:
    def test_vacuum(self):
        cfg = make_cfg(r=0.0)
        T = haar_random_unitary(cfg.K, 0)
        assert prob_threshold(cfg, T, []) == 1
        assert prob_threshold(cfg, T, [1]) == pytest.approx(0, abs=1e-15)

    def test_single_mode(self):
        cfg = make_cfg(K=1, M=1, r=0.8, eta_t=0.7, eta_ind=1.0)
        co = coefficients(cfg)
        expected = 1 - ((1 + co.alpha_i) ** 2 - co.beta_i**2) ** -0.5
        assert prob_threshold(cfg, np.eye(1), [0]) == pytest.approx(expected, rel=1e-13)
        assert prob_threshold_ideal(cfg, np.eye(1), [0]) == pytest.approx(expected, rel=1e-13)

    @given(st.integers(0, 10**6))
    @settings(max_examples=20, deadline=None)
    def test_complete(self, seed):
        cfg, gm, _ = random_instance(seed)
        probs = [prob_threshold(cfg, gm, U) for U in all_click_sets(cfg.K)]
        assert math.fsum(probs) == pytest.approx(1, abs=1e-8)
        assert min(probs) > -1e-10 and max(probs) < 1 + 1e-10

    @given(st.integers(0, 10**6))
    @settings(max_examples=20, deadline=None)
    def test_ideal_special_case(self, seed):
        cfg, gm, rng = random_instance(seed, eta_ind=1.0)
        U = [k for k in range(cfg.K) if rng.random() < 0.5]
        assert prob_threshold(cfg, gm, U) == pytest.approx(prob_threshold_ideal(cfg, gm, U), abs=1e-10)

    def test_ideal_empty(self, small):
        cfg, T = small
        gm = GBSModel(cfg, T)
        assert prob_threshold_ideal(cfg, gm, []) == pytest.approx(1 / gm.sqrt_det_q0)

    def test_matches_pnr_aggregation(self):
        cfg = make_cfg(K=2, M=1, r=0.3, eta_t=0.8, eta_ind=0.5)
        gm = GBSModel(cfg, haar_random_unitary(2, 3))
        agg = {U: 0.0 for U in all_click_sets(2)}
        for s in itertools.product(range(10), repeat=2):
            if sum(s) <= 9:
                agg[tuple(k for k in range(2) if s[k])] += gm.prob_total_exact(s)
        for U, p in agg.items():
            assert prob_threshold(cfg, gm, U) == pytest.approx(p, abs=1e-6)

    def test_bad_port(self, small):
        cfg, T = small
        with pytest.raises(ValueError):
            prob_threshold(cfg, T, [cfg.K])
