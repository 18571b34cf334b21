import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cct.errors import ConfigError, LabelError, ShapeError
from cct.losses import (BalanceSchedule, combined_loss, combined_loss_grad, consistency_loss,
                        cross_entropy, kl_div, ramp_lambda, supervision_loss)

from conftest import central_diff, random_simplex, rel_err

# high-precision (mpmath, 40 digits) reference values
CE_07 = 0.35667494393873238
KL_UNIF_VS_SKEW = 0.51082562376599068   # KL([.5,.5] || [.9,.1])
KL_SKEW_VS_UNIF = 0.36806420716849707   # KL([.9,.1] || [.5,.5])
SUP_TWO_NETS = 1.2729656758128874       # -ln .7 - ln .4
CONS_TWO_NETS = 0.37582889054861040     # KL(p2||p1) + KL(p1||p2), p1=[.7,.3], p2=[.4,.6]
COMBINED_HALF = 0.82439728318074892


def dists(c):
    return arrays(np.float64, c, elements=st.floats(1e-3, 1.0)).map(lambda a: a / a.sum())


class TestCrossEntropy:
    def test_one_hot_is_zero(self):
        assert cross_entropy([0.0, 1.0, 0.0], 1) == 0.0

    def test_uniform(self):
        assert cross_entropy(np.full(7, 1 / 7), 3) == pytest.approx(math.log(7), rel=1e-14)

    def test_value(self):
        assert cross_entropy([0.7, 0.2, 0.1], 0) == pytest.approx(CE_07, rel=1e-14)

    def test_saturated_is_finite(self):
        assert math.isfinite(cross_entropy([1.0, 0.0], 1))

    @pytest.mark.parametrize("y", [-1, 3])
    def test_label_range(self, y):
        with pytest.raises(LabelError):
            cross_entropy([0.2, 0.3, 0.5], y)


class TestKL:
    def test_identity(self):
        assert kl_div([0.2, 0.3, 0.5], [0.2, 0.3, 0.5]) == 0.0

    def test_one_hot_vs_uniform(self):
        assert kl_div([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2), rel=1e-14)

    def test_values(self):
        assert kl_div([0.5, 0.5], [0.9, 0.1]) == pytest.approx(KL_UNIF_VS_SKEW, rel=1e-14)
        assert kl_div([0.9, 0.1], [0.5, 0.5]) == pytest.approx(KL_SKEW_VS_UNIF, rel=1e-14)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            kl_div([0.5, 0.5], [0.2, 0.3, 0.5])

    @given(dists(5), dists(5))
    def test_gibbs(self, p, q):
        assert kl_div(p, q) >= -1e-12

    def test_saturated_is_finite(self):
        assert math.isfinite(kl_div([1.0, 0.0], [0.0, 1.0]))


class TestSupervisionAndConsistency:
    def test_supervision_perfect(self):
        assert supervision_loss([np.eye(3)[1]] * 3, 1) == 0.0

    def test_supervision_uniform(self):
        assert supervision_loss([np.full(7, 1 / 7)] * 3, 2) == pytest.approx(3 * math.log(7), rel=1e-14)

    def test_supervision_two_nets(self):
        assert supervision_loss([[0.7, 0.3], [0.4, 0.6]], 0) == pytest.approx(SUP_TWO_NETS, rel=1e-14)

    def test_supervision_empty(self):
        with pytest.raises(ConfigError):
            supervision_loss([], 0)

    def test_consistency_identical(self):
        assert consistency_loss([[0.2, 0.8]] * 3) == 0.0

    def test_consistency_two_nets(self):
        got = consistency_loss([[0.5, 0.5], [0.9, 0.1]])
        assert got == pytest.approx(KL_UNIF_VS_SKEW + KL_SKEW_VS_UNIF, rel=1e-14)

    def test_consistency_pair_structure(self):
        br = combined_loss([[0.3, 0.7], [0.3, 0.7], [0.6, 0.4]], 0, 0.5)
        assert len(br.kl_terms) == 6
        assert sum(t != 0.0 for t in br.kl_terms) == 4

    def test_consistency_needs_two(self):
        with pytest.raises(ConfigError):
            consistency_loss([[0.5, 0.5]])

    @given(st.integers(0, 2**31), st.integers(2, 4))
    @settings(max_examples=30)
    def test_consistency_permutation_invariant(self, seed, m):
        rng = np.random.default_rng(seed)
        preds = list(random_simplex(rng, m, 4))
        base = consistency_loss(preds)
        for perm in itertools.permutations(range(m)):
            assert consistency_loss([preds[i] for i in perm]) == pytest.approx(base, rel=1e-12, abs=1e-15)


class TestRamp:
    sched = BalanceSchedule(lambda_max=0.9, beta=4.0, ramp_epochs=30)

    def test_peak_exact(self):
        assert ramp_lambda(30, self.sched) == 0.9

    def test_start(self):
        assert ramp_lambda(0, self.sched) == pytest.approx(0.016484074999860762, rel=1e-14)

    def test_midpoint(self):
        assert ramp_lambda(15, self.sched) == pytest.approx(0.33109149705429809, rel=1e-14)

    def test_held_after_peak(self):
        assert all(ramp_lambda(e, self.sched) == 0.9 for e in (31, 45, 1e6))

    def test_bad_schedule(self):
        with pytest.raises(ConfigError):
            BalanceSchedule(0.9, 4.0, 0)
        with pytest.raises(ConfigError):
            BalanceSchedule(1.5, 4.0, 10)

    @given(st.floats(0.01, 10), st.floats(1, 100), st.floats(0, 1), st.floats(0, 1))
    def test_monotone(self, beta, er, a, b):
        s = BalanceSchedule(0.9, beta, er)
        lo, hi = sorted((a * er * 1.2, b * er * 1.2))
        assert ramp_lambda(lo, s) <= ramp_lambda(hi, s)
        assert 0 < ramp_lambda(lo, s) <= 0.9

    def test_larger_beta_ramps_slower(self):
        betas = [0.1, 0.65, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0]
        for e in range(30):
            vals = [ramp_lambda(e, BalanceSchedule(0.9, b, 30)) for b in betas]
            assert all(x > y for x, y in zip(vals, vals[1:]))


class TestCombined:
    P = [[0.7, 0.3], [0.4, 0.6]]

    def test_endpoints(self):
        br0 = combined_loss(self.P, 0, 0.0)
        br1 = combined_loss(self.P, 0, 1.0)
        assert br0.l_total == br0.l_sup
        assert br1.l_total == br1.l_cons

    def test_half(self):
        br = combined_loss(self.P, 0, 0.5)
        assert br.l_sup == pytest.approx(SUP_TWO_NETS, rel=1e-14)
        assert br.l_cons == pytest.approx(CONS_TWO_NETS, rel=1e-14)
        assert br.l_total == pytest.approx(COMBINED_HALF, rel=1e-14)

    def test_single_network_has_no_consistency(self):
        br = combined_loss([[0.7, 0.3]], 0, 0.6)
        assert br.l_cons == 0.0
        assert br.l_total == pytest.approx(0.4 * CE_07, rel=1e-14)

    @pytest.mark.parametrize("lam", [-0.1, 1.1])
    def test_lambda_range(self, lam):
        with pytest.raises(ConfigError):
            combined_loss(self.P, 0, lam)

    @given(st.integers(0, 2**31), st.floats(0, 1))
    @settings(max_examples=50)
    def test_affine_in_lambda(self, seed, lam):
        rng = np.random.default_rng(seed)
        preds = list(random_simplex(rng, 3, 4))
        br = combined_loss(preds, 2, lam)
        assert br.l_total == pytest.approx(br.l_sup + lam * (br.l_cons - br.l_sup), rel=1e-12, abs=1e-12)
        assert br.l_total == pytest.approx((1 - lam) * br.l_sup + lam * br.l_cons, abs=1e-12)


class TestCombinedGrad:
    def test_equal_preds_zero_consistency_grad(self):
        p = np.array([[0.2, 0.5, 0.3]] * 2)
        for g in combined_loss_grad([p, p, p], [0, 1], 1.0, detach_targets=True):
            # -p_k/p_j = -1 everywhere: a constant shift, which the softmax Jacobian removes
            np.testing.assert_allclose(g - g.mean(axis=1, keepdims=True), 0.0, atol=1e-15)

    def test_ce_only_identity(self):
        p = np.array([0.7, 0.2, 0.1])
        g = combined_loss_grad([p], 0, 0.0)[0]
        np.testing.assert_array_equal(g, [-1 / 0.7, 0.0, 0.0])

    def test_linearity(self):
        rng = np.random.default_rng(3)
        preds = [random_simplex(rng, 4, 3) for _ in range(2)]
        y = np.array([0, 1, 2, 0])
        g0 = combined_loss_grad(preds, y, 0.0)
        g1 = combined_loss_grad(preds, y, 1.0)
        gh = combined_loss_grad(preds, y, 0.5)
        for a, b, h in zip(g0, g1, gh):
            np.testing.assert_allclose(h, 0.5 * a + 0.5 * b, rtol=1e-13, atol=1e-15)

    @pytest.mark.parametrize("lam", [0.0, 0.5, 1.0])
    def test_coupled_matches_fd(self, lam):
        rng = np.random.default_rng(int(lam * 10))
        preds = [random_simplex(rng, 3, 4) for _ in range(3)]
        y = np.array([0, 3, 1])
        shape = preds[0].shape
        g = combined_loss_grad(preds, y, lam, detach_targets=False)
        for j in range(3):
            def f(v, j=j):
                ps = list(preds)
                ps[j] = v.reshape(shape)
                return combined_loss(ps, y, lam).l_total
            assert rel_err(g[j], central_diff(f, preds[j].ravel())) < 1e-6

    @pytest.mark.parametrize("lam", [0.0, 0.5, 1.0])
    def test_detached_matches_fd(self, lam):
        rng = np.random.default_rng(100 + int(lam * 10))
        preds = [random_simplex(rng, 3, 4) for _ in range(3)]
        y = np.array([2, 0, 1])
        shape = preds[0].shape
        g = combined_loss_grad(preds, y, lam, detach_targets=True)
        for j in range(3):
            def f(v, j=j):
                pj = v.reshape(shape)
                ce = -np.mean(np.log(pj[np.arange(3), y]))
                kl = sum(np.mean(np.sum(preds[k] * np.log(preds[k] / pj), axis=1))
                         for k in range(3) if k != j)
                return (1 - lam) * ce + lam * kl
            assert rel_err(g[j], central_diff(f, preds[j].ravel())) < 1e-6

    def test_saturated_inputs_finite(self):
        p1 = np.array([[1.0, 0.0, 0.0]])
        p2 = np.array([[0.0, 1.0, 0.0]])
        for detach in (True, False):
            for g in combined_loss_grad([p1, p2], [2], 0.7, detach):
                assert np.all(np.isfinite(g))
        assert math.isfinite(combined_loss([p1, p2], [2], 0.7).l_total)
