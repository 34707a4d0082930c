import math

import numpy as np
import pytest

from models.training_entities import LossWeights, PredictionPair
from networks import losses
from utils.errors import LengthMismatch, TargetOutOfRange

LN2 = math.log(2.0)


class TestBaselineLoss:
    def test_identical(self):
        assert losses.baseline_loss([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_hand_values(self):
        assert losses.baseline_loss([1, 2], [2, 4]) == pytest.approx(2.5)
        assert losses.baseline_loss([5], [2]) == pytest.approx(9.0)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            losses.baseline_loss([1, 2], [1])

    def test_gradient(self):
        np.testing.assert_allclose(losses.baseline_loss_grad([1.0, 3.0], [2.0, 2.0]), [-2.0, 2.0])


class TestCrossEntropy:
    def test_zero_logit(self):
        assert losses.l_sce([0.0], [1.0]) == pytest.approx(0.693147, abs=1e-6)
        assert losses.l_sce([0.0], [0.0]) == pytest.approx(0.693147, abs=1e-6)

    def test_confident_correct(self):
        assert losses.l_sce([10.0], [1.0]) == pytest.approx(4.5399e-5, rel=1e-4)

    def test_bad_target(self):
        with pytest.raises(TargetOutOfRange):
            losses.l_sce([0.0], [0.5])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            losses.l_sce([0.0, 1.0], [1.0])

    def test_matches_naive_form_where_naive_is_accurate(self):
        for a in np.linspace(-30.0, 30.0, 61):
            p = 1.0 / (1.0 + math.exp(-a))
            if 1e-6 < p < 1.0 - 1e-6:
                assert losses.l_sce([a], [1.0]) == pytest.approx(-math.log(p), rel=1e-6)
                assert losses.l_sce([a], [0.0]) == pytest.approx(-math.log(1.0 - p), rel=1e-6)

    def test_finite_at_extreme_logits(self):
        assert math.isfinite(losses.l_sce([-700.0, 700.0], [1.0, 0.0]))
        assert losses.l_sce([700.0], [1.0]) < 1e-300


class TestAdversarialLoss:
    def test_values(self):
        assert losses.l_adv_g(0.0) == pytest.approx(LN2)
        assert losses.l_adv_g(20.0) == pytest.approx(2.06e-9, rel=1e-2)

    def test_gradient(self):
        np.testing.assert_allclose(losses.l_adv_g_grad([0.0]), [-0.5])
        eps = 1e-6
        for a in (-3.0, 0.4, 2.5):
            numeric = (losses.l_adv_g(a + eps) - losses.l_adv_g(a - eps)) / (2 * eps)
            assert losses.l_adv_g_grad(a)[0] == pytest.approx(numeric, rel=1e-6)


class TestForecastLoss:
    def test_identical(self):
        assert losses.l_p([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_euclidean(self):
        assert losses.l_p([3.0, 4.0], [0.0, 0.0], p=2) == pytest.approx(5.0)

    def test_manhattan(self):
        assert losses.l_p([1.0, -2.0], [0.0, 0.0], p=1) == pytest.approx(3.0)

    def test_gradients(self):
        np.testing.assert_allclose(losses.l_p_grad([0.0, 0.0], [3.0, -4.0], p=2), [0.6, -0.8])
        np.testing.assert_allclose(losses.l_p_grad([0.0, 0.0], [3.0, -4.0], p=1), [1.0, -1.0])
        np.testing.assert_array_equal(losses.l_p_grad([1.0], [1.0], p=2), [0.0])


class TestDirectionLoss:
    @pytest.mark.parametrize("y_prime,expected", [(11.0, 0.0), (9.0, 2.0), (10.0, 1.0)])
    def test_direction_cases(self, y_prime, expected):
        assert losses.l_dpl(10.0, 12.0, y_prime) == expected


class TestGeneratorLoss:
    def test_only_forecast_term_on_perfect_prediction(self):
        pair = PredictionPair(Y=[1.0, 2.0], Y_prime=[1.0, 2.0], Y_T=0.5)
        total, terms = losses.generator_loss(pair, 0.0, LossWeights(0.0, 1.0, 0.0))
        assert total == 0.0
        assert terms.adv == pytest.approx(LN2)

    def test_sum_of_components(self):
        pair = PredictionPair(Y=[13.0, 14.0], Y_prime=[10.0, 10.0], Y_T=5.0)
        total, terms = losses.generator_loss(pair, 0.0, LossWeights(1.0, 1.0, 1.0))
        assert total == pytest.approx(5.693147, abs=1e-6)
        assert (terms.p, terms.dpl) == (pytest.approx(5.0), 0.0)
        assert terms.total == total

    def test_linear_in_weights(self):
        pair = PredictionPair(Y=[0.4], Y_prime=[0.3], Y_T=0.35)
        w = LossWeights(0.7, 1.3, 0.4)
        base, _ = losses.generator_loss(pair, -0.8, w)
        scaled, _ = losses.generator_loss(pair, -0.8, LossWeights(0.7 * 2.5, 1.3 * 2.5, 0.4 * 2.5))
        assert scaled == pytest.approx(2.5 * base, rel=1e-12)

    def test_pair_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            PredictionPair(Y=[1.0, 2.0], Y_prime=[1.0], Y_T=0.0)


class TestDiscriminatorLoss:
    def test_even_odds(self):
        assert losses.discriminator_loss(0.0, 0.0) == pytest.approx(1.386294, abs=1e-6)

    def test_confidently_right(self):
        assert losses.discriminator_loss(20.0, -20.0) == pytest.approx(4.1e-9, rel=2e-2)

    def test_confidently_wrong(self):
        assert losses.discriminator_loss(-20.0, 20.0) == pytest.approx(40.0, rel=1e-6)

    def test_gradients(self):
        d_real, d_fake = losses.discriminator_loss_grads([0.0, 2.0], [0.0, -1.0])
        eps = 1e-6
        for k, (r, f) in enumerate([(0.0, 0.0), (2.0, -1.0)]):
            num_real = (losses.discriminator_loss(r + eps, f) - losses.discriminator_loss(r - eps, f)) / (2 * eps)
            num_fake = (losses.discriminator_loss(r, f + eps) - losses.discriminator_loss(r, f - eps)) / (2 * eps)
            assert d_real[k] == pytest.approx(num_real, rel=1e-6)
            assert d_fake[k] == pytest.approx(num_fake, rel=1e-6)
