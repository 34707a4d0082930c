"""Losses for the baseline regressor and the adversarial generator/discriminator pair.

Cross-entropy terms use the logit form ``softplus(-a)`` / ``softplus(a)`` so
no intermediate probability is ever rounded to 0 or 1.
"""
from typing import Tuple

import numpy as np

from models.training_entities import GeneratorLossTerms, LossWeights, PredictionPair
from utils.errors import LengthMismatch, TargetOutOfRange
from utils.numerics import sigmoid, softplus


def _paired(a, b) -> Tuple[np.ndarray, np.ndarray]:
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    if a.shape != b.shape:
        raise LengthMismatch(f"Vectors have lengths {a.size} and {b.size}")
    return a, b


def baseline_loss(predicted, actual) -> float:
    """Mean squared error."""
    predicted, actual = _paired(predicted, actual)
    if predicted.size == 0:
        raise LengthMismatch("baseline_loss needs at least one value")
    return float(np.mean((predicted - actual) ** 2))


def l_sce(logits, targets) -> float:
    logits, targets = _paired(logits, targets)
    if np.any((targets != 0.0) & (targets != 1.0)):
        raise TargetOutOfRange(f"Cross-entropy targets must be 0 or 1, got {np.unique(targets).tolist()}")
    # -log sigmoid(a) = softplus(-a); -log(1 - sigmoid(a)) = softplus(a)
    return float(np.sum(targets * softplus(-logits) + (1.0 - targets) * softplus(logits)))


def l_adv_g(d_logit_on_fake: float) -> float:
    return l_sce([d_logit_on_fake], [1.0])


def l_p(Y, Y_prime, p: int = 2) -> float:
    Y, Y_prime = _paired(Y, Y_prime)
    return float(np.linalg.norm(Y - Y_prime, ord=p)) if Y.size else 0.0


def l_dpl(Y_T: float, Y_next: float, Y_prime_next: float) -> float:
    return float(abs(np.sign(Y_prime_next - Y_T) - np.sign(Y_next - Y_T)))


def generator_loss(pair: PredictionPair, d_logit_on_fake: float, w: LossWeights) -> Tuple[float, GeneratorLossTerms]:
    adv = l_adv_g(d_logit_on_fake)
    forecast = l_p(pair.Y, pair.Y_prime, w.p)
    direction = l_dpl(pair.Y_T, pair.Y[-1], pair.Y_prime[-1])
    total = w.lambda_adv * adv + w.lambda_p * forecast + w.lambda_dpl * direction
    return total, GeneratorLossTerms(total=total, adv=adv, p=forecast, dpl=direction)


def discriminator_loss(d_logit_real: float, d_logit_fake: float) -> float:
    return l_sce([d_logit_real, d_logit_fake], [1.0, 0.0])


# --- Gradients used by the trainer (elementwise over a batch of samples) ---

def baseline_loss_grad(predicted, actual) -> np.ndarray:
    """d/d predicted of the per-sample squared error ``(predicted - actual)**2``."""
    predicted, actual = _paired(predicted, actual)
    return 2.0 * (predicted - actual)


def l_adv_g_grad(d_logit_on_fake) -> np.ndarray:
    """d/d logit of softplus(-logit)."""
    return np.atleast_1d(sigmoid(np.asarray(d_logit_on_fake, dtype=np.float64))) - 1.0


def l_p_grad(Y, Y_prime, p: int = 2) -> np.ndarray:
    """d/d Y_prime of ``||Y - Y_prime||_p``; zero at the kink."""
    Y, Y_prime = _paired(Y, Y_prime)
    diff = Y_prime - Y
    if p == 1:
        return np.sign(diff)
    norm = np.linalg.norm(diff)
    return diff / norm if norm > 0 else np.zeros_like(diff)


def discriminator_loss_grads(d_logit_real, d_logit_fake) -> Tuple[np.ndarray, np.ndarray]:
    real = np.atleast_1d(np.asarray(d_logit_real, dtype=np.float64))
    fake = np.atleast_1d(np.asarray(d_logit_fake, dtype=np.float64))
    return np.atleast_1d(sigmoid(real)) - 1.0, np.atleast_1d(sigmoid(fake))
