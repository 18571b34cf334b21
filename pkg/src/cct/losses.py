"""Supervision, pairwise-KL consistency, ramp-up weighting and their mix.

Probabilities are accepted as a single distribution of shape ``(C,)`` or a
batch of shape ``(B, C)``.  Batched losses are the mean over samples, and
gradients carry the matching ``1/B`` factor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, LabelError, ShapeError

EPS_CLAMP = 1e-12


def _as_batch(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim == 1:
        p = p[None, :]
    if p.ndim != 2:
        raise ShapeError(f"expected a distribution or a batch of distributions, got shape {p.shape}")
    return p


def _as_labels(y, n: int, n_classes: int) -> np.ndarray:
    y = np.atleast_1d(np.asarray(y))
    if y.shape != (n,):
        raise ShapeError(f"{y.size} labels for {n} distributions")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise LabelError("labels must be integers")
        y = y.astype(np.int64)
    if np.any((y < 0) | (y >= n_classes)):
        raise LabelError(f"label out of range [0, {n_classes})")
    return y


def _xlogx(p: np.ndarray) -> np.ndarray:
    return p * np.log(np.where(p > 0, p, 1.0))


def ce_per_sample(p, y) -> np.ndarray:
    P = _as_batch(p)
    yy = _as_labels(y, P.shape[0], P.shape[1])
    return -np.log(np.maximum(P[np.arange(P.shape[0]), yy], EPS_CLAMP))


def kl_per_sample(p, q) -> np.ndarray:
    P, Q = _as_batch(p), _as_batch(q)
    if P.shape != Q.shape:
        raise ShapeError(f"KL arguments differ in shape: {P.shape} vs {Q.shape}")
    return np.sum(_xlogx(P) - P * np.log(np.maximum(Q, EPS_CLAMP)), axis=1)


def cross_entropy(p, y) -> float:
    """-ln p[y], clamped; averaged when given a batch."""
    return float(np.mean(ce_per_sample(p, y)))


def kl_div(p, q) -> float:
    """KL(p || q) with 0 ln 0 = 0 and q clamped away from zero."""
    return float(np.mean(kl_per_sample(p, q)))


def supervision_loss(preds: Sequence, y) -> float:
    if len(preds) == 0:
        raise ConfigError("supervision loss needs at least one network", field="n_networks")
    return float(sum(cross_entropy(p, y) for p in preds))


def _pairs(m: int) -> list[tuple[int, int]]:
    # (k, j) meaning KL(p_k || p_j), the term attributed to network j
    return [(k, j) for j in range(m) for k in range(m) if k != j]


def consistency_loss(preds: Sequence) -> float:
    if len(preds) < 2:
        raise ConfigError("consistency loss needs at least two networks", field="n_networks")
    return float(sum(kl_div(preds[k], preds[j]) for k, j in _pairs(len(preds))))


@dataclass(frozen=True)
class BalanceSchedule:
    lambda_max: float
    beta: float
    ramp_epochs: float
    epochs: int | None = None

    def __post_init__(self):
        if not 0.0 < self.lambda_max <= 1.0:
            raise ConfigError(f"lambda_max must lie in (0, 1], got {self.lambda_max}", field="lambda_max")
        if not self.beta > 0:
            raise ConfigError(f"beta must be positive, got {self.beta}", field="beta")
        if not self.ramp_epochs > 0:
            raise ConfigError(f"ramp_epochs must be positive, got {self.ramp_epochs}", field="ramp_epochs")


def ramp_lambda(e: float, sched: BalanceSchedule) -> float:
    """Gaussian ramp-up of the consistency weight, held at its peak after ``ramp_epochs``."""
    if sched.ramp_epochs <= 0:
        raise ConfigError("ramp_epochs must be positive", field="ramp_epochs")
    if e < 0:
        raise ValueError(f"epoch must be non-negative, got {e}")
    if e >= sched.ramp_epochs:
        return float(sched.lambda_max)
    t = 1.0 - e / sched.ramp_epochs
    return float(sched.lambda_max * math.exp(-sched.beta * t * t))


@dataclass
class LossBreakdown:
    l_sup: float
    l_cons: float
    lam: float
    l_total: float
    ce_terms: list[float] = field(default_factory=list)
    kl_terms: list[float] = field(default_factory=list)
    kl_pairs: list[tuple[int, int]] = field(default_factory=list)


def _check_lambda(lam: float) -> None:
    if not 0.0 <= lam <= 1.0:
        raise ConfigError(f"lambda must lie in [0, 1], got {lam}", field="lambda")


def combined_loss(preds: Sequence, y, lam: float) -> LossBreakdown:
    _check_lambda(lam)
    if len(preds) == 0:
        raise ConfigError("need at least one network", field="n_networks")
    ce = [cross_entropy(p, y) for p in preds]
    pairs = _pairs(len(preds))
    kl = [kl_div(preds[k], preds[j]) for k, j in pairs]
    l_sup = float(sum(ce))
    l_cons = float(sum(kl))  # 0.0 when M == 1
    return LossBreakdown(l_sup, l_cons, float(lam), (1.0 - lam) * l_sup + lam * l_cons,
                         ce, kl, pairs)


def combined_loss_grad(preds: Sequence, y, lam: float, detach_targets: bool = True) -> list[np.ndarray]:
    """Gradient of the batch-mean combined loss w.r.t. each network's probabilities.

    With ``detach_targets`` the term KL(p_k || p_j) only reaches p_j; otherwise
    it also reaches p_k.
    """
    _check_lambda(lam)
    if len(preds) == 0:
        raise ConfigError("need at least one network", field="n_networks")
    P = [_as_batch(p) for p in preds]
    B, C = P[0].shape
    if any(p.shape != (B, C) for p in P):
        raise ShapeError("all networks must give predictions of the same shape")
    yy = _as_labels(y, B, C)
    rows = np.arange(B)

    grads = []
    for p in P:
        g = np.zeros_like(p)
        py = p[rows, yy]
        g[rows, yy] = np.where(py > EPS_CLAMP, -1.0 / np.where(py > EPS_CLAMP, py, 1.0), 0.0)
        grads.append((1.0 - lam) * g)

    if lam != 0.0 and len(P) > 1:
        clamped = [np.maximum(p, EPS_CLAMP) for p in P]
        for k, j in _pairs(len(P)):
            pk, pj = P[k], P[j]
            # d/dq of -p ln max(q, eps)
            grads[j] += lam * np.where(pj > EPS_CLAMP, -pk / clamped[j], 0.0)
            if not detach_targets:
                grads[k] += lam * (np.log(clamped[k]) + 1.0 - np.log(clamped[j]))

    single = np.asarray(preds[0]).ndim == 1
    return [(g / B)[0] if single else g / B for g in grads]
