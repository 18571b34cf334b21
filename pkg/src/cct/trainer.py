"""Co-training of M networks under the ramped supervision/consistency mix."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .config import TrainConfig
from .data import Dataset, oversample_balance
from .errors import ConfigError, NumericError, ShapeError, UndefinedMetricError
from .losses import BalanceSchedule, combined_loss, combined_loss_grad, ramp_lambda
from .metrics import evaluate
from .net import AdamState, Network, adam_step, backward, decay_lr, forward, init_network


@dataclass
class Ensemble:
    networks: list[Network]
    adam_states: list[AdamState]

    def __post_init__(self):
        if not self.networks:
            raise ConfigError("an ensemble needs at least one network", field="n_networks")
        arch = self.networks[0].arch
        if any(n.arch != arch for n in self.networks):
            raise ShapeError("all networks in an ensemble must share one architecture")
        seeds = [n.seed for n in self.networks]
        if len(set(seeds)) != len(seeds):
            raise ConfigError(f"network seeds must be pairwise distinct, got {seeds}", field="seed")

    @property
    def M(self) -> int:
        return len(self.networks)

    @classmethod
    def from_networks(cls, nets: Sequence[Network]) -> "Ensemble":
        nets = list(nets)
        return cls(nets, [AdamState.zeros_like(n) for n in nets])


@dataclass
class EpochRecord:
    epoch: int
    lam: float
    lr: float
    l_sup: float
    l_cons: float
    l_total: float
    ce: list[float]
    val_acc: float
    val_f1: float
    val_overall: float
    val_acc_nets: list[float]
    mem_rate: float | None


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int | None = None
    best_overall: float = -math.inf
    best_networks: list[Network] | None = None


def network_seeds(cfg: TrainConfig) -> list[int]:
    """Per-network init seeds derived from the run seed; distinct for j < M."""
    return [int(np.random.SeedSequence([cfg.seed, j]).generate_state(1)[0]) for j in range(cfg.n_networks)]


def init_ensemble(cfg: TrainConfig) -> Ensemble:
    return Ensemble.from_networks(init_network(cfg.arch, s) for s in network_seeds(cfg))


def schedule(cfg: TrainConfig) -> BalanceSchedule:
    return BalanceSchedule(cfg.lambda_max, cfg.beta, cfg.ramp_epochs, cfg.epochs)


def epoch_lambda(cfg: TrainConfig, epoch: int) -> float:
    return ramp_lambda(epoch, schedule(cfg)) if cfg.consistency else 0.0


def epoch_order(seed: int, epoch: int, n: int) -> np.ndarray:
    return np.random.default_rng([seed, epoch]).permutation(n)


# -- inference -------------------------------------------------------------

def _nets(ens) -> list[Network]:
    return ens.networks if isinstance(ens, Ensemble) else list(ens)


def ensemble_probs(ens, X: np.ndarray) -> np.ndarray:
    nets = _nets(ens)
    return sum(forward(n, X).probs for n in nets) / len(nets)


def predict(ens, X: np.ndarray, net: int | None = None) -> np.ndarray:
    """Batch labels from the averaged ensemble, or from one network if ``net`` is given."""
    nets = _nets(ens)
    if net is None:
        return np.argmax(ensemble_probs(nets, X), axis=1)
    if not 0 <= net < len(nets):
        raise IndexError(f"network index {net} out of range for an ensemble of {len(nets)}")
    return np.argmax(forward(nets[net], X).probs, axis=1)


def infer_ensemble(ens, x) -> tuple[int, np.ndarray]:
    p = ensemble_probs(ens, np.asarray(x, dtype=np.float64))[0]
    return int(np.argmax(p)), p


def infer_single(ens, j: int, x) -> tuple[int, np.ndarray]:
    nets = _nets(ens)
    if not 0 <= j < len(nets):
        raise IndexError(f"network index {j} out of range for an ensemble of {len(nets)}")
    p = forward(nets[j], np.asarray(x, dtype=np.float64)).probs[0]
    return int(np.argmax(p)), p


def memorization_rate(ens, train_ds: Dataset) -> float:
    """Share of corrupted training samples on which the ensemble predicts the corrupted label."""
    bad = train_ds.corrupted
    if not bad.any():
        raise UndefinedMetricError("memorization rate needs at least one corrupted sample")
    pred = predict(ens, train_ds.X[bad])
    return float(np.mean(pred == train_ds.observed[bad]))


# -- training ----------------------------------------------------------------

def train(cfg: TrainConfig, train_ds: Dataset, val_ds: Dataset,
          init: Sequence[Network] | None = None,
          on_epoch: Callable[[EpochRecord], None] | None = None) -> tuple[Ensemble, TrainHistory]:
    """Run ``cfg.epochs`` epochs of co-training.

    Only ``observed`` labels enter the loss; ``clean`` labels of ``train_ds``
    are used solely for the logged memorization rate.  ``init`` warm-starts
    from existing networks (e.g. a loaded checkpoint); ``on_epoch`` sees each
    record as soon as it is complete.
    """
    if len(train_ds) == 0 or len(val_ds) == 0:
        raise ShapeError("training and validation sets must be nonempty")
    if train_ds.dim != cfg.arch[0] or val_ds.dim != cfg.arch[0]:
        raise ShapeError(f"data has {train_ds.dim} features, arch expects {cfg.arch[0]}")
    if train_ds.n_classes != cfg.arch[-1]:
        raise ShapeError(f"data has {train_ds.n_classes} classes, arch outputs {cfg.arch[-1]}")

    if init is not None:
        ens = Ensemble.from_networks(init)
        if ens.M != cfg.n_networks or ens.networks[0].arch != list(cfg.arch):
            raise ShapeError("warm-start networks do not match n_networks/arch")
    else:
        ens = init_ensemble(cfg)
    history = TrainHistory()

    fit_ds = oversample_balance(train_ds, cfg.seed) if cfg.oversample else train_ds
    X, y = fit_ds.X, fit_ds.observed
    N, B, M = len(fit_ds), cfg.batch_size, ens.M
    track_mem = bool(train_ds.corrupted.any())

    nets, states = list(ens.networks), list(ens.adam_states)
    for e in range(cfg.epochs):
        lam = epoch_lambda(cfg, e)
        lr = decay_lr(cfg.lr, e, cfg.lr_decay)
        order = epoch_order(cfg.seed, e, N)
        sums = np.zeros(3 + M)  # l_sup, l_cons, l_total, ce_j
        for bi, start in enumerate(range(0, N, B)):
            idx = order[start:start + B]
            xb, yb = X[idx], y[idx]
            traces = [forward(n, xb) for n in nets]
            probs = [t.probs for t in traces]
            br = combined_loss(probs, yb, lam)
            if not math.isfinite(br.l_total):
                raise NumericError(f"non-finite loss at epoch {e}, batch {bi}")
            sums += len(idx) * np.array([br.l_sup, br.l_cons, br.l_total, *br.ce_terms])
            dps = combined_loss_grad(probs, yb, lam, cfg.detach_targets)
            for j in range(M):
                grads = backward(nets[j], traces[j], dps[j])
                try:
                    nets[j], states[j] = adam_step(nets[j], states[j], grads, lr)
                except NumericError as exc:
                    raise NumericError(f"epoch {e}, batch {bi}, network {j}: {exc}") from exc
        means = sums / N

        rep = evaluate(predict(nets, val_ds.X), val_ds.clean, val_ds.n_classes)
        net_acc = [float(np.mean(predict(nets, val_ds.X, net=j) == val_ds.clean)) for j in range(M)]
        mem = memorization_rate(nets, train_ds) if track_mem else None
        history.records.append(EpochRecord(
            epoch=e, lam=lam, lr=lr,
            l_sup=float(means[0]), l_cons=float(means[1]), l_total=float(means[2]),
            ce=[float(v) for v in means[3:]],
            val_acc=rep.accuracy, val_f1=rep.f1_macro, val_overall=rep.overall,
            val_acc_nets=net_acc, mem_rate=mem,
        ))
        if on_epoch is not None:
            on_epoch(history.records[-1])
        if rep.overall > history.best_overall:
            history.best_overall = rep.overall
            history.best_epoch = e
            history.best_networks = list(nets)

    return Ensemble(nets, states), history
