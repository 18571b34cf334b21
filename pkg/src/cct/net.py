"""Dense ReLU/softmax classifier with hand-written backprop and Adam.

Everything here is functional: updates return new objects and never touch
their inputs, so a fixed set of inputs always yields bit-identical outputs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ArchitectureError, CheckpointError, NumericError, ShapeError

Grads = list[tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class Network:
    # layers[k] = (W [out x in], b [out])
    layers: tuple[tuple[np.ndarray, np.ndarray], ...]
    seed: int
    activation: str = "relu"

    @property
    def arch(self) -> list[int]:
        return [self.layers[0][0].shape[1]] + [W.shape[0] for W, _ in self.layers]

    @property
    def n_classes(self) -> int:
        return self.layers[-1][0].shape[0]

    @property
    def n_params(self) -> int:
        return sum(W.size + b.size for W, b in self.layers)

    def flat_params(self) -> np.ndarray:
        return np.concatenate([np.concatenate([W.ravel(), b]) for W, b in self.layers])

    def with_flat_params(self, theta: np.ndarray) -> "Network":
        theta = np.asarray(theta, dtype=np.float64)
        if theta.size != self.n_params:
            raise ShapeError(f"expected {self.n_params} parameters, got {theta.size}")
        layers, i = [], 0
        for W, b in self.layers:
            Wn = theta[i:i + W.size].reshape(W.shape).copy()
            i += W.size
            bn = theta[i:i + b.size].copy()
            i += b.size
            layers.append((Wn, bn))
        return Network(tuple(layers), self.seed, self.activation)


@dataclass(frozen=True)
class AdamState:
    m: tuple[tuple[np.ndarray, np.ndarray], ...]
    v: tuple[tuple[np.ndarray, np.ndarray], ...]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, net: Network, **kw) -> "AdamState":
        z = tuple((np.zeros_like(W), np.zeros_like(b)) for W, b in net.layers)
        return cls(m=z, v=tuple((W.copy(), b.copy()) for W, b in z), **kw)


@dataclass
class ForwardTrace:
    inputs: np.ndarray
    pre: list[np.ndarray] = field(default_factory=list)   # z_k = a_{k-1} W_k^T + b_k
    acts: list[np.ndarray] = field(default_factory=list)  # a_k; acts[-1] is probs
    probs: np.ndarray | None = None


def init_network(arch: Sequence[int], seed: int) -> Network:
    """He-uniform weights, zero biases, drawn from ``default_rng(seed)``."""
    arch = [int(a) for a in arch]
    if len(arch) < 2 or any(a < 1 for a in arch):
        raise ArchitectureError(f"invalid architecture {arch}: need >=2 layer sizes, all >=1",
                                field="arch")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(arch[:-1], arch[1:]):
        limit = np.sqrt(6.0 / fan_in)
        W = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        layers.append((W, np.zeros(fan_out)))
    return Network(tuple(layers), int(seed))


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward(net: Network, batch: np.ndarray) -> ForwardTrace:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    n_in = net.layers[0][0].shape[1]
    if x.ndim != 2 or x.shape[1] != n_in:
        raise ShapeError(f"batch has shape {x.shape}, network expects {n_in} input features")
    trace = ForwardTrace(inputs=x)
    a = x
    last = len(net.layers) - 1
    for k, (W, b) in enumerate(net.layers):
        z = a @ W.T + b
        a = softmax(z) if k == last else np.maximum(z, 0.0)
        trace.pre.append(z)
        trace.acts.append(a)
    trace.probs = a
    return trace


def backward(net: Network, trace: ForwardTrace, dL_dp: np.ndarray) -> Grads:
    """Backpropagate a gradient w.r.t. the output probabilities.

    ``dL_dp`` must already contain any batch-mean factor; gradients are summed
    over the rows it is given.
    """
    g = np.asarray(dL_dp, dtype=np.float64)
    p = trace.probs
    if g.shape != p.shape:
        raise ShapeError(f"dL_dp shape {g.shape} does not match probabilities {p.shape}")
    # softmax Jacobian-vector product
    delta = p * (g - np.sum(g * p, axis=1, keepdims=True))
    grads: Grads = [None] * len(net.layers)  # type: ignore[list-item]
    for k in range(len(net.layers) - 1, -1, -1):
        a_prev = trace.inputs if k == 0 else trace.acts[k - 1]
        grads[k] = (delta.T @ a_prev, delta.sum(axis=0))
        if k > 0:
            delta = (delta @ net.layers[k][0]) * (trace.pre[k - 1] > 0)
    return grads


def adam_step(net: Network, state: AdamState, grads: Grads, lr: float) -> tuple[Network, AdamState]:
    if lr <= 0:
        raise ValueError(f"lr must be positive, got {lr}")
    if len(grads) != len(net.layers):
        raise ShapeError(f"{len(grads)} gradient layers for a {len(net.layers)}-layer network")
    for k, ((gW, gb), (W, b)) in enumerate(zip(grads, net.layers)):
        if gW.shape != W.shape or gb.shape != b.shape:
            raise ShapeError(f"layer {k}: gradient shapes {gW.shape}/{gb.shape} "
                             f"do not match parameters {W.shape}/{b.shape}")
        if not (np.all(np.isfinite(gW)) and np.all(np.isfinite(gb))):
            raise NumericError(f"non-finite gradient in layer {k}")

    b1, b2, eps = state.beta1, state.beta2, state.eps
    t = state.step + 1
    bc1 = 1.0 - b1 ** t
    bc2 = 1.0 - b2 ** t
    layers, ms, vs = [], [], []
    for (W, b), (mW, mb), (vW, vb), (gW, gb) in zip(net.layers, state.m, state.v, grads):
        new = []
        for P, m, v, g in ((W, mW, vW, gW), (b, mb, vb, gb)):
            m = b1 * m + (1.0 - b1) * g
            v = b2 * v + (1.0 - b2) * (g * g)
            P = P - lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
            new.append((P, m, v))
        layers.append((new[0][0], new[1][0]))
        ms.append((new[0][1], new[1][1]))
        vs.append((new[0][2], new[1][2]))
    out = Network(tuple(layers), net.seed, net.activation)
    return out, AdamState(tuple(ms), tuple(vs), t, b1, b2, eps)


def decay_lr(lr: float, epoch: int, factor: float = 0.95) -> float:
    return lr * factor ** epoch


# -- checkpoints ---------------------------------------------------------

def ensemble_to_dict(nets: Sequence[Network], epoch: int = 0, config_hash: str = "") -> dict:
    if not nets:
        raise CheckpointError("cannot checkpoint an empty ensemble")
    return {
        "format": "cct-ensemble",
        "version": 1,
        "arch": nets[0].arch,
        "activation": nets[0].activation,
        "seeds": [n.seed for n in nets],
        "epoch": int(epoch),
        "config_hash": config_hash,
        # repr-based float output is shortest round-trip, so loads are bit-exact
        "networks": [
            {"seed": n.seed,
             "layers": [{"shape": list(W.shape), "weights": W.ravel().tolist(), "bias": b.tolist()}
                        for W, b in n.layers]}
            for n in nets
        ],
    }


def ensemble_from_dict(doc: dict) -> tuple[list[Network], dict]:
    try:
        if doc.get("format") != "cct-ensemble":
            raise CheckpointError("not a cct ensemble checkpoint")
        arch = [int(a) for a in doc["arch"]]
        nets = []
        for nd in doc["networks"]:
            layers = []
            for ld in nd["layers"]:
                shape = tuple(int(s) for s in ld["shape"])
                W = np.array(ld["weights"], dtype=np.float64).reshape(shape)
                b = np.array(ld["bias"], dtype=np.float64)
                if b.shape != (shape[0],):
                    raise CheckpointError(f"bias length {b.size} does not match layer shape {shape}")
                layers.append((W, b))
            net = Network(tuple(layers), int(nd["seed"]), doc.get("activation", "relu"))
            if net.arch != arch:
                raise CheckpointError(f"network arch {net.arch} disagrees with header {arch}")
            nets.append(net)
    except CheckpointError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint: {exc}") from exc
    if not nets:
        raise CheckpointError("checkpoint holds no networks")
    meta = {k: doc[k] for k in ("arch", "seeds", "epoch", "config_hash") if k in doc}
    return nets, meta


def save_ensemble(path, nets: Sequence[Network], epoch: int = 0, config_hash: str = "") -> None:
    Path(path).write_text(json.dumps(ensemble_to_dict(nets, epoch, config_hash)) + "\n",
                          encoding="utf-8")


def load_ensemble(path) -> tuple[list[Network], dict]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise CheckpointError("checkpoint root must be a JSON object")
    return ensemble_from_dict(doc)
