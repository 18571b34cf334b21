"""Synthetic Gaussian-cluster data, label-noise injection, splits, oversampling, CSV I/O."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigError, DataError, ParseError, ShapeError, StateError


@dataclass(frozen=True)
class LabeledSample:
    features: np.ndarray
    clean_label: int
    observed_label: int

    @property
    def corrupted(self) -> bool:
        return self.clean_label != self.observed_label


@dataclass(frozen=True)
class Dataset:
    """Column-oriented labelled dataset.

    ``observed`` is what a trainer may see; ``clean`` is ground truth kept only
    for evaluation and memorization tracking.
    """
    X: np.ndarray
    clean: np.ndarray
    observed: np.ndarray
    n_classes: int
    noise_applied: bool = False

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise ShapeError(f"features must be a 2-D array, got shape {X.shape}")
        clean = np.asarray(self.clean, dtype=np.int64)
        observed = np.asarray(self.observed, dtype=np.int64)
        if clean.shape != (X.shape[0],) or observed.shape != (X.shape[0],):
            raise ShapeError("label vectors must have one entry per sample")
        for name, lab in (("clean", clean), ("observed", observed)):
            if lab.size and (lab.min() < 0 or lab.max() >= self.n_classes):
                raise DataError(f"{name} labels out of range [0, {self.n_classes})")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "clean", clean)
        object.__setattr__(self, "observed", observed)

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def corrupted(self) -> np.ndarray:
        return self.clean != self.observed

    @property
    def noise_rate_actual(self) -> float:
        return float(self.corrupted.sum() / len(self)) if len(self) else 0.0

    @property
    def samples(self) -> list[LabeledSample]:
        return list(iter(self))

    def __iter__(self) -> Iterator[LabeledSample]:
        for x, c, o in zip(self.X, self.clean, self.observed):
            yield LabeledSample(x, int(c), int(o))

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return replace(self, X=self.X[idx], clean=self.clean[idx], observed=self.observed[idx])

    def equals(self, other: "Dataset") -> bool:
        return (self.n_classes == other.n_classes
                and np.array_equal(self.X, other.X)
                and np.array_equal(self.clean, other.clean)
                and np.array_equal(self.observed, other.observed))


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "none"   # "none" | "symmetric" | "asymmetric"
    rate: float = 0.0
    pair_map: dict[int, int] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "symmetric", "asymmetric"):
            raise ConfigError(f"unknown noise kind {self.kind!r}", field="noise.kind")
        if not 0.0 <= self.rate <= 1.0:
            raise ConfigError(f"noise rate must lie in [0, 1], got {self.rate}", field="noise.rate")
        if self.pair_map is not None:
            pm = {int(k): int(v) for k, v in self.pair_map.items()}
            if any(k == v for k, v in pm.items()):
                raise ConfigError("pair_map must send every class to a different class",
                                  field="noise.pair_map")
            object.__setattr__(self, "pair_map", pm)


def gen_gaussian_clusters(n_classes: int, dim: int, n_per_class: int, spread: float,
                          seed: int, radius: float = 1.0) -> Dataset:
    """Isotropic Gaussian blobs with means on a circle of ``radius``.

    The first two coordinates of class ``c``'s mean are at angle ``2*pi*c/C``
    (plus a seeded rotation); any extra coordinates of the mean are drawn from
    N(0, radius^2 / dim).  ``spread`` is the per-axis standard deviation.
    """
    if n_classes < 2 or dim < 2 or n_per_class < 1 or not spread > 0:
        raise ConfigError(f"invalid cluster parameters C={n_classes} d={dim} "
                          f"n_per_class={n_per_class} spread={spread}")
    rng = np.random.default_rng(seed)
    phase = rng.uniform(0, 2 * math.pi)
    means = np.zeros((n_classes, dim))
    ang = phase + 2 * math.pi * np.arange(n_classes) / n_classes
    means[:, 0] = radius * np.cos(ang)
    means[:, 1] = radius * np.sin(ang)
    if dim > 2:
        means[:, 2:] = rng.normal(0, radius / math.sqrt(dim), size=(n_classes, dim - 2))
    labels = np.repeat(np.arange(n_classes), n_per_class)
    X = means[labels] + rng.normal(0, spread, size=(labels.size, dim))
    return Dataset(X, labels, labels.copy(), n_classes)


def default_pair_map(n_classes: int) -> dict[int, int]:
    return {c: (c + 1) % n_classes for c in range(n_classes)}


def inject_noise(ds: Dataset, spec: NoiseSpec) -> Dataset:
    if ds.noise_applied or ds.corrupted.any():
        raise StateError("dataset already carries label noise")
    if spec.kind == "none" or spec.rate == 0.0:
        return replace(ds, noise_applied=True)
    C = ds.n_classes
    rng = np.random.default_rng(spec.seed)
    flip = rng.random(len(ds)) < spec.rate
    observed = ds.clean.copy()
    if spec.kind == "symmetric":
        # shift by 1..C-1 gives a uniform draw over the other classes
        shift = rng.integers(1, C, size=len(ds))
        observed[flip] = (ds.clean[flip] + shift[flip]) % C
    else:
        pm = spec.pair_map if spec.pair_map is not None else default_pair_map(C)
        target = np.array([pm.get(c, c) for c in range(C)])
        if np.any(target == np.arange(C)):
            raise ConfigError("pair_map must cover every class", field="noise.pair_map")
        observed[flip] = target[ds.clean[flip]]
    return replace(ds, observed=observed, noise_applied=True)


def split(ds: Dataset, fractions: Sequence[float], seed: int) -> tuple[Dataset, Dataset, Dataset]:
    """Stratified (by clean label) train/val/test partition; each part keeps the original order."""
    fr = [float(f) for f in fractions]
    if len(fr) != 3 or any(f < 0 for f in fr) or abs(sum(fr) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must be three non-negative numbers summing to 1, got {fractions}",
                          field="fractions")
    rng = np.random.default_rng(seed)
    parts: list[list[np.ndarray]] = [[], [], []]
    for c in range(ds.n_classes):
        idx = np.flatnonzero(ds.clean == c)
        idx = idx[rng.permutation(idx.size)]
        n_tr = int(round(idx.size * fr[0]))
        n_va = min(int(round(idx.size * fr[1])), idx.size - n_tr)
        parts[0].append(idx[:n_tr])
        parts[1].append(idx[n_tr:n_tr + n_va])
        parts[2].append(idx[n_tr + n_va:])
    return tuple(ds.subset(np.sort(np.concatenate(p))) for p in parts)  # type: ignore[return-value]


def oversample_balance(ds: Dataset, seed: int) -> Dataset:
    """Duplicate samples (with replacement) until every observed class matches the largest."""
    counts = np.bincount(ds.observed, minlength=ds.n_classes)
    if np.any(counts == 0):
        empty = np.flatnonzero(counts == 0).tolist()
        raise DataError(f"cannot oversample: no samples observed for classes {empty}")
    rng = np.random.default_rng(seed)
    target = counts.max()
    extra = [rng.choice(np.flatnonzero(ds.observed == c), size=target - counts[c], replace=True)
             for c in range(ds.n_classes) if counts[c] < target]
    if not extra:
        return ds
    idx = np.concatenate([np.arange(len(ds))] + extra)
    return ds.subset(idx)


# -- CSV -----------------------------------------------------------------

def write_csv(ds: Dataset, path) -> None:
    d = ds.dim
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"f{i}" for i in range(d)] + ["label", "clean_label"])
        for x, o, c in zip(ds.X, ds.observed, ds.clean):
            w.writerow([repr(float(v)) for v in x] + [int(o), int(c)])


def load_csv(path, n_classes: int | None = None) -> Dataset:
    """Read ``f0..f{d-1},label[,clean_label]``.  ``n_classes`` defaults to max label + 1."""
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty file", line=1)
    header = [h.strip() for h in rows[0]]
    has_clean = header[-1:] == ["clean_label"]
    n_feat = len(header) - (2 if has_clean else 1)
    expected = [f"f{i}" for i in range(n_feat)] + ["label"] + (["clean_label"] if has_clean else [])
    if n_feat < 1 or header != expected:
        raise ParseError(f"bad header {header}; expected f0,...,f{{d-1}},label[,clean_label]", line=1)

    X, obs, clean = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ShapeError(f"line {lineno}: {len(row)} fields, header has {len(header)}")
        try:
            feats = [float(v) for v in row[:n_feat]]
            labels = [int(v) for v in row[n_feat:]]
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from exc
        if not all(math.isfinite(v) for v in feats):
            raise ParseError("non-finite feature value", line=lineno)
        for lab in labels:
            if lab < 0 or (n_classes is not None and lab >= n_classes):
                raise ParseError(f"label {lab} outside [0, {n_classes})", line=lineno)
        X.append(feats)
        obs.append(labels[0])
        clean.append(labels[1] if has_clean else labels[0])
    if not X:
        raise ParseError("no data rows", line=2)
    C = n_classes if n_classes is not None else max(max(obs), max(clean)) + 1
    return Dataset(np.array(X), np.array(clean), np.array(obs), C)
