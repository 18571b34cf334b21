"""Training and experiment configuration, JSON (de)serialization and validation."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .data import NoiseSpec
from .errors import ConfigError


@dataclass(frozen=True)
class TrainConfig:
    n_networks: int = 3
    arch: tuple[int, ...] = (2, 16, 16, 4)
    lambda_max: float = 0.9
    beta: float = 4.0
    ramp_epochs: float = 30
    epochs: int = 60
    lr: float = 0.001
    lr_decay: float = 0.95
    batch_size: int = 64
    seed: int = 0
    detach_targets: bool = True
    oversample: bool = False
    # False trains every network on supervision loss alone (lambda pinned to 0)
    consistency: bool = True
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self):
        object.__setattr__(self, "arch", tuple(int(a) for a in self.arch))
        if isinstance(self.noise, dict):
            object.__setattr__(self, "noise", _noise_from_dict(self.noise))
        self.validate()

    def validate(self) -> None:
        def bad(name, msg):
            raise ConfigError(f"{name}: {msg} (got {getattr(self, name)!r})", field=name)

        if not (isinstance(self.n_networks, int) and self.n_networks >= 1):
            bad("n_networks", "must be an integer >= 1")
        if len(self.arch) < 2 or any(a < 1 for a in self.arch):
            bad("arch", "needs at least two layer sizes, all >= 1")
        if not 0.0 < self.lambda_max <= 1.0:
            bad("lambda_max", "must lie in (0, 1]")
        if not self.beta > 0:
            bad("beta", "must be positive")
        if not (isinstance(self.epochs, int) and self.epochs >= 0):
            bad("epochs", "must be a non-negative integer")
        if not self.ramp_epochs > 0 or (self.epochs > 0 and self.ramp_epochs > self.epochs):
            bad("ramp_epochs", "must satisfy 0 < ramp_epochs <= epochs")
        if not self.lr > 0:
            bad("lr", "must be positive")
        if not 0.0 < self.lr_decay <= 1.0:
            bad("lr_decay", "must lie in (0, 1]")
        if not (isinstance(self.batch_size, int) and self.batch_size >= 1):
            bad("batch_size", "must be an integer >= 1")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            bad("seed", "must be a non-negative integer")
        for flag in ("detach_targets", "oversample", "consistency"):
            if not isinstance(getattr(self, flag), bool):
                bad(flag, "must be a boolean")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["arch"] = list(self.arch)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            name = sorted(unknown)[0]
            raise ConfigError(f"{name}: unknown training field", field=name)
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"invalid training config: {exc}") from exc


def _noise_from_dict(d: dict) -> NoiseSpec:
    known = {f.name for f in dataclasses.fields(NoiseSpec)}
    unknown = set(d) - known
    if unknown:
        name = "noise." + sorted(unknown)[0]
        raise ConfigError(f"{name}: unknown noise field", field=name)
    return NoiseSpec(**d)


def config_hash(cfg: TrainConfig) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class DataConfig:
    kind: str = "gaussian"          # "gaussian" or "csv"
    n_classes: int = 4
    dim: int = 2
    n_per_class: int = 1500
    spread: float = 0.35
    seed: int = 0
    fractions: tuple[float, float, float] = (4 / 6, 1 / 6, 1 / 6)
    # csv mode
    train_path: str | None = None
    val_path: str | None = None
    test_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "fractions", tuple(float(f) for f in self.fractions))
        if self.kind not in ("gaussian", "csv"):
            raise ConfigError(f"data.kind: must be 'gaussian' or 'csv' (got {self.kind!r})", field="data.kind")
        if self.kind == "csv" and not (self.train_path and self.val_path):
            raise ConfigError("data.train_path: csv data needs train_path and val_path", field="data.train_path")
        if self.kind == "gaussian":
            if self.n_classes < 2 or self.dim < 2 or self.n_per_class < 1 or not self.spread > 0:
                raise ConfigError("data: invalid gaussian cluster parameters", field="data")


@dataclass(frozen=True)
class ExperimentConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    data: DataConfig = field(default_factory=DataConfig)
    out_dir: str = "runs/default"
    # list of (field, values); field may be "noise.rate" etc.
    axes: tuple[tuple[str, tuple], ...] = ()
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    workers: int = 1

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("seeds: seed list must be nonempty", field="seeds")
        for name, values in self.axes:
            _check_axis_field(name)
            if len(values) == 0:
                raise ConfigError(f"sweep axis {name!r} has no values", field="axes")
        if self.workers < 1:
            raise ConfigError("workers: must be >= 1", field="workers")

    def to_dict(self) -> dict:
        return {
            "train": self.train.to_dict(),
            "data": dataclasses.asdict(self.data) | {"fractions": list(self.data.fractions)},
            "out_dir": self.out_dir,
            "axes": [[name, list(values)] for name, values in self.axes],
            "seeds": list(self.seeds),
            "workers": self.workers,
        }


def _check_axis_field(name: str) -> None:
    head, _, rest = name.partition(".")
    train_fields = {f.name for f in dataclasses.fields(TrainConfig)}
    if head not in train_fields or (rest and head != "noise"):
        raise ConfigError(f"sweep axis {name!r} is not a TrainConfig field", field="axes")
    if rest and rest not in {f.name for f in dataclasses.fields(NoiseSpec)}:
        raise ConfigError(f"sweep axis {name!r} is not a noise field", field="axes")


def with_field(cfg: TrainConfig, name: str, value: Any) -> TrainConfig:
    """Copy of ``cfg`` with one (possibly ``noise.``-dotted) field replaced."""
    head, _, rest = name.partition(".")
    if rest:
        return dataclasses.replace(cfg, noise=dataclasses.replace(cfg.noise, **{rest: value}))
    return dataclasses.replace(cfg, **{head: value})


def _parse_axes(raw) -> tuple[tuple[str, tuple], ...]:
    if raw is None:
        return ()
    items = raw.items() if isinstance(raw, dict) else raw
    out = []
    for item in items:
        try:
            name, values = item
        except (TypeError, ValueError):
            raise ConfigError(f"axes: bad entry {item!r}; expected [field, [values...]]", field="axes")
        if not isinstance(values, (list, tuple)):
            raise ConfigError(f"axes: values for {name!r} must be a list", field="axes")
        out.append((str(name), tuple(values)))
    return tuple(out)


def experiment_from_dict(d: dict) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(d) - {"train", "data", "out_dir", "axes", "seeds", "workers"}
    if unknown:
        name = sorted(unknown)[0]
        raise ConfigError(f"{name}: unknown top-level field", field=name)
    train = TrainConfig.from_dict(d.get("train", {}))
    data_raw = d.get("data", {})
    data_fields = {f.name for f in dataclasses.fields(DataConfig)}
    if set(data_raw) - data_fields:
        name = "data." + sorted(set(data_raw) - data_fields)[0]
        raise ConfigError(f"{name}: unknown data field", field=name)
    try:
        data = DataConfig(**data_raw)
    except TypeError as exc:
        raise ConfigError(f"data: {exc}", field="data") from exc
    seeds = d.get("seeds", [train.seed])
    return ExperimentConfig(
        train=train, data=data,
        out_dir=str(d.get("out_dir", "runs/default")),
        axes=_parse_axes(d.get("axes")),
        seeds=tuple(int(s) for s in seeds),
        workers=int(d.get("workers", 1)),
    )


def load_experiment(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return experiment_from_dict(doc)
