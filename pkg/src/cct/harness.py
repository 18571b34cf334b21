"""Single runs and grid sweeps: data preparation, artifacts on disk, aggregation."""
from __future__ import annotations

import csv
import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import data as D
from .config import ExperimentConfig, TrainConfig, config_hash, with_field
from .errors import CCTError, ConfigError, ShapeError
from .metrics import MetricReport, evaluate
from .net import save_ensemble
from .trainer import EpochRecord, Ensemble, TrainHistory, predict, train

METRIC_COLUMNS = ["epoch", "lambda", "lr", "l_sup", "l_cons", "l_total"]


def derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


@dataclass
class Splits:
    train: D.Dataset
    val: D.Dataset
    test: D.Dataset | None


def prepare_data(exp: ExperimentConfig, cfg: TrainConfig) -> Splits:
    """Build train/val/test for one run; label noise goes into the training split only."""
    dc = exp.data
    n_classes = cfg.arch[-1]
    if dc.kind == "gaussian":
        if dc.n_classes != n_classes or dc.dim != cfg.arch[0]:
            raise ConfigError(f"data: {dc.n_classes} classes x {dc.dim} features do not fit arch {list(cfg.arch)}",
                              field="data")
        ds = D.gen_gaussian_clusters(dc.n_classes, dc.dim, dc.n_per_class, dc.spread,
                                     seed=derive_seed(dc.seed, cfg.seed))
        tr, va, te = D.split(ds, dc.fractions, seed=derive_seed(dc.seed, cfg.seed, 1))
        if len(va) == 0:
            raise ConfigError("data.fractions: validation split is empty", field="data.fractions")
    else:
        tr = D.load_csv(dc.train_path, n_classes)
        va = D.load_csv(dc.val_path, n_classes)
        te = D.load_csv(dc.test_path, n_classes) if dc.test_path else None
    if cfg.noise.kind != "none" and cfg.noise.rate > 0:
        tr = D.inject_noise(tr, replace(cfg.noise, seed=derive_seed(cfg.noise.seed, cfg.seed)))
    return Splits(tr, va, te if te is not None and len(te) else None)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def metrics_header(m: int) -> list[str]:
    return (METRIC_COLUMNS + [f"ce_net{j}" for j in range(m)]
            + ["val_acc", "val_f1", "val_overall", "mem_rate"]
            + [f"val_acc_net{j}" for j in range(m)])


def metrics_row(r: EpochRecord) -> list[str]:
    vals = [r.epoch, r.lam, r.lr, r.l_sup, r.l_cons, r.l_total, *r.ce,
            r.val_acc, r.val_f1, r.val_overall, r.mem_rate, *r.val_acc_nets]
    return [_fmt(v) for v in vals]


def _report(nets, ds: D.Dataset) -> MetricReport:
    return evaluate(predict(nets, ds.X), ds.clean, ds.n_classes)


def run_training(exp: ExperimentConfig, cfg: TrainConfig, out_dir: Path | None,
                 write_checkpoints: bool = True) -> dict:
    """Train one configuration, write artifacts into ``out_dir`` and return the summary dict.

    The metrics CSV is flushed after every epoch, so a numeric failure leaves
    the rows completed so far on disk.
    """
    splits = prepare_data(exp, cfg)
    chash = config_hash(cfg)
    fh = writer = None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        fh = open(out_dir / "metrics.csv", "w", encoding="utf-8", newline="")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(metrics_header(cfg.n_networks))

    def on_epoch(rec: EpochRecord) -> None:
        if writer is not None:
            writer.writerow(metrics_row(rec))
            fh.flush()

    try:
        ens, hist = train(cfg, splits.train, splits.val, on_epoch=on_epoch)
    finally:
        if fh is not None:
            fh.close()

    summary = summarize(exp, cfg, chash, splits, ens, hist)
    if out_dir is not None:
        if write_checkpoints:
            save_ensemble(out_dir / "checkpoint_final.json", ens.networks, cfg.epochs, chash)
            best = hist.best_networks or ens.networks
            save_ensemble(out_dir / "checkpoint_best.json", best,
                          hist.best_epoch if hist.best_epoch is not None else 0, chash)
        (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return summary


def summarize(exp: ExperimentConfig, cfg: TrainConfig, chash: str, splits: Splits,
              ens: Ensemble, hist: TrainHistory) -> dict:
    eval_ds = splits.test if splits.test is not None else splits.val
    final = _report(ens.networks, eval_ds)
    last = hist.records[-1] if hist.records else None
    out = {
        "config": replace(exp, train=cfg).to_dict(),
        "config_hash": chash,
        "eval_split": "test" if splits.test is not None else "val",
        "n_train": len(splits.train),
        "noise_rate_actual": splits.train.noise_rate_actual,
        "epochs_run": len(hist.records),
        "accuracy": final.accuracy,
        "f1_macro": final.f1_macro,
        "overall": final.overall,
        "report": final.to_dict(),
        "net_accuracy": [float(np.mean(predict(ens.networks, eval_ds.X, net=j) == eval_ds.clean))
                         for j in range(ens.M)],
        "final_val": _report(ens.networks, splits.val).to_dict(),
        "mem_rate": last.mem_rate if last else None,
        "best_epoch": hist.best_epoch,
        "best_val_overall": hist.best_overall if hist.best_epoch is not None else None,
    }
    if hist.best_networks is not None:
        out["best_report"] = _report(hist.best_networks, eval_ds).to_dict()
    return out


# -- sweeps -----------------------------------------------------------------

def grid(exp: ExperimentConfig) -> list[tuple[tuple, TrainConfig]]:
    names = [name for name, _ in exp.axes]
    cells = []
    for values in itertools.product(*(vals for _, vals in exp.axes)):
        cfg = exp.train
        for name, v in zip(names, values):
            cfg = with_field(cfg, name, v)
        cells.append((values, cfg))
    return cells


def _cell_dirname(names, values, seed) -> str:
    parts = [f"{n}={v}" for n, v in zip(names, values)] + [f"seed={seed}"]
    return "__".join(parts).replace("/", "_")


def _run_cell(args) -> dict:
    exp, cfg, out_dir = args
    try:
        s = run_training(exp, cfg, out_dir, write_checkpoints=False)
        return {"ok": True, "accuracy": s["accuracy"], "f1_macro": s["f1_macro"],
                "overall": s["overall"], "mem_rate": s["mem_rate"]}
    except (CCTError, ArithmeticError, ValueError) as exc:
        return {"ok": False, "error": f"{type(exc).__name__}: {exc}"}


def _mean_std(xs: list[float]) -> tuple[float, float]:
    a = np.asarray(xs, dtype=np.float64)
    return float(a.mean()), float(a.std(ddof=0))


def run_sweep(exp: ExperimentConfig, out_dir: Path) -> list[dict]:
    """Run every grid cell for every seed and write ``sweep.csv`` plus ``sweep_runs.csv``.

    Returns one aggregated row per grid cell.
    """
    if not exp.axes:
        raise ConfigError("axes: a sweep needs at least one axis", field="axes")
    names = [n for n, _ in exp.axes]
    cells = grid(exp)
    jobs, keys = [], []
    for values, cfg in cells:
        for seed in exp.seeds:
            c = replace(cfg, seed=int(seed))
            jobs.append((exp, c, out_dir / "cells" / _cell_dirname(names, values, seed)))
            keys.append((values, seed))

    if exp.workers > 1:
        with ProcessPoolExecutor(max_workers=exp.workers) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(j) for j in jobs]

    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "sweep_runs.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + ["seed", "status", "f1", "accuracy", "overall", "mem_rate"])
        for (values, seed), r in zip(keys, results):
            if r["ok"]:
                w.writerow([_fmt(v) for v in values] + [seed, "ok"]
                           + [_fmt(r[k]) for k in ("f1_macro", "accuracy", "overall", "mem_rate")])
            else:
                w.writerow([_fmt(v) for v in values] + [seed, "failed: " + r["error"], "", "", "", ""])

    rows = []
    n_seeds = len(exp.seeds)
    for ci, (values, _) in enumerate(cells):
        rs = results[ci * n_seeds:(ci + 1) * n_seeds]
        row = {"axes": dict(zip(names, values)), "n_seeds": n_seeds}
        failed = [r["error"] for r in rs if not r["ok"]]
        if failed:
            row["status"] = "failed: " + failed[0]
        else:
            row["status"] = "ok"
            for key, col in (("f1_macro", "f1"), ("accuracy", "accuracy"), ("overall", "overall")):
                row[f"{col}_mean"], row[f"{col}_std"] = _mean_std([r[key] for r in rs])
            mems = [r["mem_rate"] for r in rs if r["mem_rate"] is not None]
            row["mem_rate_mean"] = _mean_std(mems)[0] if mems else None
        rows.append(row)

    stat_cols = ["f1_mean", "f1_std", "accuracy_mean", "accuracy_std",
                 "overall_mean", "overall_std", "mem_rate_mean"]
    with open(out_dir / "sweep.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + ["n_seeds", "status"] + stat_cols)
        for row in rows:
            w.writerow([_fmt(row["axes"][n]) for n in names] + [row["n_seeds"], row["status"]]
                       + [_fmt(row.get(c)) for c in stat_cols])
    (out_dir / "config.json").write_text(json.dumps(exp.to_dict(), indent=2) + "\n", encoding="utf-8")
    return rows


def format_table(rows: list[dict]) -> str:
    """Paper-style text table: axis values, F1, Accuracy, Overall as mean +/- std."""
    if not rows:
        return ""
    names = list(rows[0]["axes"])
    lines = [" | ".join(names + ["F1 score", "Accuracy", "Overall"])]
    for r in rows:
        cells = [str(r["axes"][n]) for n in names]
        if r["status"] != "ok":
            cells += ["failed"] * 3
        else:
            cells += [f"{r[c + '_mean']:.4f} ± {r[c + '_std']:.4f}" for c in ("f1", "accuracy", "overall")]
        lines.append(" | ".join(cells))
    return "\n".join(lines)


def check_dims(nets, ds: D.Dataset) -> None:
    if nets[0].arch[0] != ds.dim:
        raise ShapeError(f"checkpoint expects {nets[0].arch[0]} features, data has {ds.dim}")
