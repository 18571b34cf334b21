import csv
import json

import pytest

import cct.trainer
from cct.cli import main
from cct.config import experiment_from_dict
from cct.data import write_csv
from cct.harness import prepare_data


def tiny_config(tmp_path, **overrides):
    cfg = {
        "train": {"n_networks": 2, "arch": [2, 6, 3], "epochs": 3, "ramp_epochs": 2, "batch_size": 32,
                  "seed": 1, "noise": {"kind": "symmetric", "rate": 0.3, "seed": 0}},
        "data": {"kind": "gaussian", "n_classes": 3, "dim": 2, "n_per_class": 40, "spread": 0.4,
                 "fractions": [0.6, 0.2, 0.2]},
        "out_dir": str(tmp_path / "out"),
        "seeds": [0, 1],
    }
    for k, v in overrides.items():
        if isinstance(v, dict) and k in cfg:
            cfg[k] = {**cfg[k], **v}
        else:
            cfg[k] = v
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path, cfg


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_train_writes_artifacts(tmp_path):
    path, _ = tiny_config(tmp_path)
    assert main(["train", str(path)]) == 0
    out = tmp_path / "out"
    assert sorted(p.name for p in out.iterdir()) == [
        "checkpoint_best.json", "checkpoint_final.json", "metrics.csv", "summary.json"]
    rows = read_csv(out / "metrics.csv")
    assert len(rows) == 3
    assert list(rows[0])[:13] == ["epoch", "lambda", "lr", "l_sup", "l_cons", "l_total", "ce_net0",
                                  "ce_net1", "val_acc", "val_f1", "val_overall", "mem_rate", "val_acc_net0"]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["overall"] == 0.67 * summary["f1_macro"] + 0.33 * summary["accuracy"]
    assert summary["config"]["train"]["lambda_max"] == 0.9


def test_out_and_seed_overrides(tmp_path):
    path, _ = tiny_config(tmp_path)
    assert main(["--out", str(tmp_path / "a"), "train", str(path), "--seed", "7"]) == 0
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["config"]["train"]["seed"] == 7


def test_invalid_lambda_max(tmp_path, capsys):
    path, _ = tiny_config(tmp_path, train={"lambda_max": 1.5})
    assert main(["train", str(path)]) == 2
    assert "lambda_max" in capsys.readouterr().err


def test_unknown_field(tmp_path, capsys):
    path, _ = tiny_config(tmp_path, train={"lamda_max": 0.5})
    assert main(["train", str(path)]) == 2
    assert "lamda_max" in capsys.readouterr().err


def test_rerun_is_byte_identical(tmp_path):
    path, _ = tiny_config(tmp_path)
    main(["train", str(path), "--out", str(tmp_path / "r1")])
    main(["train", str(path), "--out", str(tmp_path / "r2")])
    for name in ("metrics.csv", "checkpoint_final.json", "summary.json"):
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()


def test_numeric_failure_keeps_partial_csv(tmp_path, monkeypatch):
    path, _ = tiny_config(tmp_path)
    real = cct.trainer.combined_loss
    calls = {"n": 0}

    def flaky(preds, y, lam):
        calls["n"] += 1
        br = real(preds, y, lam)
        if calls["n"] > 5:  # 3 batches per epoch: fails during epoch 1
            br.l_total = float("nan")
        return br

    monkeypatch.setattr(cct.trainer, "combined_loss", flaky)
    assert main(["train", str(path)]) == 3
    rows = read_csv(tmp_path / "out" / "metrics.csv")
    assert len(rows) == 1


def test_sweep_beta_axis(tmp_path):
    betas = [0.1, 0.65, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0]
    path, _ = tiny_config(tmp_path, axes=[["beta", betas]], seeds=[0])
    assert main(["sweep", str(path)]) == 0
    rows = read_csv(tmp_path / "out" / "sweep.csv")
    assert [float(r["beta"]) for r in rows] == betas
    assert all(r["status"] == "ok" for r in rows)


def test_sweep_networks_axis_parallel(tmp_path):
    path, _ = tiny_config(tmp_path, axes={"n_networks": [1, 2, 3, 4]})
    assert main(["sweep", str(path), "--workers", "2"]) == 0
    rows = read_csv(tmp_path / "out" / "sweep.csv")
    assert [int(r["n_networks"]) for r in rows] == [1, 2, 3, 4]
    runs = read_csv(tmp_path / "out" / "sweep_runs.csv")
    assert len(runs) == 4 * 2


def test_sweep_parallel_matches_serial(tmp_path):
    path, _ = tiny_config(tmp_path, axes={"consistency": [False, True]})
    main(["sweep", str(path), "--out", str(tmp_path / "s1")])
    main(["sweep", str(path), "--out", str(tmp_path / "s2"), "--workers", "2"])
    assert (tmp_path / "s1" / "sweep.csv").read_bytes() == (tmp_path / "s2" / "sweep.csv").read_bytes()


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_sweep_failed_cell_is_marked(tmp_path):
    # an absurd learning rate overflows the weights in that cell only
    path, _ = tiny_config(tmp_path, axes={"lr": [1e300, 0.001]}, seeds=[0])
    assert main(["sweep", str(path)]) == 3
    rows = read_csv(tmp_path / "out" / "sweep.csv")
    assert len(rows) == 2
    assert rows[0]["status"].startswith("failed: NumericError") and rows[1]["status"] == "ok"


def test_sweep_invalid_cell_is_config_error(tmp_path):
    # ramp_epochs 2 > epochs 1 makes one cell invalid before anything runs
    path, _ = tiny_config(tmp_path, axes={"epochs": [1, 3]}, seeds=[0])
    assert main(["sweep", str(path)]) == 2


@pytest.mark.parametrize("axes", [None, []])
def test_sweep_without_axes(tmp_path, axes):
    path, _ = tiny_config(tmp_path, axes=axes)
    assert main(["sweep", str(path)]) == 2


def test_sweep_bad_axis_name(tmp_path):
    path, _ = tiny_config(tmp_path, axes={"gamma": [1, 2]})
    assert main(["sweep", str(path)]) == 2


def test_eval_matches_final_validation(tmp_path, capsys):
    path, cfg = tiny_config(tmp_path)
    main(["train", str(path)])
    exp = experiment_from_dict(cfg)
    val = prepare_data(exp, exp.train).val
    write_csv(val, tmp_path / "val.csv")
    capsys.readouterr()
    assert main(["eval", str(tmp_path / "out" / "checkpoint_final.json"), str(tmp_path / "val.csv")]) == 0
    report = json.loads(capsys.readouterr().out)
    last = read_csv(tmp_path / "out" / "metrics.csv")[-1]
    assert report["accuracy"] == float(last["val_acc"])
    assert report["f1_macro"] == float(last["val_f1"])
    assert report["overall"] == float(last["val_overall"])


def test_eval_single_network(tmp_path, capsys):
    path, cfg = tiny_config(tmp_path)
    main(["train", str(path)])
    exp = experiment_from_dict(cfg)
    val = prepare_data(exp, exp.train).val
    write_csv(val, tmp_path / "val.csv")
    capsys.readouterr()
    assert main(["eval", str(tmp_path / "out" / "checkpoint_final.json"), str(tmp_path / "val.csv"),
                 "--net", "1"]) == 0
    report = json.loads(capsys.readouterr().out)
    last = read_csv(tmp_path / "out" / "metrics.csv")[-1]
    assert report["accuracy"] == float(last["val_acc_net1"])


def test_eval_dimension_mismatch(tmp_path, capsys):
    path, _ = tiny_config(tmp_path)
    main(["train", str(path)])
    data = tmp_path / "d.csv"
    data.write_text("f0,f1,f2,label\n0,0,0,1\n")
    assert main(["eval", str(tmp_path / "out" / "checkpoint_final.json"), str(data)]) == 4
    assert "features" in capsys.readouterr().err


def test_eval_corrupt_checkpoint(tmp_path):
    ck = tmp_path / "ck.json"
    ck.write_text("{broken")
    data = tmp_path / "d.csv"
    data.write_text("f0,f1,label\n0,0,1\n")
    assert main(["eval", str(ck), str(data)]) == 4


def test_csv_data_source(tmp_path):
    path, cfg = tiny_config(tmp_path)
    clean_exp = experiment_from_dict({**cfg, "train": {**cfg["train"], "noise": {}}})
    splits = prepare_data(clean_exp, clean_exp.train)
    write_csv(splits.train, tmp_path / "train.csv")
    write_csv(splits.val, tmp_path / "val.csv")
    path, _ = tiny_config(tmp_path, data={"kind": "csv", "train_path": str(tmp_path / "train.csv"),
                                          "val_path": str(tmp_path / "val.csv")})
    assert main(["train", str(path)]) == 0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["eval_split"] == "val"
    assert 0.2 < summary["noise_rate_actual"] < 0.4
