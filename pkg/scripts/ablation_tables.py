"""Run the four ablation sweeps (networks, consistency, beta, oversampling) and print each table."""
import argparse
import dataclasses
from pathlib import Path

from cct.config import load_experiment
from cct.harness import format_table, run_sweep

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
TABLES = {
    "networks": "number of co-trained networks",
    "consistency": "supervision only vs. supervision + consistency",
    "beta": "ramp shape beta",
    "oversampling": "class-balancing oversampling",
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/ablations")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--only", choices=sorted(TABLES), nargs="+")
    args = ap.parse_args()

    for name in args.only or TABLES:
        exp = dataclasses.replace(load_experiment(CONFIGS / f"{name}.json"), workers=args.workers)
        rows = run_sweep(exp, Path(args.out) / name)
        print(f"\n## {TABLES[name]}  ({len(exp.seeds)} seeds)")
        print(format_table(rows))


if __name__ == "__main__":
    main()
