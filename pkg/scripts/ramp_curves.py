"""Print (and optionally plot) the consistency-weight ramp for a family of beta values."""
import argparse

from cct.losses import BalanceSchedule, ramp_lambda

BETAS = [0.1, 0.65, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lambda-max", type=float, default=0.9)
    ap.add_argument("--ramp-epochs", type=int, default=30)
    ap.add_argument("--epochs", type=int, default=60)
    ap.add_argument("--step", type=int, default=5)
    ap.add_argument("--plot", metavar="PNG", help="save a figure (needs matplotlib)")
    args = ap.parse_args()

    scheds = {b: BalanceSchedule(args.lambda_max, b, args.ramp_epochs) for b in BETAS}
    print("epoch " + " ".join(f"b={b:<5}" for b in BETAS))
    for e in range(0, args.epochs + 1, args.step):
        print(f"{e:5d} " + " ".join(f"{ramp_lambda(e, s):7.4f}" for s in scheds.values()))

    if args.plot:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        es = [e / 4 for e in range(4 * args.epochs + 1)]
        fig, ax = plt.subplots(figsize=(6, 4))
        for b, s in scheds.items():
            ax.plot(es, [ramp_lambda(e, s) for e in es], label=f"beta={b}")
        ax.set_xlabel("epoch")
        ax.set_ylabel("lambda")
        ax.legend()
        fig.tight_layout()
        fig.savefig(args.plot, dpi=120)
        print(f"saved {args.plot}")


if __name__ == "__main__":
    main()
