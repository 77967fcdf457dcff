#!/usr/bin/env python3
"""Random hyper-parameter search over `bigg train`.

Each trial samples a configuration, trains into its own run directory and
reads the best validation loss from curve.csv. Results go to trials.csv.
"""
import argparse
import csv
import random
import subprocess
import sys
from pathlib import Path

SPACE = {
    "lr": [3e-4, 1e-3, 3e-3],
    "hidden": [32, 64, 128],
    "layers": [1, 2, 3],
    "dropout": [0.0, 0.1, 0.2],
    "batch": [16, 32, 64],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bigg", default="build/tools/bigg")
    ap.add_argument("--data", required=True)
    ap.add_argument("--model", default="bigg")
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--epochs", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for t in range(args.trials):
        trial = {k: rng.choice(v) for k, v in SPACE.items()}
        run = out / f"trial{t}"
        cmd = [args.bigg, "--seed", str(args.seed), "--out", str(run), "--force", "train",
               "--data", args.data, "--model", args.model, "--epochs", str(args.epochs)]
        for k, v in trial.items():
            cmd += [f"--{k}", str(v)]
        subprocess.run(cmd, check=True, stdout=subprocess.DEVNULL)
        with open(run / "curve.csv") as f:
            best = min(float(r["val_loss"]) for r in csv.DictReader(f))
        rows.append({"trial": t, **trial, "best_val_loss": best})
        print(f"trial {t}: {trial} -> {best:.6g}", file=sys.stderr)

    with open(out / "trials.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
        w.writeheader()
        w.writerows(rows)
    top = min(rows, key=lambda r: r["best_val_loss"])
    print(f"best trial {top['trial']}: val loss {top['best_val_loss']:.6g}")


if __name__ == "__main__":
    main()
