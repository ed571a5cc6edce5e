#!/usr/bin/env python3
"""Compare end-to-end training with and without the standardization
layer between the two sub-networks (SGD; intermediate activation
selectable, softmax by default).

The standardized run should steadily reduce test error; the
unstandardized twin stalls near chance.  With --intermediate linear
the unstandardized run is the one configuration that still makes
partial progress.

Example:
    python3 scripts/standardization_ablation.py --train-size 80000 \
        --epochs 12 --out runs/std_ablation
"""

import argparse
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from pentolab import datagen
from pentolab.metrics import RunMetrics
from pentolab.smlp import SMLPConfig, train_nohints


class EchoMetrics(RunMetrics):
    def append(self, epoch, split, error_pct, mean_loss,
               patch_acc_pct=None, wallclock_s=0.0):
        print("epoch %3d %-5s err=%7.3f%% loss=%.5f [%.1fs]"
              % (epoch, split, error_pct, mean_loss, wallclock_s), flush=True)
        super().append(epoch, split, error_pct, mean_loss, patch_acc_pct,
                       wallclock_s)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--train-size", type=int, default=80000)
    ap.add_argument("--test-size", type=int, default=8000)
    ap.add_argument("--d-h", type=int, default=2050)
    ap.add_argument("--p2-hidden", type=int, default=1024)
    ap.add_argument("--intermediate", default="softmax",
                    choices=("softmax", "sigmoid", "tanh", "relu", "linear"))
    ap.add_argument("--lr", type=float, default=0.1)
    ap.add_argument("--epochs", type=int, default=12)
    ap.add_argument("--seed", type=int, default=1234)
    ap.add_argument("--data-seed", type=int, default=11)
    ap.add_argument("--test-seed", type=int, default=None,
                    help="test set seed (default: data-seed + 1)")
    ap.add_argument("--arms", default="std,nostd",
                    help="comma-separated subset of std,nostd")
    ap.add_argument("--out", default="runs/std_ablation")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    t0 = time.time()
    test_seed = args.data_seed + 1 if args.test_seed is None else args.test_seed
    train = datagen.generate_dataset(args.train_size, args.data_seed)
    test = datagen.generate_dataset(args.test_size, test_seed)
    print("data generated in %.1fs" % (time.time() - t0), flush=True)

    base = SMLPConfig(d_h=args.d_h, p2nn_hidden=args.p2_hidden,
                      intermediate_activation=args.intermediate,
                      optimizer="sgd", lr=args.lr, epochs=args.epochs,
                      batch_size=100, seed=args.seed)
    arms = [a.strip() for a in args.arms.split(",") if a.strip()]
    for tag, standardize in (("std", True), ("nostd", False)):
        if tag not in arms:
            continue
        from dataclasses import replace
        cfg = replace(base, standardize=standardize)
        print("--- %s ---" % tag, flush=True)
        _, metrics = train_nohints(train, test, cfg, metrics=EchoMetrics())
        metrics.write_csv(os.path.join(args.out, "metrics_%s.csv" % tag))
        last = metrics.last("test")
        print("%s final test error %.3f%% after %d epochs [%.1fs total]"
              % (tag, last.error_pct, last.epoch, time.time() - t0), flush=True)


if __name__ == "__main__":
    main()
