#!/usr/bin/env python3
"""End-to-end training started from a hinted initialization versus the
same configuration started from random weights.

One epoch of patch-level pretraining (plus one epoch of head fitting)
gives joint SGD a starting point it can improve on; from random weights
the identical run stays near chance.

Example:
    python3 scripts/hint_init_comparison.py --joint-epochs 20 \
        --out runs/hint_init
"""

import argparse
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from pentolab import datagen
from pentolab.metrics import RunMetrics
from pentolab.smlp import SMLPConfig, train_hint_init, train_nohints


class EchoMetrics(RunMetrics):
    def append(self, epoch, split, error_pct, mean_loss,
               patch_acc_pct=None, wallclock_s=0.0):
        print("epoch %3d %-5s err=%7.3f%% loss=%.5f [%.1fs]"
              % (epoch, split, error_pct, mean_loss, wallclock_s), flush=True)
        super().append(epoch, split, error_pct, mean_loss, patch_acc_pct,
                       wallclock_s)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--train-size", type=int, default=40000)
    ap.add_argument("--test-size", type=int, default=8000)
    ap.add_argument("--d-h", type=int, default=1024)
    ap.add_argument("--p2-hidden", type=int, default=2048)
    ap.add_argument("--lr", type=float, default=0.1)
    ap.add_argument("--joint-epochs", type=int, default=20)
    ap.add_argument("--hint-epochs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=1234)
    ap.add_argument("--data-seed", type=int, default=11)
    ap.add_argument("--out", default="runs/hint_init")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    t0 = time.time()
    train = datagen.generate_dataset(args.train_size, args.data_seed)
    test = datagen.generate_dataset(args.test_size, args.data_seed + 1)
    print("data generated in %.1fs" % (time.time() - t0), flush=True)

    cfg = SMLPConfig(d_h=args.d_h, p2nn_hidden=args.p2_hidden,
                     intermediate_activation="softmax", optimizer="sgd",
                     lr=args.lr, epochs=args.joint_epochs,
                     hint_epochs=args.hint_epochs, batch_size=100,
                     seed=args.seed)

    print("--- hint-initialized ---", flush=True)
    _, hinted = train_hint_init(train, test, cfg, metrics=EchoMetrics())
    hinted.write_csv(os.path.join(args.out, "metrics_hintinit.csv"))

    print("--- random-initialized ---", flush=True)
    _, random_run = train_nohints(train, test, cfg, metrics=EchoMetrics())
    random_run.write_csv(os.path.join(args.out, "metrics_random.csv"))

    h, r = hinted.last("test"), random_run.last("test")
    print("hint-init final test %.3f%%; random-init final test %.3f%% [%.1fs]"
          % (h.error_pct, r.error_pct, time.time() - t0), flush=True)


if __name__ == "__main__":
    main()
