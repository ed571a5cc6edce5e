#!/usr/bin/env python3
"""Black-box baselines on raw pixels: a plain deep MLP and k-nearest
neighbors under Hamming distance.  Both hover near chance on the
same/different task, which is the point of comparison for the
structured models.

Example:
    python3 scripts/blackbox_baselines.py --train-size 40000 --out runs/blackbox
"""

import argparse
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from pentolab import datagen
from pentolab.baselines import (MLPConfig, flatten_images, knn_error,
                                mlp_train)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--train-size", type=int, default=40000)
    ap.add_argument("--test-size", type=int, default=8000)
    ap.add_argument("--skip-mlp", action="store_true")
    ap.add_argument("--skip-knn", action="store_true")
    ap.add_argument("--epochs", type=int, default=8)
    ap.add_argument("--lr", type=float, default=0.05)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--seed", type=int, default=1234)
    ap.add_argument("--data-seed", type=int, default=11)
    ap.add_argument("--out", default="runs/blackbox")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    t0 = time.time()
    train = datagen.generate_dataset(args.train_size, args.data_seed)
    test = datagen.generate_dataset(args.test_size, args.data_seed + 1)
    print("data generated in %.1fs" % (time.time() - t0), flush=True)
    x_tr, x_te = flatten_images(train), flatten_images(test)

    if not args.skip_knn:
        t1 = time.time()
        err = knn_error(x_tr, train.targets, x_te, test.targets, args.k)
        print("knn k=%d test error %.3f%% [%.1fs]"
              % (args.k, err, time.time() - t1), flush=True)
        with open(os.path.join(args.out, "knn.txt"), "w") as f:
            f.write("error_pct = %r\n" % err)

    if not args.skip_mlp:
        cfg = MLPConfig(hidden=(2048, 2048, 2048), activation="tanh",
                        lr=args.lr, epochs=args.epochs, seed=args.seed)
        _, metrics = mlp_train(x_tr, train.targets, x_te, test.targets, cfg)
        metrics.write_csv(os.path.join(args.out, "metrics_mlp.csv"))
        for r in metrics.rows:
            print("epoch %3d %-5s err=%7.3f%% loss=%.5f [%.1fs]"
                  % (r.epoch, r.split, r.error_pct, r.mean_loss, r.wallclock_s),
                  flush=True)
        print("mlp final test error %.3f%% [%.1fs total]"
              % (metrics.last("test").error_pct, time.time() - t0), flush=True)


if __name__ == "__main__":
    main()
