#!/usr/bin/env python3
"""Train the structured MLP with intermediate-concept hints and report
per-epoch patch accuracy and task error.

Example:
    python3 scripts/hints_experiment.py --train-size 40000 --p2-epochs 25 \
        --out runs/hints40k
"""

import argparse
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from pentolab import datagen
from pentolab.checkpoint import save_checkpoint
from pentolab.smlp import SMLPConfig, evaluate, hints_eval_config, train_hints


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--train-size", type=int, default=40000)
    ap.add_argument("--test-size", type=int, default=8000)
    ap.add_argument("--d-h", type=int, default=1024)
    ap.add_argument("--p2-hidden", type=int, default=2048)
    ap.add_argument("--p1-epochs", type=int, default=1)
    ap.add_argument("--p2-epochs", type=int, default=25)
    ap.add_argument("--seed", type=int, default=1234)
    ap.add_argument("--data-seed", type=int, default=11)
    ap.add_argument("--out", default="runs/hints")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    t0 = time.time()
    train = datagen.generate_dataset(args.train_size, args.data_seed)
    test = datagen.generate_dataset(args.test_size, args.data_seed + 1)
    print("data generated in %.1fs" % (time.time() - t0), flush=True)

    cfg = SMLPConfig(d_h=args.d_h, d_o=11, p2nn_hidden=args.p2_hidden,
                     p1_epochs=args.p1_epochs, p2_epochs=args.p2_epochs,
                     batch_size=100, seed=args.seed)
    params, metrics = train_hints(train, test, cfg)
    metrics.write_csv(os.path.join(args.out, "metrics.csv"))
    save_checkpoint(os.path.join(args.out, "model.pnnw"), params.layers())

    for r in metrics.rows:
        pa = "" if r.patch_acc_pct is None else " patch_acc=%.3f" % r.patch_acc_pct
        print("epoch %3d %-5s err=%7.3f%% loss=%.5f%s [%.1fs]"
              % (r.epoch, r.split, r.error_pct, r.mean_loss, pa, r.wallclock_s),
              flush=True)
    err, loss = evaluate(params, test.images, test.targets, hints_eval_config(cfg))
    print("final test error %.3f%% (loss %.5f), total %.1fs"
          % (err, loss, time.time() - t0), flush=True)


if __name__ == "__main__":
    main()
