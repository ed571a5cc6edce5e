"""Command line front end.

Subcommands: gen, train, eval, sweep-size, random-search,
dump-activations, plot, validate.  Shared flags: --config FILE (key =
value lines), --set key=value overrides, --seed, --out, --threads.

Every command writes the fully resolved configuration next to its
outputs.  With --threads 1 the wallclock column of metrics CSVs is
pinned to 0.0 so a rerun reproduces output files byte for byte.

Only the standard library is imported at module load: --threads must be
able to cap the BLAS thread pool through environment variables before
numpy first loads.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import os
import sys

MODELS = ("smlp-hints", "smlp-nohints", "smlp-hintinit", "mlp", "knn")
GEN_KINDS = ("image", "exp1", "exp2", "exp3", "exp4")


def _apply_thread_flag(argv):
    threads = None
    for i, a in enumerate(argv):
        if a == "--threads" and i + 1 < len(argv):
            threads = argv[i + 1]
        elif a.startswith("--threads="):
            threads = a.split("=", 1)[1]
    if threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(threads)
    return threads


def _add_common(p, out_required=True):
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable)")
    p.add_argument("--seed", type=int, help="override the run seed")
    p.add_argument("--out", required=out_required, help="output path")
    p.add_argument("--threads", type=int, default=None,
                   help="BLAS/OpenMP thread cap; 1 also zeroes wallclock columns")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="pentolab",
        description="Pentomino same/different task laboratory")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a dataset file")
    p.add_argument("--kind", choices=GEN_KINDS, default="image")
    p.add_argument("--n", type=int, required=True, help="number of examples")
    p.add_argument("--csv", help="also export z + patch labels as CSV (image kind)")
    _add_common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--model", choices=MODELS, required=True)
    p.add_argument("--train", required=True, help="training dataset file")
    p.add_argument("--test", required=True, help="held-out dataset file")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--model", choices=MODELS, required=True)
    p.add_argument("--checkpoint", help="model checkpoint (not used by knn)")
    p.add_argument("--train", help="training dataset file (knn only)")
    p.add_argument("--data", required=True, help="dataset file to score")
    _add_common(p, out_required=False)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep-size", help="train at several training set sizes")
    p.add_argument("--model", choices=MODELS, required=True)
    p.add_argument("--sizes", required=True,
                   help="comma-separated training set sizes")
    p.add_argument("--test-size", type=int, default=8000)
    _add_common(p)
    p.set_defaults(func=cmd_sweep_size)

    p = sub.add_parser("random-search", help="random hyperparameter search")
    p.add_argument("--model", choices=("smlp-nohints", "mlp"), required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--train", required=True, help="dataset file; split 80/20")
    p.add_argument("--folds", type=int, default=1,
                   help="1 = single 80/20 split; K>=2 = K-fold cross-validation")
    _add_common(p)
    p.set_defaults(func=cmd_random_search)

    p = sub.add_parser("dump-activations",
                       help="write raw and standardized patch features")
    p.add_argument("--model", default="smlp-hints",
                   choices=("smlp-hints", "smlp-nohints", "smlp-hintinit"))
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--n", type=int, default=100, help="examples to dump")
    _add_common(p)
    p.set_defaults(func=cmd_dump_activations)

    p = sub.add_parser("plot", help="plot metrics CSVs as an SVG")
    p.add_argument("csvs", nargs="+", help="metrics CSV files")
    p.add_argument("--title", default="error vs epoch")
    _add_common(p)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("validate", help="check dataset file integrity")
    p.add_argument("paths", nargs="+", help="dataset files")
    p.set_defaults(func=cmd_validate)
    return ap


# ---------------------------------------------------------------------------


def _model_config_cls(model):
    from .baselines import KNNConfig, MLPConfig
    from .smlp import SMLPConfig
    if model in ("smlp-hints", "smlp-nohints", "smlp-hintinit"):
        return SMLPConfig
    return MLPConfig if model == "mlp" else KNNConfig


def _model_defaults(model) -> dict:
    """Per-model default overrides on top of the dataclass defaults."""
    if model == "smlp-hints":
        # hinted pipeline: softmax intermediate, whole-set eps=0
        # standardization, wide head
        return dict(d_h=1024, p2nn_hidden=2048, intermediate_activation="softmax",
                    eps_std=0.0, std_scope="dataset", p2_epochs=25)
    if model == "smlp-hintinit":
        return dict(d_h=1024, p2nn_hidden=2048, intermediate_activation="softmax",
                    optimizer="sgd", lr=0.1, epochs=40, hint_epochs=1)
    return {}


def _resolve_config(args, model=None):
    from . import config as cfgmod
    cls = _model_config_cls(model)
    mapping = dict(_model_defaults(model))
    mapping = {k: cfgmod._format_value(v) for k, v in mapping.items()}
    if args.config:
        mapping.update(cfgmod.parse_config_file(args.config))
    mapping.update(cfgmod.parse_overrides(args.set))
    if args.seed is not None:
        mapping["seed"] = str(args.seed)
    return cfgmod.bind(cls, mapping)


def _write_snapshot(out_dir_or_file, cfg, extra, next_to_file=False):
    from . import config as cfgmod
    if next_to_file:
        path = str(out_dir_or_file) + ".config"
    else:
        path = os.path.join(out_dir_or_file, "resolved.config")
    cfgmod.write_resolved(path, cfg, extra)
    return path


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _load_dataset(path):
    from .dataio import read_dataset
    return read_dataset(path)


def _flat_features(ds):
    from . import baselines
    from .datagen import ImageDataset
    if isinstance(ds, ImageDataset):
        return baselines.flatten_images(ds)
    return baselines.flatten_symbolic(ds)


# ---------------------------------------------------------------------------


def cmd_gen(args):
    from dataclasses import dataclass

    from . import config as cfgmod
    from . import datagen
    from .dataio import export_labels_csv, write_dataset

    @dataclass
    class GenConfig:
        kind: str = "image"
        n: int = 0
        seed: int = 1234

    if args.n < 1:
        print("error: --n must be >= 1", file=sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else 1234
    cfg = GenConfig(kind=args.kind, n=args.n, seed=seed)

    if args.kind == "image":
        ds = datagen.generate_dataset(args.n, seed)
    elif args.kind == "exp4":
        ds = datagen.generate_exp4_dataset(args.n, seed)
    else:
        ds = datagen.encode_dataset(datagen.generate_dataset(args.n, seed),
                                    args.kind)
    write_dataset(args.out, ds)
    if args.csv:
        if args.kind != "image":
            print("error: --csv applies to image datasets only", file=sys.stderr)
            return 2
        export_labels_csv(ds, args.csv)
    cfgmod.write_resolved(str(args.out) + ".config", cfg, {"command": "gen"})
    pos = float(ds.targets.mean())
    print("wrote %s: %d %s examples, positives %.4f, sha256 %s"
          % (args.out, args.n, args.kind, pos, _sha256(args.out)))
    return 0


def _train_model(model, cfg, train_ds, test_ds):
    """Dispatch; returns (layers_for_checkpoint or None, metrics)."""
    from . import baselines, smlp
    from .datagen import ImageDataset

    if model in ("smlp-hints", "smlp-nohints", "smlp-hintinit"):
        if not isinstance(train_ds, ImageDataset):
            raise ValueError("%s trains on image datasets" % model)
        trainer = {"smlp-hints": smlp.train_hints,
                   "smlp-nohints": smlp.train_nohints,
                   "smlp-hintinit": smlp.train_hint_init}[model]
        params, metrics = trainer(train_ds, test_ds, cfg)
        return params.layers(), metrics
    if model == "mlp":
        x_tr = _flat_features(train_ds)
        x_te = _flat_features(test_ds)
        layers, metrics = baselines.mlp_train(x_tr, train_ds.targets,
                                              x_te, test_ds.targets, cfg)
        return layers, metrics
    # knn: no parameters; single evaluation row
    from .metrics import RunMetrics
    import time
    t0 = time.perf_counter()
    err = baselines.knn_error(_flat_features(train_ds), train_ds.targets,
                              _flat_features(test_ds), test_ds.targets,
                              cfg.k, cfg.weighting)
    metrics = RunMetrics()
    metrics.append(0, "test", err, 0.0, wallclock_s=time.perf_counter() - t0)
    return None, metrics


def cmd_train(args):
    from .checkpoint import save_checkpoint

    cfg = _resolve_config(args, args.model)
    os.makedirs(args.out, exist_ok=True)
    train_ds = _load_dataset(args.train)
    test_ds = _load_dataset(args.test)
    layers, metrics = _train_model(args.model, cfg, train_ds, test_ds)
    metrics.write_csv(os.path.join(args.out, "metrics.csv"),
                      zero_wallclock=(args.threads == 1))
    if layers is not None:
        save_checkpoint(os.path.join(args.out, "model.pnnw"), layers)
    _write_snapshot(args.out, cfg, {"command": "train", "model": args.model,
                                    "train_data": args.train,
                                    "test_data": args.test})
    last = metrics.last("test")
    print("%s: final test error %.3f%% (epoch %d); outputs in %s"
          % (args.model, last.error_pct, last.epoch, args.out))
    return 0


def _smlp_params_from_layers(layers):
    from .smlp import SMLPParams
    if len(layers) != 4:
        raise ValueError("expected a 4-layer checkpoint for a structured MLP")
    return SMLPParams(*layers)


def cmd_eval(args):
    from . import baselines, smlp
    from .checkpoint import load_checkpoint

    cfg = _resolve_config(args, args.model)
    ds = _load_dataset(args.data)
    if args.model == "knn":
        if not args.train:
            print("error: knn evaluation needs --train", file=sys.stderr)
            return 2
        train_ds = _load_dataset(args.train)
        err = baselines.knn_error(_flat_features(train_ds), train_ds.targets,
                                  _flat_features(ds), ds.targets,
                                  cfg.k, cfg.weighting)
        loss = float("nan")
    else:
        if not args.checkpoint:
            print("error: --checkpoint is required for %s" % args.model,
                  file=sys.stderr)
            return 2
        layers, _ = load_checkpoint(args.checkpoint)
        if args.model == "mlp":
            import scipy.sparse as sp
            x = sp.csr_matrix(_flat_features(ds), dtype=float)
            err, loss = baselines._mlp_eval(layers, cfg.activation, x,
                                            ds.targets.astype(float),
                                            cfg.eval_batch)
        else:
            params = _smlp_params_from_layers(layers)
            err, loss = smlp.evaluate(params, ds.images, ds.targets, cfg)
    print("error_pct = %s" % repr(float(err)))
    print("mean_loss = %s" % repr(float(loss)))
    if args.out:
        with open(args.out, "w") as f:
            f.write("error_pct = %s\nmean_loss = %s\n"
                    % (repr(float(err)), repr(float(loss))))
        _write_snapshot(args.out, cfg, {"command": "eval", "model": args.model,
                                        "data": args.data}, next_to_file=True)
    return 0


def cmd_sweep_size(args):
    from . import datagen
    from .rng import derive_seed

    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        print("error: --sizes must be comma-separated integers", file=sys.stderr)
        return 2
    if len(sizes) < 2:
        print("error: --sizes needs at least two sizes", file=sys.stderr)
        return 2
    if any(s < 1 for s in sizes):
        print("error: sizes must be positive", file=sys.stderr)
        return 2
    cfg = _resolve_config(args, args.model)
    seed = cfg.seed
    os.makedirs(args.out, exist_ok=True)
    test_ds = datagen.generate_dataset(args.test_size, derive_seed(seed, 1_000_000))
    lines = ["size,split,error_pct,mean_loss"]
    for i, size in enumerate(sizes):
        train_ds = datagen.generate_dataset(size, derive_seed(seed, 1_000_001 + i))
        sub = os.path.join(args.out, "size_%d" % size)
        os.makedirs(sub, exist_ok=True)
        _, metrics = _train_model(args.model, cfg, train_ds, test_ds)
        metrics.write_csv(os.path.join(sub, "metrics.csv"),
                          zero_wallclock=(args.threads == 1))
        for split in ("train", "test"):
            try:
                row = metrics.last(split)
            except KeyError:
                continue
            lines.append("%d,%s,%s,%s" % (size, split, repr(row.error_pct),
                                          repr(row.mean_loss)))
        print("size %d done: test error %.3f%%"
              % (size, metrics.last("test").error_pct), flush=True)
    sweep_csv = os.path.join(args.out, "sweep.csv")
    with open(sweep_csv, "w") as f:
        f.write("\n".join(lines) + "\n")
    _write_snapshot(args.out, cfg, {"command": "sweep-size", "model": args.model,
                                    "sizes": args.sizes,
                                    "test_size": args.test_size})
    print("wrote %s" % sweep_csv)
    return 0


_SEARCH_WIDTHS = (64, 128, 256, 512, 1024, 1200, 2048)


def cmd_random_search(args):
    from dataclasses import replace

    from .rng import SplitMix64, derive_seed

    if args.trials < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return 2
    if args.folds < 1:
        print("error: --folds must be >= 1", file=sys.stderr)
        return 2
    cfg = _resolve_config(args, args.model)
    os.makedirs(args.out, exist_ok=True)
    full = _load_dataset(args.train)
    n = len(full)
    if n < max(10, 2 * args.folds):
        print("error: dataset too small to split", file=sys.stderr)
        return 2
    split_rng = SplitMix64(derive_seed(cfg.seed, 31))
    perm = split_rng.permutation(n)
    if args.folds == 1:
        n_val = max(1, n // 5)
        splits = [(perm[n_val:], perm[:n_val])]
    else:
        import numpy as np
        parts = np.array_split(perm, args.folds)
        splits = [(np.concatenate(parts[:f] + parts[f + 1:]), parts[f])
                  for f in range(args.folds)]

    draw = SplitMix64(derive_seed(cfg.seed, 32))
    rows = []
    for trial in range(args.trials):
        lr = math.exp(math.log(0.008)
                      + draw.random() * (math.log(0.8) - math.log(0.008)))
        width = _SEARCH_WIDTHS[draw.randrange(len(_SEARCH_WIDTHS))]
        if args.model == "smlp-nohints":
            head = _SEARCH_WIDTHS[draw.randrange(len(_SEARCH_WIDTHS))]
            trial_cfg = replace(cfg, lr=lr, d_h=width, p2nn_hidden=head,
                                seed=derive_seed(cfg.seed, 100 + trial))
            desc = "lr=%s,d_h=%d,p2nn_hidden=%d" % (repr(lr), width, head)
        else:
            trial_cfg = replace(cfg, lr=lr, hidden=(width,) * len(cfg.hidden),
                                seed=derive_seed(cfg.seed, 100 + trial))
            desc = "lr=%s,width=%d" % (repr(lr), width)
        try:
            fold_errs = []
            for tr_idx, val_idx in splits:
                _, metrics = _train_model(args.model, trial_cfg,
                                          _subset(full, tr_idx),
                                          _subset(full, val_idx))
                fold_errs.append(metrics.last("test").error_pct)
            err = sum(fold_errs) / len(fold_errs)
        except (FloatingPointError, RuntimeError) as e:
            err = float("nan")
            print("trial %d diverged: %s" % (trial, e), flush=True)
        rows.append((trial, desc, err))
        print("trial %d: %s -> val error %s" % (trial, desc, repr(err)), flush=True)

    rows.sort(key=lambda r: (math.isnan(r[2]), r[2]))
    path = os.path.join(args.out, "leaderboard.csv")
    with open(path, "w") as f:
        f.write("rank,trial,settings,val_error_pct\n")
        for rank, (trial, desc, err) in enumerate(rows):
            f.write("%d,%d,\"%s\",%s\n" % (rank, trial, desc, repr(err)))
    _write_snapshot(args.out, cfg, {"command": "random-search",
                                    "model": args.model, "trials": args.trials,
                                    "train_data": args.train})
    print("wrote %s" % path)
    return 0


def _subset(ds, idx):
    from dataclasses import replace as dc_replace

    from .datagen import ImageDataset
    if isinstance(ds, ImageDataset):
        return ImageDataset(ds.images[idx], ds.patch_labels[idx],
                            ds.targets[idx], ds.sprites[idx], ds.global_seed)
    return dc_replace(ds, codes=ds.codes[idx], targets=ds.targets[idx])


def cmd_dump_activations(args):
    from . import smlp
    from .checkpoint import load_checkpoint
    from .datagen import ImageDataset

    cfg = _resolve_config(args, args.model)
    ds = _load_dataset(args.data)
    if not isinstance(ds, ImageDataset):
        print("error: activation dumps need an image dataset", file=sys.stderr)
        return 2
    if args.n < 1 or args.n > len(ds):
        print("error: --n must be in 1..%d" % len(ds), file=sys.stderr)
        return 2
    layers, _ = load_checkpoint(args.checkpoint)
    params = _smlp_params_from_layers(layers)
    raw, std = smlp.dump_intermediate(params, ds.images[:args.n], cfg)
    width = raw.shape[1]
    with open(args.out, "w") as f:
        f.write(",".join(["raw_%d" % i for i in range(width)]
                         + ["std_%d" % i for i in range(width)]) + "\n")
        for i in range(raw.shape[0]):
            f.write(",".join(repr(float(v)) for v in raw[i]) + ","
                    + ",".join(repr(float(v)) for v in std[i]) + "\n")
    _write_snapshot(args.out, cfg, {"command": "dump-activations",
                                    "data": args.data, "n": args.n},
                    next_to_file=True)
    print("wrote %s (%d examples, %d features)" % (args.out, raw.shape[0], width))
    return 0


def cmd_plot(args):
    from .metrics import RunMetrics
    from .svgplot import write_line_plot

    series = []
    for path in args.csvs:
        m = RunMetrics.read_csv(path)
        stem = os.path.splitext(os.path.basename(path))[0]
        if stem == "metrics":
            # conventional file name: the run directory is the telling part
            parent = os.path.basename(os.path.dirname(os.path.abspath(path)))
            stem = parent or stem
        for split in ("train", "test"):
            pts = m.series(split)
            if pts:
                label = "%s/%s" % (stem, split) if len(args.csvs) > 1 else split
                series.append((label, pts))
    write_line_plot(args.out, series, title=args.title, xlabel="epoch",
                    ylabel="error %")
    print("wrote %s" % args.out)
    return 0


def cmd_validate(args):
    from . import dataio

    failed = False
    for path in args.paths:
        try:
            ds = dataio.read_dataset(path)
        except (dataio.DatasetFormatError, OSError) as e:
            print("%s: UNREADABLE: %s" % (path, e))
            failed = True
            continue
        report = dataio.validate(ds)
        for name, ok, detail in report:
            tag = "ok" if ok else "FAIL"
            suffix = " (%s)" % detail if detail else ""
            print("%s: %s %s%s" % (path, tag, name, suffix))
            if not ok:
                failed = True
    return 1 if failed else 0


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    _apply_thread_flag(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError, ArithmeticError, KeyError) as e:
        # covers ConfigError, DatasetFormatError, CheckpointFormatError,
        # DivergenceError and FloatingPointError; one-line diagnostics
        print("error: %s" % e, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
