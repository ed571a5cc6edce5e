"""End-to-end checks of the command line front end, run in-process."""

import os
import shutil

import numpy as np
import pytest

from pentolab import datagen
from pentolab.cli import main
from pentolab.dataio import read_dataset, write_dataset
from pentolab.metrics import RunMetrics


@pytest.fixture(scope="session")
def data_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("clidata")
    write_dataset(d / "train.pent", datagen.generate_dataset(200, 2024))
    write_dataset(d / "test.pent", datagen.generate_dataset(100, 2025))
    img = datagen.generate_dataset(150, 77)
    write_dataset(d / "e1train.pent", datagen.encode_dataset(img, "exp1"))
    write_dataset(d / "e1test.pent",
                  datagen.encode_dataset(datagen.generate_dataset(60, 78), "exp1"))
    return d


TINY_SMLP = ["--set", "d_h=16", "--set", "p2nn_hidden=32",
             "--set", "batch_size=50", "--set", "epochs=1"]


# ---------------------------------------------------------------------------
# gen / validate


def test_gen_writes_dataset_and_snapshot(tmp_path, capsys):
    out = tmp_path / "g.pent"
    assert main(["gen", "--kind", "image", "--n", "50", "--seed", "5",
                 "--out", str(out)]) == 0
    assert out.exists() and (tmp_path / "g.pent.config").exists()
    ds = read_dataset(out)
    assert len(ds) == 50 and ds.global_seed == 5
    msg = capsys.readouterr().out
    assert "sha256" in msg


def test_gen_is_deterministic(tmp_path):
    a, b = tmp_path / "a.pent", tmp_path / "b.pent"
    main(["gen", "--n", "30", "--seed", "9", "--out", str(a)])
    main(["gen", "--n", "30", "--seed", "9", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_gen_symbolic_kinds(tmp_path):
    for kind, k in (("exp1", 10), ("exp2", 16), ("exp3", 80), ("exp4", 80)):
        out = tmp_path / ("%s.pent" % kind)
        assert main(["gen", "--kind", kind, "--n", "20", "--seed", "3",
                     "--out", str(out)]) == 0
        assert read_dataset(out).k == k


def test_gen_csv_export(tmp_path):
    out = tmp_path / "g.pent"
    csv = tmp_path / "labels.csv"
    assert main(["gen", "--n", "10", "--seed", "1", "--out", str(out),
                 "--csv", str(csv)]) == 0
    lines = csv.read_text().splitlines()
    assert lines[0].startswith("z,p0,") and len(lines) == 11


def test_validate_ok_and_corrupted(tmp_path, capsys):
    out = tmp_path / "v.pent"
    main(["gen", "--n", "20", "--seed", "2", "--out", str(out)])
    assert main(["validate", str(out)]) == 0
    assert "FAIL" not in capsys.readouterr().out

    blob = bytearray(out.read_bytes())
    blob[40] ^= 0xFF  # flip pixels inside the first record
    bad = tmp_path / "bad.pent"
    bad.write_bytes(bytes(blob))
    assert main(["validate", str(bad)]) == 1
    assert "FAIL" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# train / eval


def test_train_smlp_nohints_outputs(data_dir, tmp_path, capsys):
    out = tmp_path / "run"
    rc = main(["train", "--model", "smlp-nohints",
               "--train", str(data_dir / "train.pent"),
               "--test", str(data_dir / "test.pent"),
               "--threads", "1", "--out", str(out), *TINY_SMLP])
    assert rc == 0
    assert (out / "metrics.csv").exists()
    assert (out / "model.pnnw").exists()
    assert (out / "resolved.config").exists()
    m = RunMetrics.read_csv(out / "metrics.csv")
    assert [r.epoch for r in m.rows] == [0, 0, 1, 1]
    assert all(r.wallclock_s == 0.0 for r in m.rows)  # --threads 1
    assert "final test error" in capsys.readouterr().out


def test_rerun_from_resolved_config_is_byte_identical(data_dir, tmp_path):
    common = ["train", "--model", "smlp-nohints",
              "--train", str(data_dir / "train.pent"),
              "--test", str(data_dir / "test.pent"), "--threads", "1"]
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main([*common, "--out", str(out1), *TINY_SMLP]) == 0
    assert main([*common, "--out", str(out2),
                 "--config", str(out1 / "resolved.config")]) == 0
    assert (out1 / "metrics.csv").read_bytes() == (out2 / "metrics.csv").read_bytes()
    assert (out1 / "model.pnnw").read_bytes() == (out2 / "model.pnnw").read_bytes()


def test_eval_matches_final_test_row(data_dir, tmp_path, capsys):
    out = tmp_path / "run"
    main(["train", "--model", "smlp-nohints",
          "--train", str(data_dir / "train.pent"),
          "--test", str(data_dir / "test.pent"),
          "--threads", "1", "--out", str(out), *TINY_SMLP])
    final = RunMetrics.read_csv(out / "metrics.csv").last("test")
    capsys.readouterr()
    rc = main(["eval", "--model", "smlp-nohints",
               "--checkpoint", str(out / "model.pnnw"),
               "--data", str(data_dir / "test.pent"),
               "--config", str(out / "resolved.config")])
    assert rc == 0
    got = capsys.readouterr().out
    assert ("error_pct = %r" % final.error_pct) in got
    assert ("mean_loss = %r" % final.mean_loss) in got


def test_train_mlp_on_symbolic(data_dir, tmp_path):
    out = tmp_path / "mlp"
    rc = main(["train", "--model", "mlp",
               "--train", str(data_dir / "e1train.pent"),
               "--test", str(data_dir / "e1test.pent"),
               "--threads", "1", "--out", str(out),
               "--set", "hidden=16,16", "--set", "epochs=1",
               "--set", "batch_size=50"])
    assert rc == 0
    m = RunMetrics.read_csv(out / "metrics.csv")
    assert m.last("test").epoch == 1


def test_train_and_eval_knn(data_dir, tmp_path, capsys):
    out = tmp_path / "knn"
    rc = main(["train", "--model", "knn",
               "--train", str(data_dir / "train.pent"),
               "--test", str(data_dir / "test.pent"),
               "--threads", "1", "--out", str(out), "--set", "k=2"])
    assert rc == 0
    assert not (out / "model.pnnw").exists()  # nothing to checkpoint
    row = RunMetrics.read_csv(out / "metrics.csv").last("test")
    capsys.readouterr()
    rc = main(["eval", "--model", "knn",
               "--train", str(data_dir / "train.pent"),
               "--data", str(data_dir / "test.pent"), "--set", "k=2"])
    assert rc == 0
    assert ("error_pct = %r" % row.error_pct) in capsys.readouterr().out


def test_eval_knn_without_train_is_usage_error(data_dir, capsys):
    rc = main(["eval", "--model", "knn", "--data", str(data_dir / "test.pent")])
    assert rc == 2
    assert "train" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# sweep-size / random-search / dump-activations / plot


def test_sweep_size(tmp_path):
    out = tmp_path / "sweep"
    rc = main(["sweep-size", "--model", "smlp-nohints", "--sizes", "60,120",
               "--test-size", "50", "--seed", "42", "--threads", "1",
               "--out", str(out), *TINY_SMLP])
    assert rc == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "size,split,error_pct,mean_loss"
    sizes = sorted({int(l.split(",")[0]) for l in lines[1:]})
    assert sizes == [60, 120]
    assert (out / "size_60" / "metrics.csv").exists()
    assert (out / "size_120" / "metrics.csv").exists()


def test_sweep_size_requires_two_sizes(tmp_path, capsys):
    rc = main(["sweep-size", "--model", "knn", "--sizes", "100",
               "--out", str(tmp_path / "s")])
    assert rc == 2
    assert "two sizes" in capsys.readouterr().err


def test_random_search_leaderboard(data_dir, tmp_path):
    out = tmp_path / "rs"
    rc = main(["random-search", "--model", "mlp", "--trials", "2",
               "--train", str(data_dir / "e1train.pent"),
               "--threads", "1", "--out", str(out),
               "--set", "hidden=8,8", "--set", "epochs=1",
               "--set", "batch_size=50"])
    assert rc == 0
    lines = (out / "leaderboard.csv").read_text().splitlines()
    assert lines[0] == "rank,trial,settings,val_error_pct"
    assert len(lines) == 3
    errs = [float(l.rsplit(",", 1)[1]) for l in lines[1:]]
    assert errs == sorted(errs)  # best trial first


def test_random_search_kfold(data_dir, tmp_path):
    out = tmp_path / "rs5"
    rc = main(["random-search", "--model", "mlp", "--trials", "1",
               "--folds", "3", "--train", str(data_dir / "e1train.pent"),
               "--threads", "1", "--out", str(out),
               "--set", "hidden=8", "--set", "epochs=1",
               "--set", "batch_size=50"])
    assert rc == 0
    lines = (out / "leaderboard.csv").read_text().splitlines()
    assert len(lines) == 2
    assert float(lines[1].rsplit(",", 1)[1]) >= 0.0


def test_dump_activations(data_dir, tmp_path):
    out = tmp_path / "run"
    main(["train", "--model", "smlp-nohints",
          "--train", str(data_dir / "train.pent"),
          "--test", str(data_dir / "test.pent"),
          "--threads", "1", "--out", str(out), *TINY_SMLP])
    acts = tmp_path / "acts.csv"
    rc = main(["dump-activations", "--model", "smlp-nohints",
               "--checkpoint", str(out / "model.pnnw"),
               "--data", str(data_dir / "test.pent"), "--n", "7",
               "--config", str(out / "resolved.config"), "--out", str(acts)])
    assert rc == 0
    lines = acts.read_text().splitlines()
    width = 64 * 11  # patches x patch-class features
    assert lines[0].split(",")[0] == "raw_0"
    assert len(lines[0].split(",")) == 2 * width
    assert len(lines) == 8
    table = np.array([[float(v) for v in line.split(",")]
                      for line in lines[1:]])
    assert np.isfinite(table).all()
    # standardized columns are centered over the dumped examples
    std_cols = table[:, width:]
    assert np.abs(std_cols.mean(axis=0)).max() < 1e-12


def test_plot_from_metrics(data_dir, tmp_path):
    out = tmp_path / "run"
    main(["train", "--model", "smlp-nohints",
          "--train", str(data_dir / "train.pent"),
          "--test", str(data_dir / "test.pent"),
          "--threads", "1", "--out", str(out), *TINY_SMLP])
    svg = tmp_path / "curve.svg"
    rc = main(["plot", str(out / "metrics.csv"), "--out", str(svg)])
    assert rc == 0
    text = svg.read_text()
    assert text.count("<polyline") == 2  # train and test series

    # two input files -> one legend entry per file and split
    second = tmp_path / "run2"
    shutil.copytree(out, second)
    svg2 = tmp_path / "pair.svg"
    rc = main(["plot", str(out / "metrics.csv"),
               str(second / "metrics.csv"), "--out", str(svg2)])
    assert rc == 0
    paired = svg2.read_text()
    assert paired.count("<polyline") == 4
    assert "run/test" in paired and "run2/test" in paired


# ---------------------------------------------------------------------------
# error handling


def test_unknown_config_key_fails_cleanly(data_dir, tmp_path, capsys):
    rc = main(["train", "--model", "smlp-nohints",
               "--train", str(data_dir / "train.pent"),
               "--test", str(data_dir / "test.pent"),
               "--out", str(tmp_path / "x"), "--set", "dh=16"])
    assert rc == 1
    assert "unknown" in capsys.readouterr().err.lower()


def test_bad_config_value_fails_cleanly(data_dir, tmp_path, capsys):
    rc = main(["train", "--model", "smlp-nohints",
               "--train", str(data_dir / "train.pent"),
               "--test", str(data_dir / "test.pent"),
               "--out", str(tmp_path / "x"), "--set", "epochs=soon"])
    assert rc == 1
    assert "epochs" in capsys.readouterr().err


def test_missing_dataset_file_fails_cleanly(tmp_path, capsys):
    rc = main(["train", "--model", "knn", "--train", "/nonexistent.pent",
               "--test", "/nonexistent.pent", "--out", str(tmp_path / "x")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as e:
        main(["train", "--model", "not-a-model", "--train", "a", "--test", "b",
              "--out", "c"])
    assert e.value.code == 2


def test_threads_prescan_sets_env(monkeypatch):
    from pentolab.cli import _apply_thread_flag
    monkeypatch.setenv("OMP_NUM_THREADS", "sentinel")
    assert _apply_thread_flag(["train", "--threads", "3", "--out", "x"]) == "3"
    assert os.environ["OMP_NUM_THREADS"] == "3"
    assert os.environ["OPENBLAS_NUM_THREADS"] == "3"
    assert _apply_thread_flag(["train", "--threads=2"]) == "2"
    assert os.environ["MKL_NUM_THREADS"] == "2"
    assert _apply_thread_flag(["train"]) is None
