import os, sys, time
sys.path.insert(0, "/root/pkg/src")
from pentolab import datagen
from pentolab.baselines import MLPConfig, flatten_symbolic, mlp_train

train_img = datagen.generate_dataset(40000, 11)
test_img = datagen.generate_dataset(8000, 12)
tr = datagen.encode_dataset(train_img, "exp1")
te = datagen.encode_dataset(test_img, "exp1")
xtr, xte = flatten_symbolic(tr).astype(float), flatten_symbolic(te).astype(float)

for scale in (4.0, 10.0):
    for lr in (0.05, 0.5):
        cfg = MLPConfig(hidden=(1024,), activation="tanh", lr=lr,
                        batch_size=100, epochs=10, seed=1234)
        t0 = time.time()
        _, m = mlp_train(xtr * scale, tr.targets, xte * scale, te.targets, cfg)
        rows = {e: err for e, err in m.series("train")}
        print("scale %4.1f lr %.2f: train %s test %.2f [%.0fs]"
              % (scale, lr,
                 " ".join("%d:%.1f" % (e, rows[e]) for e in sorted(rows)),
                 m.last("test").error_pct, time.time() - t0), flush=True)
