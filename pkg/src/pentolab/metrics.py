"""Per-epoch training metrics and their CSV form.

The CSV column set is fixed: epoch,split,error_pct,mean_loss,
patch_acc_pct,wallclock_s.  patch_acc_pct is empty for rows where patch
accuracy is undefined.  Floats are written with repr (shortest
round-trip form), so identical runs produce identical bytes; passing
zero_wallclock=True additionally pins the timing column to 0.0 for
byte-reproducible reruns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

HEADER = "epoch,split,error_pct,mean_loss,patch_acc_pct,wallclock_s"


@dataclass
class MetricRow:
    epoch: int
    split: str
    error_pct: float
    mean_loss: float
    patch_acc_pct: float | None = None
    wallclock_s: float = 0.0


@dataclass
class RunMetrics:
    rows: list = field(default_factory=list)

    def append(self, epoch, split, error_pct, mean_loss,
               patch_acc_pct=None, wallclock_s=0.0):
        error_pct = float(error_pct)
        if not 0.0 <= error_pct <= 100.0:
            raise ValueError("error_pct %r outside [0, 100]" % (error_pct,))
        if patch_acc_pct is not None:
            patch_acc_pct = float(patch_acc_pct)
            if not 0.0 <= patch_acc_pct <= 100.0:
                raise ValueError("patch_acc_pct %r outside [0, 100]"
                                 % (patch_acc_pct,))
        self.rows.append(MetricRow(int(epoch), split, error_pct,
                                   float(mean_loss), patch_acc_pct,
                                   float(wallclock_s)))

    def extend(self, other: "RunMetrics"):
        self.rows.extend(other.rows)

    def last(self, split: str) -> MetricRow:
        for row in reversed(self.rows):
            if row.split == split:
                return row
        raise KeyError("no rows for split %r" % split)

    def series(self, split: str):
        """(epoch, error_pct) pairs for one split, in order."""
        return [(r.epoch, r.error_pct) for r in self.rows if r.split == split]

    def write_csv(self, path, zero_wallclock: bool = False) -> None:
        with open(path, "w") as f:
            f.write(HEADER + "\n")
            for r in self.rows:
                pa = "" if r.patch_acc_pct is None else repr(r.patch_acc_pct)
                wc = repr(0.0) if zero_wallclock else repr(r.wallclock_s)
                f.write("%d,%s,%s,%s,%s,%s\n"
                        % (r.epoch, r.split, repr(r.error_pct), repr(r.mean_loss),
                           pa, wc))

    @staticmethod
    def read_csv(path) -> "RunMetrics":
        out = RunMetrics()
        with open(path) as f:
            header = f.readline().strip()
            if header != HEADER:
                raise ValueError("unexpected metrics header %r in %s" % (header, path))
            for line in f:
                line = line.strip()
                if not line:
                    continue
                epoch, split, err, loss, pa, wc = line.split(",")
                out.append(int(epoch), split, float(err), float(loss),
                           None if pa == "" else float(pa), float(wc))
        return out
