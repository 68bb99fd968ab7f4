import csv

from vcd import VCDWriter
from vcd.gtkw import GTKWSave

from ..errors import DataError
from ..losses import LossBreakdown


__all__ = ["LOG_COLUMNS", "TrainingLog", "read_log", "LossTraceWriter"]


LOG_COLUMNS = ("step",) + LossBreakdown.columns


class TrainingLog:
    """CSV log with one row per step."""
    def __init__(self, file, *, append=False):
        new = not append
        if isinstance(file, str):
            file = open(file, "a" if append else "w", newline="")
        self.file   = file
        self.writer = csv.writer(file)
        if new:
            self.writer.writerow(LOG_COLUMNS)

    def write(self, step, breakdown):
        self.writer.writerow([step] + ["{:.9g}".format(value) for value in breakdown.as_row()])
        self.file.flush()

    def close(self):
        self.file.close()


def read_log(file):
    """Rows of a :class:`TrainingLog` as ``(step, LossBreakdown)`` pairs."""
    with open(file, newline="") as f:
        reader = csv.reader(f)
        header = tuple(next(reader))
        if header != LOG_COLUMNS:
            raise DataError("Training log {} has columns {}, expected {}"
                             .format(file, ",".join(header), ",".join(LOG_COLUMNS)))
        return [(int(row[0]), LossBreakdown(**{name: float(value)
                                               for name, value in zip(LOG_COLUMNS[1:], row[1:])}))
                for row in reader]


class LossTraceWriter:
    """Loss components as real-valued Value Change Dump variables, one timestamp per step."""
    def __init__(self, *, vcd_file, gtkw_file=None):
        if isinstance(vcd_file, str):
            vcd_file = open(vcd_file, "wt")
        if isinstance(gtkw_file, str):
            gtkw_file = open(gtkw_file, "wt")

        self.vcd_file   = vcd_file
        self.vcd_writer = VCDWriter(self.vcd_file, timescale="1 s",
                                    comment="Generated by dmcodec")
        self.gtkw_file  = gtkw_file
        self.gtkw_save  = gtkw_file and GTKWSave(self.gtkw_file)

        self.vcd_vars = {}
        for name in LossBreakdown.columns:
            self.vcd_vars[name] = self.vcd_writer.register_var(
                scope=("train", "loss"), name=name, var_type="real", size=64, init=0.0)
        self.last_step = 0

    def update(self, step, breakdown):
        for name, value in breakdown.items():
            if value is not None:
                self.vcd_writer.change(self.vcd_vars[name], step, float(value))
        self.last_step = step

    def close(self):
        self.vcd_writer.close(self.last_step + 1)

        if self.gtkw_save is not None:
            self.gtkw_save.dumpfile(self.vcd_file.name)
            self.gtkw_save.dumpfile_size(self.vcd_file.tell())

            self.gtkw_save.treeopen("train")
            for name in LossBreakdown.columns:
                self.gtkw_save.trace("train.loss.{}".format(name), datafmt="real")

        self.vcd_file.close()
        if self.gtkw_file is not None:
            self.gtkw_file.close()
