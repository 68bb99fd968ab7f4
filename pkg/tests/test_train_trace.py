import os

from dmcodec.errors import DataError
from dmcodec.losses import LossBreakdown
from dmcodec.train import LOG_COLUMNS, TrainingLog, read_log, LossTraceWriter

from .utils import *


class TrainingLogTestCase(CodecTestCase):
    def test_write_read(self):
        path = os.path.join(self.mkdtemp(), "train.csv")
        log = TrainingLog(path)
        log.write(1, LossBreakdown(t=0.5, f=2.25, d=1.0, total=3.0))
        log.write(2, LossBreakdown(t=0.25, total=1.0))
        log.close()

        with open(path) as f:
            self.assertEqual(f.readline().strip(), ",".join(LOG_COLUMNS))
        rows = read_log(path)
        self.assertEqual([step for step, _ in rows], [1, 2])
        self.assertEqual(rows[0][1].f, 2.25)
        self.assertEqual(rows[1][1].total, 1.0)

    def test_append(self):
        path = os.path.join(self.mkdtemp(), "train.csv")
        log = TrainingLog(path)
        log.write(1, LossBreakdown(total=1.0))
        log.close()
        log = TrainingLog(path, append=True)
        log.write(2, LossBreakdown(total=2.0))
        log.close()
        self.assertEqual([b.total for _, b in read_log(path)], [1.0, 2.0])

    def test_wrong_header(self):
        path = os.path.join(self.mkdtemp(), "train.csv")
        with open(path, "w") as f:
            f.write("step,loss\n1,0.5\n")
        with self.assertRaisesRegex(DataError,
                r"^Training log .+train\.csv has columns step,loss, expected "
                r"step,t,f,g,d,fm,w,distill,total$"):
            read_log(path)


class LossTraceWriterTestCase(CodecTestCase):
    def test_vcd(self):
        directory = self.mkdtemp()
        vcd_path = os.path.join(directory, "losses.vcd")
        gtkw_path = os.path.join(directory, "losses.gtkw")
        writer = LossTraceWriter(vcd_file=vcd_path, gtkw_file=gtkw_path)
        writer.update(1, LossBreakdown(t=0.5, total=1.0))
        writer.update(2, LossBreakdown(t=0.25, total=0.5))
        writer.close()

        with open(vcd_path) as f:
            vcd = f.read()
        self.assertIn("$scope module train $end", vcd)
        self.assertIn("$scope module loss $end", vcd)
        self.assertIn("$var real 64", vcd)
        self.assertIn("#2", vcd)
        with open(gtkw_path) as f:
            gtkw = f.read()
        self.assertIn("train.loss.total", gtkw)
        self.assertIn(vcd_path, gtkw)

    def test_vcd_only(self):
        vcd_path = os.path.join(self.mkdtemp(), "losses.vcd")
        writer = LossTraceWriter(vcd_file=vcd_path)
        writer.update(1, LossBreakdown(t=1.0))
        writer.close()
        self.assertTrue(os.path.getsize(vcd_path) > 0)
