"""
Unit tests for tensor files, CSV import, run manifests and reports.
"""

import os
import struct
import tempfile
import unittest

import numpy as np
import pandas as pd

from core.errors import TensorArgumentError, TensorFormatError
from solvers.halrtc import HalrtcConfig
from solvers.lrfmtc import SolveReport, SolverConfig, TuckerModel
from storage.csv_import import import_csv
from storage.manifest import RunManifest
from storage.reports import (
    SOLVE_REPORT_COLUMNS, solve_report_frame, trials_path, write_metrics, write_solve_report
)
from storage.tensor_file import (
    HEADER, MAGIC, decode_tensor, encode_tensor, load_matrix, load_tensor, load_tucker_model,
    model_paths, save_matrix, save_tensor, save_tucker_model
)


class StorageTestCase(unittest.TestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()

    def path(self, name):
        return os.path.join(self.tmp, name)

    def write_text(self, name, text):
        with open(self.path(name), 'w', encoding='utf-8') as f:
            f.write(text)
        return self.path(name)


class TestTensorFile(StorageTestCase):
    """Test cases for the binary tensor container"""

    def setUp(self):
        super().setUp()
        self.t = np.random.default_rng(0).standard_normal((3, 4, 5))

    def test_roundtrip_is_bit_exact(self):
        t = self.t.copy()
        t[0, 0, 0] = -0.0
        t[1, 2, 3] = np.finfo(float).tiny / 4
        save_tensor(self.path('t.dt3'), t)
        back = load_tensor(self.path('t.dt3'))
        self.assertEqual(back.tobytes(order='F'), t.tobytes(order='F'))
        self.assertTrue(back.flags['F_CONTIGUOUS'])

    def test_layout(self):
        blob = encode_tensor(self.t)
        self.assertEqual(blob[:4], MAGIC)
        self.assertEqual(struct.unpack_from('<I3Q', blob, 4), (1, 3, 4, 5))
        self.assertEqual(len(blob), 32 + 8 * 60)
        self.assertEqual(struct.unpack_from('<d', blob, 32 + 8)[0], self.t[1, 0, 0])

    def test_bad_magic(self):
        blob = b"XYZ\x00" + encode_tensor(self.t)[4:]
        with self.assertRaises(TensorFormatError) as ctx:
            decode_tensor(blob)
        self.assertEqual(ctx.exception.offset, 0)
        self.assertIn("XYZ", str(ctx.exception))

    def test_bad_version(self):
        blob = bytearray(encode_tensor(self.t))
        struct.pack_into('<I', blob, 4, 2)
        with self.assertRaises(TensorFormatError) as ctx:
            decode_tensor(bytes(blob))
        self.assertEqual(ctx.exception.offset, 4)

    def test_truncated(self):
        with self.assertRaises(TensorFormatError):
            decode_tensor(encode_tensor(self.t)[:-8])
        with self.assertRaises(TensorFormatError):
            decode_tensor(encode_tensor(self.t)[:20])

    def test_oversized_dims_rejected_before_reading(self):
        blob = HEADER.pack(MAGIC, 1, 2 ** 40, 2 ** 40, 2 ** 40) + b"\x00" * 64
        with self.assertRaises(TensorFormatError):
            decode_tensor(blob)

    def test_zero_extent(self):
        with self.assertRaises(TensorFormatError) as ctx:
            decode_tensor(HEADER.pack(MAGIC, 1, 3, 0, 2))
        self.assertEqual(ctx.exception.offset, 8)

    def test_matrix(self):
        m = np.arange(6.0).reshape(2, 3)
        save_matrix(self.path('m.dt3'), m)
        np.testing.assert_array_equal(load_matrix(self.path('m.dt3')), m)
        save_tensor(self.path('t.dt3'), self.t)
        with self.assertRaises(TensorFormatError):
            load_matrix(self.path('t.dt3'))

    def test_tucker_model(self):
        rng = np.random.default_rng(1)
        model = TuckerModel(
            np.asfortranarray(rng.standard_normal((2, 3, 1))),
            rng.standard_normal((4, 2)), rng.standard_normal((5, 3)), rng.standard_normal((6, 1))
        )
        prefix = self.path('run.model')
        paths = save_tucker_model(prefix, model)
        self.assertEqual(set(paths), {'core', 'u1', 'u2', 'u3'})
        self.assertTrue(all(p.exists() for p in model_paths(prefix).values()))
        back = load_tucker_model(prefix)
        np.testing.assert_array_equal(back.core, model.core)
        np.testing.assert_array_equal(back.reconstruct(), model.reconstruct())

    def test_tucker_model_mismatch(self):
        rng = np.random.default_rng(2)
        model = TuckerModel(np.ones((2, 2, 2), order='F'), *(rng.standard_normal((3, 2)) for _ in range(3)))
        prefix = self.path('bad')
        save_tucker_model(prefix, model)
        save_matrix(model_paths(prefix)['u2'], rng.standard_normal((3, 3)))
        with self.assertRaises(TensorArgumentError):
            load_tucker_model(prefix)


class TestCsvImport(StorageTestCase):
    """Test cases for import_csv"""

    def _full_csv(self):
        lines = [f"{i},{j},{k},{i * 100 + j * 10 + k}"
                 for k in (1, 2) for j in (1, 2) for i in (1, 2)]
        return self.write_text('full.csv', '\n'.join(lines) + '\n')

    def test_full_import(self):
        t = import_csv(self._full_csv(), (2, 2, 2))
        self.assertEqual(t[1, 0, 1], 212.0)
        self.assertEqual(t[0, 1, 0], 121.0)

    def test_duplicate_names_line(self):
        path = self.write_text('dup.csv', "1,1,1,1.0\n1,1,2,2.0\n1,1,1,3.0\n")
        with self.assertRaisesRegex(TensorArgumentError, "line 3"):
            import_csv(path, (1, 1, 2))

    def test_missing_cells(self):
        path = self.write_text('part.csv', "1,1,1,1.5\n2,2,2,-2.0\n")
        with self.assertRaises(TensorArgumentError):
            import_csv(path, (2, 2, 2))
        t, mask = import_csv(path, (2, 2, 2), mask_out=True)
        self.assertEqual(mask.observed_count, 2)
        self.assertEqual(t[1, 1, 1], -2.0)
        self.assertEqual(t[0, 1, 0], 0.0)

    def test_out_of_range(self):
        path = self.write_text('range.csv', "1,1,1,1.0\n0,1,1,1.0\n")
        with self.assertRaisesRegex(TensorArgumentError, "line 2"):
            import_csv(path, (2, 2, 2), mask_out=True)

    def test_non_numeric(self):
        path = self.write_text('text.csv', "1,1,1,abc\n")
        with self.assertRaisesRegex(TensorArgumentError, "line 1"):
            import_csv(path, (1, 1, 1))
        path = self.write_text('nan.csv', "1,1,1,nan\n")
        with self.assertRaises(TensorArgumentError):
            import_csv(path, (1, 1, 1))

    def test_wrong_column_count(self):
        path = self.write_text('cols.csv', "1,1,1\n")
        with self.assertRaises(TensorArgumentError):
            import_csv(path, (1, 1, 1))


class TestManifest(StorageTestCase):
    """Test cases for RunManifest"""

    def test_roundtrip(self):
        manifest = RunManifest.from_configs(
            'lrfmtc', SolverConfig(alpha=0.1, L=7, seed=3), HalrtcConfig(gamma=2.5),
            input='y.dt3', mask='o.dt3', output=None
        )
        path = self.path('run.manifest')
        manifest.save(path)
        back = RunManifest.load(path)
        self.assertEqual(back.solver, manifest.solver)
        self.assertEqual(back.halrtc, manifest.halrtc)
        self.assertEqual(back.root_seed, 3)
        self.assertEqual(back.paths, {'input': 'y.dt3', 'mask': 'o.dt3'})
        self.assertEqual(back.to_text(), manifest.to_text())

    def test_partial_manifest_uses_defaults(self):
        back = RunManifest.from_text("method=halrtc\nsolver.alpha=2.0\n")
        self.assertEqual(back.solver.alpha, 2.0)
        self.assertEqual(back.solver.L, SolverConfig().L)
        self.assertEqual(back.method, 'halrtc')

    def test_malformed(self):
        for text in ("method=lrfmtc\nno separator\n",
                     "method=lrfmtc\nmethod=halrtc\n",
                     "method=lrfmtc\ncolour=blue\n",
                     "solver.alpha=1.0\n",
                     "method=lrfmtc\nsolver.L=zero\n",
                     "method=lrfmtc\nsolver.unknown=1\n"):
            with self.assertRaises(TensorFormatError, msg=text):
                RunManifest.from_text(text)

    def test_unknown_method(self):
        with self.assertRaises(TensorArgumentError):
            RunManifest.from_text("method=tucker\n")

    def test_version_mismatch_warns(self):
        with self.assertLogs('storage.manifest', level='WARNING'):
            RunManifest.from_text("artifact_version=0\nmethod=lrfmtc\n")


class TestReports(StorageTestCase):
    """Test cases for the CSV reports"""

    def test_lrfmtc_report(self):
        report = SolveReport(method='lrfmtc', objective_trace=[3.0, 2.0, 1.5],
                             elapsed_trace=[0.1, 0.2, 0.3])
        path = self.path('r.csv')
        write_solve_report(path, report)
        frame = pd.read_csv(path)
        self.assertEqual(list(frame.columns), SOLVE_REPORT_COLUMNS)
        self.assertEqual(list(frame['objective']), [3.0, 2.0, 1.5])
        self.assertEqual(list(frame['iteration']), [1, 2, 3])

    def test_halrtc_report_uses_change(self):
        report = SolveReport(method='halrtc', change_trace=[0.5, 0.1], elapsed_trace=[0.1, 0.2])
        self.assertEqual(list(solve_report_frame(report)['objective']), [0.5, 0.1])

    def test_metrics(self):
        path = self.path('m.csv')
        write_metrics(path, {'rse': 0.25, 'psnr': 30.0, 'ssim': None})
        with open(path, encoding='utf-8') as f:
            self.assertEqual(f.read(), "rse,psnr,ssim\n0.25,30.0,\n")
        with self.assertRaises(TensorArgumentError):
            write_metrics(path, {'mse': 1.0})

    def test_trials_path(self):
        self.assertEqual(trials_path('out/sweep.csv'), 'out/sweep.trials.csv')
        self.assertEqual(trials_path('sweep'), 'sweep.trials.csv')


if __name__ == "__main__":
    unittest.main()
