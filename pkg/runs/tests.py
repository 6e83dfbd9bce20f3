from io import StringIO
from pathlib import Path
import json
import math
import tempfile

import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from common.exceptions import ConfigInvalid
from .services import MANIFEST_NAME, RunService, cross_disagreement

STABLE_LAW = {'kind': 'linear', 'beta': 0.5}


class ValidateTest(SimpleTestCase):
    """
    Test cases for configuration diagnostics.
    """

    def setUp(self):
        self.service = RunService()

    def test_default_config(self):
        """Test that the empty configuration is valid."""
        self.assertEqual(self.service.validate({}), [])

    def test_negative_gravity(self):
        """Test a diagnostic naming gas.g."""
        diagnostics = self.service.validate({'gas': {'g': -1.0}})
        self.assertEqual(len(diagnostics), 1)
        self.assertTrue(diagnostics[0].startswith('gas.g:'))

    def test_non_monotone_table(self):
        """Test a diagnostic for an entropy table whose eta column decreases."""
        config = {'law': {'kind': 'table', 'table': [[0.0, 0.0], [1.0, -0.5], [0.5, -1.0]]}}
        diagnostics = self.service.validate(config)
        self.assertTrue(any(line.startswith('law.table:') for line in diagnostics))

    def test_quantization(self):
        """Test that l * x_plus = 3 pi is rejected for a branch stage."""
        config = {'stages': {'g': {'l': 3.0 * math.pi}}}
        diagnostics = self.service.validate(config)
        self.assertTrue(any(line.startswith('stages.g.l:') for line in diagnostics))
        with self.assertRaises(ConfigInvalid):
            self.service.run(config)

    def test_synth_quantization(self):
        """Test that a y-direction synthesis mode is checked against y_plus."""
        config = {'y_plus': 2.0, 'stages': {'synth': {'modes': [
            {'direction': 'y', 'l': 2.0 * math.pi, 'lambda': 10.0},
            {'direction': 'y', 'l': 3.0, 'lambda': 10.0},
        ]}}}
        diagnostics = self.service.validate(config)
        self.assertEqual(len(diagnostics), 1)
        self.assertTrue(diagnostics[0].startswith('stages.synth.modes[1].l:'))

    def test_stage_arguments(self):
        """Test the cross-field rules of the stage requests."""
        self.assertTrue(self.service.validate({'stages': {'g': {'l': 2.0 * math.pi, 'harmonic': 1}}}))
        self.assertTrue(self.service.validate({'stages': {'p': {'n_min': 5, 'n_max': 4}}}))
        self.assertTrue(self.service.validate({'stages': {'dispersion': {'lambda_min': 1.0}}}))
        self.assertTrue(self.service.validate({'stages': {'synth': {}}}))
        self.assertEqual(self.service.validate({'stages': {'g': {'harmonic': 2}, 'dispersion': {'harmonic': 2}}}), [])

    def test_tolerances(self):
        """Test that only known float settings can be overridden, with positive values."""
        self.assertEqual(self.service.validate({'tolerances': {'ODE_RTOL': 1e-9}}), [])
        self.assertTrue(self.service.validate({'tolerances': {'NOT_A_SETTING': 1.0}})[0].startswith('tolerances:'))
        self.assertTrue(self.service.validate({'tolerances': {'ODE_RTOL': -1.0}})[0].startswith('tolerances.ODE_RTOL:'))
        self.assertTrue(self.service.validate({'tolerances': {'SCAN_POINTS': 10.0}}))


class CrossDisagreementTest(SimpleTestCase):
    """
    Test cases for the dual-method disagreement measure.
    """

    def test_matching_lists(self):
        """Test relative disagreement of matched lists in both directions."""
        self.assertAlmostEqual(cross_disagreement([1.0, 2.0], [1.0 + 1e-6, 2.0]), 1e-6 / (1.0 + 1e-6), delta=1e-15)

    def test_unmatched_value(self):
        """Test that an extra root shows up as a large disagreement."""
        self.assertGreater(cross_disagreement([1.0], [1.0, 3.0]), 0.5)
        self.assertEqual(cross_disagreement([1.0], []), 1.0)
        self.assertEqual(cross_disagreement([], []), 0.0)


class RunTest(SimpleTestCase):
    """
    Test cases for executing run configurations.
    """

    def setUp(self):
        self.service = RunService()
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_equilibrium_only(self):
        """Test the manifest of an equilibrium-only run on the isentropic defaults."""
        manifest = self.service.run({'output_dir': self.tmp.name})
        self.assertEqual(list(manifest.stages), ['equilibrium'])
        report = manifest.stages['equilibrium']
        self.assertEqual(report.status, 'ok')
        self.assertLess(report.metrics['hydrostatic'], 1e-10)
        self.assertEqual(manifest.exit_status, 0)

        tables = [path for path in manifest.files if path.endswith('.csv')]
        self.assertEqual(len(tables), 1)
        self.assertTrue(tables[0].endswith('profile.csv'))
        for checksum in manifest.files.values():
            self.assertEqual(len(checksum), 64)

        document = json.loads((Path(self.tmp.name) / MANIFEST_NAME).read_text())
        self.assertEqual(document['config_hash'], manifest.config_hash)
        self.assertEqual(document['stages']['equilibrium']['status'], 'ok')
        self.assertEqual(document['exit_status'], 0)

    def test_deterministic_output(self):
        """Test that identical configurations produce byte-identical tables."""
        with tempfile.TemporaryDirectory() as other:
            first = self.service.run({'output_dir': self.tmp.name, 'law': STABLE_LAW})
            second = self.service.run({'output_dir': other, 'law': STABLE_LAW})
        checksums = lambda manifest: sorted(value for path, value in manifest.files.items() if path.endswith('.csv'))
        self.assertEqual(checksums(first), checksums(second))

    def test_stage_error(self):
        """Test that a failing stage is recorded, skips its dependents and sets the exit status."""
        config = {'output_dir': self.tmp.name, 'stages': {'p': {'upper': 10.0}, 'dispersion': {}}}
        manifest = self.service.run(config)
        self.assertEqual(manifest.stages['equilibrium'].status, 'ok')
        self.assertEqual(manifest.stages['p'].status, 'error')
        self.assertEqual(manifest.stages['p'].code, 'parameter_out_of_range')
        self.assertEqual(manifest.stages['dispersion'].status, 'skipped')
        self.assertEqual(manifest.exit_status, 3)
        self.assertTrue((Path(self.tmp.name) / MANIFEST_NAME).exists())

    def test_vertical_stage(self):
        """Test the l = 0 stage against shooting and the closed form."""
        manifest = self.service.run({'output_dir': self.tmp.name, 'stages': {'l0': {'n_max': 3}}})
        report = manifest.stages['l0']
        self.assertEqual(report.status, 'ok')
        self.assertLess(report.metrics['closed_form_disagreement'], 1e-4)
        self.assertLess(manifest.cross_validation['l0'], 1e-6)
        self.assertTrue(any(path.endswith('spectrum_l0_closed_form.csv') for path in manifest.files))

    def test_tolerance_overrides(self):
        """Test that tolerance overrides apply during the run only."""
        manifest = self.service.run({'output_dir': self.tmp.name, 'tolerances': {'INVERSION_RTOL': 1e-12}})
        self.assertEqual(manifest.stages['equilibrium'].status, 'ok')
        self.assertEqual(self.service.option('INVERSION_RTOL'), 1e-13)


class FullRunTest(SimpleTestCase):
    """
    Test case for a stable-profile run through every stage.
    """

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmp = tempfile.TemporaryDirectory()
        cls.manifest = RunService().run({
            'output_dir': cls.tmp.name,
            'law': STABLE_LAW,
            'stages': {
                'g': {'n_min': 1, 'n_max': 2},
                'p': {'n_min': 5, 'n_max': 6},
                'dispersion': {'grid': 32},
                'synth': {'epsilon': 1e-4, 'nt': 5, 'nx': 8, 'nz': 9},
            },
        })

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()
        super().tearDownClass()

    def test_all_stages_ok(self):
        """Test that every requested stage succeeded."""
        self.assertEqual(list(self.manifest.stages), ['equilibrium', 'g', 'p', 'dispersion', 'synth'])
        for name, report in self.manifest.stages.items():
            self.assertEqual(report.status, 'ok', f'{name}: {report.message}')
        self.assertEqual(self.manifest.exit_status, 0)

    def test_cross_validation(self):
        """Test dispersion roots against the fixed-point eigenvalues within 1e-5."""
        self.assertEqual(set(self.manifest.cross_validation), {'g', 'p'})
        self.assertLess(self.manifest.max_disagreement, 1e-5)
        metrics = self.manifest.stages['dispersion'].metrics
        self.assertEqual(len(metrics['g_roots']), 2)
        self.assertEqual(len(metrics['p_roots']), 2)

    def test_files(self):
        """Test that every table is listed with the checksum of its content."""
        from common.repositories import file_checksum

        names = {Path(path).name for path in self.manifest.files}
        for name in ('profile.csv', 'gmodes.csv', 'pmodes.csv', 'dispersion_g.csv', 'dispersion_p.csv',
                     'wavefield_surface.csv', 'wavefield_snapshots.csv'):
            self.assertIn(name, names)
        for path, checksum in self.manifest.files.items():
            self.assertEqual(file_checksum(path), checksum)
        surface = pd.read_csv(Path(self.tmp.name) / 'wavefield_surface.csv')
        self.assertEqual(len(surface), 40)

    def test_synthesis_metrics(self):
        """Test the boundary amplitude and wave residual of the synthesized mode."""
        metrics = self.manifest.stages['synth'].metrics
        self.assertLessEqual(metrics['max_elevation'], 1e-4 * (1.0 + 1e-6))
        self.assertLess(metrics['wave_residual'], 1e-3)


class RunCommandTest(SimpleTestCase):
    """
    Test cases for the run and validate management commands.
    """

    def write_config(self, tmp: str, config) -> str:
        path = Path(tmp) / 'config.json'
        path.write_text(config if isinstance(config, str) else json.dumps(config))
        return str(path)

    def test_run_command(self):
        """Test the stage report and the manifest of the run command."""
        with tempfile.TemporaryDirectory() as tmp:
            out = StringIO()
            call_command('run', self.write_config(tmp, {'output_dir': tmp}), stdout=out)
            self.assertIn('equilibrium: ok', out.getvalue())
            self.assertTrue((Path(tmp) / MANIFEST_NAME).exists())

    def test_run_command_stage_error(self):
        """Test that a failed stage gives a command error with the stage exit status."""
        with tempfile.TemporaryDirectory() as tmp:
            path = self.write_config(tmp, {'output_dir': tmp, 'stages': {'p': {'upper': 10.0}}})
            with self.assertRaises(CommandError) as ctx:
                call_command('run', path, stdout=StringIO())
            self.assertEqual(ctx.exception.returncode, 3)

    def test_validate_command(self):
        """Test the validate command on a valid and an invalid configuration."""
        with tempfile.TemporaryDirectory() as tmp:
            out = StringIO()
            call_command('validate', self.write_config(tmp, {}), stdout=out)
            self.assertIn('Configuration is valid', out.getvalue())

            out = StringIO()
            with self.assertRaises(CommandError) as ctx:
                call_command('validate', self.write_config(tmp, {'gas': {'g': -1.0}}), stdout=out)
            self.assertEqual(ctx.exception.returncode, 2)
            self.assertIn('gas.g:', out.getvalue())

    def test_malformed_config(self):
        """Test that a document that is not JSON is reported as config_invalid."""
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError) as ctx:
                call_command('run', self.write_config(tmp, '{"gas": '), stdout=StringIO())
            self.assertIn('config_invalid', str(ctx.exception))
