from pathlib import Path
import tempfile

import numpy as np
from django.conf import settings
from django.core.management.base import CommandError
from django.test import SimpleTestCase
from rest_framework import serializers
from rest_framework.exceptions import ParseError

from .exceptions import (
    ConfigurationError, DomainError, InversionFailure, NearEigenvalue, ParameterOutOfRange,
    command_error_handler,
)
from .repositories import CsvRepository, JsonRepository, file_checksum
from .serializers import PositiveFloatField, flatten_errors
from .services import SpectralService, overriding
from .utils import config_hash, graded_mesh, parse_json, render_json, sign_changes, weighted_norm


class TwoColumnRepository(CsvRepository):
    columns = ['a', 'b']


class SampleSerializer(serializers.Serializer):
    scale = PositiveFloatField()
    items = serializers.ListField(child=PositiveFloatField(), required=False)


class ExceptionTest(SimpleTestCase):
    """
    Test cases for the error hierarchy and the command error conversion.
    """

    def test_exit_statuses(self):
        """Test the exit status of each error family."""
        self.assertEqual(ConfigurationError().exit_status, 2)
        self.assertEqual(ParameterOutOfRange().exit_status, 3)
        self.assertEqual(InversionFailure().exit_status, 4)
        self.assertEqual(NearEigenvalue().exit_status, 5)
        self.assertTrue(issubclass(ParameterOutOfRange, DomainError))

    def test_command_error_handler(self):
        """Test that the command error carries code, details and exit status."""
        error = command_error_handler(ParameterOutOfRange("lambda too large", details={'lam': 5.0}), 'test')
        self.assertIsInstance(error, CommandError)
        self.assertEqual(error.returncode, 3)
        self.assertEqual(str(error), "[parameter_out_of_range] lambda too large (lam=5.0)")

    def test_unexpected_error(self):
        """Test that foreign exceptions keep their message and the default exit status."""
        error = command_error_handler(ValueError("boom"))
        self.assertEqual(str(error), "boom")
        self.assertEqual(error.returncode, 1)


class ServiceTest(SimpleTestCase):
    """
    Test cases for the shared service mixins.
    """

    def setUp(self):
        self.service = SpectralService()

    def test_overriding(self):
        """Test that overrides apply inside the block only and nest."""
        default = self.service.option('INVERSION_RTOL')
        with overriding({'INVERSION_RTOL': 1e-9}):
            self.assertEqual(self.service.option('INVERSION_RTOL'), 1e-9)
            with overriding({'ODE_RTOL': 1e-5}):
                self.assertEqual(self.service.option('INVERSION_RTOL'), 1e-9)
                self.assertEqual(self.service.option('ODE_RTOL'), 1e-5)
        self.assertEqual(self.service.option('INVERSION_RTOL'), default)
        self.assertEqual(self.service.option('NOT_A_SETTING', 7), 7)

    def test_cached(self):
        """Test that the cache serves the second call and is scoped by overrides."""
        calls = []

        def compute():
            calls.append(1)
            return [1.0, 2.0]

        key = 'common-tests-cached'
        default_key = self.service.get_cache_key(key)
        self.service.delete_cache(key)
        self.assertEqual(self.service.cached(key, compute), [1.0, 2.0])
        self.assertEqual(self.service.cached(key, compute), [1.0, 2.0])
        self.assertEqual(len(calls), 1)
        self.service.cached(key, compute, use_cache=False)
        self.assertEqual(len(calls), 2)
        with overriding({'ODE_RTOL': 1e-6}):
            self.assertNotEqual(self.service.get_cache_key(key), default_key)
            self.service.cached(key, compute)
        self.assertEqual(len(calls), 3)
        self.service.delete_cache(key)

    def test_validate_positive(self):
        """Test the positivity and count checks."""
        self.service.validate_positive(a=1.0, b=2.0)
        with self.assertRaises(DomainError) as ctx:
            self.service.validate_positive(a=1.0, b=0.0, c=float('inf'))
        self.assertEqual(set(ctx.exception.details), {'b', 'c'})
        with self.assertRaises(DomainError):
            self.service.validate_count('points', 2.5)
        with self.assertRaises(DomainError):
            self.service.validate_count('points', 1, minimum=2)


class RepositoryTest(SimpleTestCase):
    """
    Test cases for the CSV and JSON repositories.
    """

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_csv_write(self):
        """Test column order, full float precision and the checksum record."""
        repository = TwoColumnRepository(self.tmp.name)
        path = repository.write('table.csv', {'b': [0.1, 0.2], 'a': [1.0 / 3.0, 2.0], 'extra': [0, 0]})
        lines = Path(path).read_text().splitlines()
        self.assertEqual(lines[0], 'a,b')
        self.assertEqual(float(lines[1].split(',')[0]), 1.0 / 3.0)
        self.assertEqual(repository.written, {str(path): file_checksum(path)})
        frame = repository.read('table.csv')
        self.assertEqual(list(frame.columns), ['a', 'b'])

    def test_missing_columns(self):
        """Test that a table without a declared column is rejected."""
        with self.assertRaises(ConfigurationError):
            TwoColumnRepository(self.tmp.name).write('table.csv', {'a': [1.0]})

    def test_missing_file(self):
        """Test the file_not_found code."""
        with self.assertRaises(ConfigurationError) as ctx:
            TwoColumnRepository(self.tmp.name).read('absent.csv')
        self.assertEqual(ctx.exception.code, 'file_not_found')

    def test_json_round_trip(self):
        """Test that documents are written with sorted keys and read back."""
        repository = JsonRepository(self.tmp.name)
        path = repository.write('doc.json', {'b': 1, 'a': {'d': [1.5, 2], 'c': None}})
        text = Path(path).read_text()
        self.assertLess(text.index('"a"'), text.index('"b"'))
        self.assertEqual(repository.read('doc.json'), {'a': {'c': None, 'd': [1.5, 2]}, 'b': 1})


class SerializerTest(SimpleTestCase):
    """
    Test cases for the shared fields and error flattening.
    """

    def test_positive_field(self):
        """Test rejection of zero, negative and non-finite values."""
        for value in (0.0, -1.0, 'nan', 'inf'):
            self.assertFalse(SampleSerializer(data={'scale': value}).is_valid(), value)
        self.assertTrue(SampleSerializer(data={'scale': 2.5}).is_valid())

    def test_flatten_errors(self):
        """Test dotted paths for nested and indexed errors."""
        serializer = SampleSerializer(data={'scale': -1.0, 'items': [1.0, -2.0]})
        self.assertFalse(serializer.is_valid())
        diagnostics = flatten_errors(serializer.errors)
        self.assertEqual(len(diagnostics), 2)
        self.assertTrue(diagnostics[0].startswith('items'))
        self.assertTrue(diagnostics[1].startswith('scale: '))
        self.assertEqual(flatten_errors({'a': {'b': ['bad']}}), ['a.b: bad'])
        self.assertEqual(flatten_errors(['bad']), ['non_field_errors: bad'])


class UtilsTest(SimpleTestCase):
    """
    Test cases for the numerical and JSON helpers.
    """

    def test_config_hash(self):
        """Test that the hash ignores key order and sees value changes."""
        self.assertEqual(config_hash({'a': 1, 'b': [1, 2]}), config_hash({'b': [1, 2], 'a': 1}))
        self.assertNotEqual(config_hash({'a': 1}), config_hash({'a': 2}))
        self.assertEqual(len(config_hash({})), 64)

    def test_parse_json(self):
        """Test parsing and the malformed-document error."""
        self.assertEqual(parse_json(render_json({'x': np.float64(0.5)})), {'x': 0.5})
        with self.assertRaises(ParseError):
            parse_json(b'{"x": ')

    def test_graded_mesh(self):
        """Test end points and shrinking spacing towards the right end."""
        mesh = graded_mesh(2.0, 10, power=2.0)
        self.assertEqual(len(mesh), 11)
        self.assertEqual(mesh[0], 0.0)
        self.assertAlmostEqual(mesh[-1], 2.0, places=14)
        spacing = np.diff(mesh)
        self.assertTrue(np.all(spacing[1:] < spacing[:-1]))
        self.assertAlmostEqual(spacing[-1], 2.0 / 100.0, places=14)

    def test_sign_changes(self):
        """Test counting with and without a noise floor."""
        z = np.linspace(0.0, 1.0, 201)
        self.assertEqual(sign_changes(np.sin(3.5 * np.pi * z)), 3)
        self.assertEqual(sign_changes(np.array([1.0, 1e-12, -1e-12, 1.0]), rtol=1e-6), 0)
        self.assertEqual(sign_changes(np.array([])), 0)

    def test_weighted_norm(self):
        """Test the trapezoid norm of a constant field."""
        grid = np.linspace(0.0, 2.0, 11)
        self.assertAlmostEqual(weighted_norm(grid, np.full(11, 2.0), np.ones(11), np.ones(11)), np.sqrt(8.0))


class ServiceConstructionTest(SimpleTestCase):
    """
    Test cases for the mixin chain of every concrete service.
    """

    def service_classes(self):
        from dispersion.services import DispersionService
        from equilibrium.services import EquilibriumService
        from modes_fixedpoint.services import FixedPointService
        from modes_l0.services import VerticalModeService
        from runs.services import RunService
        from slcore.services import SturmLiouvilleService
        from wavefield.services import WavefieldService

        return [EquilibriumService, SturmLiouvilleService, VerticalModeService, FixedPointService,
                DispersionService, WavefieldService, RunService]

    def test_mixins_initialized(self):
        """Test that every service gets its repository, cache timeout and logger."""
        for service_class in self.service_classes():
            service = service_class()
            self.assertIsNotNone(service.repository, service_class.__name__)
            self.assertEqual(service.cache_timeout, settings.DEFAULT_CACHE_TIMEOUT)
            self.assertEqual(service.logger.name, service_class.__module__)
            with self.assertLogs(service_class.__module__, level='INFO') as logs:
                service.log_operation('construct', 'test', {'points': 3})
            self.assertIn('construct points=3', logs.output[0])

    def test_base_service_logs_operation(self):
        """Test that the bare SpectralService carries the logging mixin."""
        service = SpectralService()
        with self.assertLogs('common.services', level='ERROR'):
            service.log_error('construct', ParameterOutOfRange("bad"))

    def test_equilibrium_operation_logs(self):
        """Test a full operation through a freshly constructed service."""
        from equilibrium.laws import IsentropicLaw
        from equilibrium.profile import GasParameters
        from equilibrium.services import EquilibriumService

        with self.assertLogs('equilibrium.services', level='INFO'):
            profile = EquilibriumService().build_equilibrium(GasParameters(gamma=1.4, c_v=1.0, g=1.0), IsentropicLaw(), 1.0)
        self.assertEqual(profile.z_plus, 1.0)
