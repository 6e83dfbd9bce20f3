from io import StringIO
from pathlib import Path
import math
import tempfile

import numpy as np
import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from common.exceptions import NonInvertibleMap, ParameterOutOfRange, PeriodMismatch
from dispersion.services import DispersionService
from equilibrium.laws import IsentropicLaw
from equilibrium.profile import GasParameters
from equilibrium.services import EquilibriumService
from modes_fixedpoint.problems import ModeSpec
from modes_l0.services import VerticalModeService
from .fields import FieldKind, ModeTerm
from .services import WavefieldService


def isentropic_profile():
    params = GasParameters(gamma=1.4, c_v=1.0, g=1.0)
    return EquilibriumService().build_equilibrium(params, IsentropicLaw(), 1.0)


def first_p_mode(profile, spec: ModeSpec):
    service = DispersionService()
    l_g = spec.l * profile.g
    root = float(service.scan_and_refine(profile, spec, (1.05 * l_g, 4.0 * l_g), 16).values[0])
    return service.reconstruct_eigenfunction(profile, spec, root)


class ModeFixture(SimpleTestCase):
    """
    Shared p-modes of the isentropic slab for l = 2 pi and l = 4 pi.
    """

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.profile = isentropic_profile()
        cls.service = WavefieldService()
        cls.mode = first_p_mode(cls.profile, ModeSpec.harmonic(1))
        cls.mode2 = first_p_mode(cls.profile, ModeSpec.harmonic(2))
        cls.term = ModeTerm.from_mode(cls.mode)
        cls.terms = (cls.term, ModeTerm.from_mode(cls.mode, 0.5, 'y'), ModeTerm.from_mode(cls.mode2, 0.7))


class FieldConstructionTest(ModeFixture):
    """
    Test cases for building standing and progressive fields.
    """

    def test_vertical_term(self):
        """Test that an l = 0 mode moves only vertically and uniformly in x."""
        spectrum = VerticalModeService().vertical_spectrum(self.profile, 2, shooting=False)
        vertical = ModeTerm.vertical(VerticalModeService().vertical_mode_function(spectrum, 1))
        field = self.service.standing_field([vertical], epsilon=1e-2)
        t = 0.3 * vertical.period
        z = np.linspace(0.1, 0.9, 5)
        xi1, xi2, xi3 = field.displacement(t, np.array([[0.0], [0.37], [0.81]]), 0.2, z[None, :])
        self.assertFalse(np.any(xi1))
        self.assertFalse(np.any(xi2))
        np.testing.assert_allclose(xi3, np.broadcast_to(xi3[0], xi3.shape), rtol=0.0, atol=1e-15)
        expected = 1e-2 * vertical.w_at(z) * math.sin(vertical.frequency * t)
        np.testing.assert_allclose(xi3[0], expected, rtol=1e-12, atol=1e-16)

    def test_period_mismatch(self):
        """Test that a wavenumber not quantized by the period is rejected."""
        term = ModeTerm(l=3.0, lam=self.term.lam, grid=self.term.grid, u=self.term.u, w=self.term.w)
        with self.assertRaises(PeriodMismatch):
            self.service.standing_field([term])
        with self.assertRaises(PeriodMismatch):
            self.service.standing_field([self.term], x_plus=0.7)

    def test_amplitude_limit(self):
        """Test that amplitudes above MAX_AMPLITUDE are rejected."""
        with self.assertRaises(ParameterOutOfRange):
            self.service.standing_field([self.term], epsilon=0.1)
        with self.assertRaises(ParameterOutOfRange):
            self.service.standing_field([ModeTerm.from_mode(self.mode, amplitude=6.0)], epsilon=1e-2)

    def test_bad_terms(self):
        """Test empty fields, unknown directions and progressive l = 0 terms."""
        with self.assertRaises(ParameterOutOfRange):
            self.service.standing_field([])
        with self.assertRaises(ParameterOutOfRange):
            ModeTerm.from_mode(self.mode, direction='z')
        spectrum = VerticalModeService().vertical_spectrum(self.profile, 1, shooting=False)
        vertical = ModeTerm.vertical(VerticalModeService().vertical_mode_function(spectrum, 1))
        with self.assertRaises(ParameterOutOfRange):
            self.service.progressive_field([vertical])


class DisplacementTest(ModeFixture):
    """
    Test cases for the displacement of standing and progressive fields.
    """

    def test_direct_formula(self):
        """Test a two-direction standing field against its defining sum at 20 points."""
        field = self.service.standing_field(self.terms[:2], epsilon=1e-2)
        rng = np.random.default_rng(5)
        t, x, y, z = (rng.uniform(0.0, 1.0, size=20) for _ in range(4))
        xi1, xi2, xi3 = field.displacement(t, x, y, z)
        first, second = self.terms[:2]
        clock1, clock2 = np.sin(first.frequency * t), np.sin(second.frequency * t)
        np.testing.assert_allclose(xi1, 1e-2 * first.u_at(z) * clock1 * np.sin(first.l * x), rtol=1e-13, atol=1e-17)
        np.testing.assert_allclose(xi2, 5e-3 * second.u_at(z) * clock2 * np.sin(second.l * y), rtol=1e-13, atol=1e-17)
        expected = (1e-2 * first.w_at(z) * clock1 * np.cos(first.l * x)
                    + 5e-3 * second.w_at(z) * clock2 * np.cos(second.l * y))
        np.testing.assert_allclose(xi3, expected, rtol=1e-13, atol=1e-17)

    def test_horizontal_periodicity(self):
        """Test xi(t, x + x_plus, y + y_plus, z) = xi(t, x, y, z)."""
        for kind in FieldKind:
            field = self.service.build_field(self.terms, kind, epsilon=1e-2)
            rng = np.random.default_rng(7)
            t, x, y, z = (rng.uniform(0.0, 1.0, size=30) for _ in range(4))
            for base, shifted in zip(field.displacement(t, x, y, z),
                                     field.displacement(t, x + field.x_plus, y + field.y_plus, z)):
                np.testing.assert_allclose(shifted, base, rtol=0.0, atol=1e-12)

    def test_time_periodicity(self):
        """Test that a single mode returns after one period and vanishes at a full period."""
        field = self.service.standing_field([self.term], epsilon=1e-2)
        x, z = np.linspace(0.0, 1.0, 7)[:, None], np.linspace(0.0, 1.0, 9)[None, :]
        t = 0.23 * self.term.period
        for now, later in zip(field.displacement(t, x, 0.0, z), field.displacement(t + self.term.period, x, 0.0, z)):
            np.testing.assert_allclose(later, now, rtol=0.0, atol=1e-10)
        for component in field.displacement(self.term.period, x, 0.0, z):
            self.assertLess(np.max(np.abs(component)), 1e-12)

    def test_ground(self):
        """Test xi3 = 0 on the ground z = 0."""
        field = self.service.standing_field(self.terms, epsilon=1e-2)
        x = np.linspace(0.0, 1.0, 11)
        xi3 = field.displacement(0.3, x, 0.4, 0.0)[2]
        scale = 1e-2 * max(np.max(np.abs(term.w)) for term in self.terms)
        self.assertLess(np.max(np.abs(xi3)), 1e-9 * scale)


class BoundaryMotionTest(ModeFixture):
    """
    Test cases for the motion of the vacuum boundary.
    """

    def setUp(self):
        self.field = self.service.standing_field([self.term], epsilon=1e-2)
        self.times = np.linspace(0.0, self.term.period, 9)
        self.xbar = np.linspace(0.0, 1.0, 64, endpoint=False)

    def linear_error(self, epsilon: float) -> float:
        surface = self.service.boundary_motion(self.field, self.times, self.xbar, epsilon=epsilon)
        linear = epsilon * np.sin(self.term.frequency * self.times)[:, None] * np.cos(self.term.l * self.xbar)[None, :]
        return float(np.max(np.abs(surface.elevation - linear)))

    def test_flat_at_zero_amplitude(self):
        """Test that epsilon = 0 leaves the boundary flat at z_plus."""
        surface = self.service.boundary_motion(self.field, self.times, self.xbar, epsilon=0.0)
        self.assertTrue(np.all(surface.zbar == surface.z_plus))
        np.testing.assert_array_equal(surface.x, np.broadcast_to(self.xbar, surface.x.shape))

    def test_quarter_period(self):
        """Test zbar - z_plus = epsilon at a quarter period above x = 0."""
        epsilon = 1e-3
        surface = self.service.boundary_motion(self.field, [0.25 * self.term.period], [0.0], epsilon=epsilon)
        self.assertAlmostEqual(float(surface.elevation[0, 0]), epsilon, delta=2.0 * epsilon ** 2)

    def test_labels_solve_the_map(self):
        """Test xbar = x + xi1(t, x, 0, z_plus) and zbar = z_plus + xi3 at the labels."""
        surface = self.service.boundary_motion(self.field, self.times, self.xbar)
        t = self.times[:, None]
        xi1, _, xi3 = self.field.displacement(t, surface.x, 0.0, surface.z_plus)
        np.testing.assert_allclose(surface.x + xi1, np.broadcast_to(self.xbar, surface.x.shape), rtol=0.0, atol=1e-12)
        np.testing.assert_allclose(surface.zbar, surface.z_plus + xi3, rtol=0.0, atol=1e-15)

    def test_second_order_deviation(self):
        """Test that the deviation from the linear elevation shrinks at order >= 1.9."""
        order = math.log2(self.linear_error(4e-3) / self.linear_error(2e-3))
        self.assertGreaterEqual(order, 1.9)

    def test_mean_elevation(self):
        """Test that a single standing mode keeps the period mean of the elevation at zero."""
        surface = self.service.boundary_motion(self.field, self.times, self.xbar)
        self.assertLess(np.max(np.abs(surface.mean_elevation())), 1e-12)

    def test_progressive_translation(self):
        """Test zbar(t, xbar) = zbar(0, xbar - c t) with c = sqrt(lambda)/l."""
        field = self.service.progressive_field([self.term], epsilon=1e-2)
        t = 0.37 * self.term.period
        shift = self.term.frequency / self.term.l * t
        later = self.service.boundary_motion(field, [t], self.xbar)
        start = self.service.boundary_motion(field, [0.0], self.xbar - shift)
        np.testing.assert_allclose(later.zbar, start.zbar, rtol=0.0, atol=1e-12)

    def test_non_invertible(self):
        """Test NonInvertibleMap once the boundary strain reaches 1/2."""
        epsilon = 0.6 / (self.term.l * abs(self.term.boundary_u))
        with self.assertRaises(NonInvertibleMap):
            self.service.boundary_motion(self.field, self.times, self.xbar, epsilon=epsilon)


class WaveResidualTest(ModeFixture):
    """
    Test cases for the residual of the linear wave equation.
    """

    def times(self, term: ModeTerm) -> np.ndarray:
        return np.array([0.11, 0.37, 0.8]) * term.period

    def test_single_mode(self):
        """Test a normalized residual below 1e-4 for an exact mode."""
        field = self.service.standing_field([self.term], epsilon=1e-2)
        self.assertLess(self.service.wave_residual(field, self.profile, self.times(self.term)), 1e-4)

    def test_progressive_mode(self):
        """Test a normalized residual below 1e-4 for a travelling mode."""
        field = self.service.progressive_field([self.term], epsilon=1e-2)
        self.assertLess(self.service.wave_residual(field, self.profile, self.times(self.term)), 1e-4)

    def test_detuned_frequency(self):
        """Test that a 1% frequency-squared error shows up as a residual near 0.01."""
        field = self.service.standing_field([self.term.with_lambda(1.01 * self.term.lam)], epsilon=1e-2)
        residual = self.service.wave_residual(field, self.profile, self.times(self.term))
        self.assertGreater(residual, 0.005)
        self.assertLess(residual, 0.02)

    def test_zero_field(self):
        """Test that the zero field has zero residual."""
        field = self.service.standing_field([self.term], epsilon=0.0)
        self.assertEqual(self.service.wave_residual(field, self.profile, self.times(self.term)), 0.0)

    def test_superposition(self):
        """Test that the residual of a sum is bounded by the summed single-mode residuals."""
        times = self.times(self.term)
        total = self.service.standing_field(self.terms, epsilon=1e-2)
        combined = self.service.wave_residual(total, self.profile, times, normalize=False)
        singles = sum(self.service.wave_residual(self.service.standing_field([term], epsilon=1e-2), self.profile,
                                                 times, normalize=False) for term in self.terms)
        self.assertLessEqual(combined, singles * (1.0 + 1e-9) + 1e-15)
        self.assertLess(self.service.wave_residual(total, self.profile, times), 1e-4)


class SynthesizeCommandTest(SimpleTestCase):
    """
    Test cases for the synthesize management command.
    """

    def write_modes(self, tmp: str, frame: pd.DataFrame) -> str:
        path = Path(tmp) / 'modes.csv'
        frame.to_csv(path, index=False, float_format='%.17g')
        return str(path)

    def test_surface_and_snapshots(self):
        """Test the boundary and snapshot tables of a one-mode standing field."""
        profile = isentropic_profile()
        spec = ModeSpec.harmonic(1)
        l_g = spec.l * profile.g
        root = float(DispersionService().scan_and_refine(profile, spec, (1.05 * l_g, 4.0 * l_g), 16).values[0])
        with tempfile.TemporaryDirectory() as tmp:
            modes = self.write_modes(tmp, pd.DataFrame(
                {'direction': ['x'], 'l': [spec.l], 'lambda': [root], 'amplitude': [1.0]}))
            out = StringIO()
            call_command('synthesize', modes=modes, nt=5, nx=8, nz=9, points=801, output_dir=tmp, stdout=out)
            surface = pd.read_csv(Path(tmp) / 'wavefield_surface.csv')
            snapshots = pd.read_csv(Path(tmp) / 'wavefield_snapshots.csv')
            self.assertEqual(list(surface.columns), ['t', 'x', 'xbar', 'zbar'])
            self.assertEqual(len(surface), 40)
            self.assertEqual(list(snapshots.columns), ['t', 'x', 'z', 'xi1', 'xi3'])
            self.assertEqual(len(snapshots), 360)
            self.assertLessEqual(float(np.max(np.abs(surface['zbar'] - 1.0))), 1e-2 * (1.0 + 1e-6))
            self.assertIn('terms=1', out.getvalue())

    def test_missing_column(self):
        """Test that a mode table without amplitudes is reported as a command error."""
        with tempfile.TemporaryDirectory() as tmp:
            modes = self.write_modes(tmp, pd.DataFrame({'direction': ['x'], 'l': [2.0 * math.pi], 'lambda': [10.0]}))
            with self.assertRaises(CommandError) as ctx:
                call_command('synthesize', modes=modes, output_dir=tmp, stdout=StringIO())
            self.assertIn('configuration_error', str(ctx.exception))
