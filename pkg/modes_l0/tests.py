from io import StringIO
from pathlib import Path
import tempfile

import numpy as np
import pandas as pd
from django.core.management import call_command
from django.test import SimpleTestCase

from common.exceptions import IndexOutOfRange, NotIsentropic
from equilibrium.laws import IsentropicLaw, LinearLaw
from equilibrium.profile import GasParameters
from equilibrium.services import EquilibriumService
from .services import VerticalModeService
from .spectrum import bessel_vertical_shape, bessel_zeros


class BesselClosedFormTest(SimpleTestCase):
    """
    Test cases for the closed-form isentropic oracle.
    """

    def test_spherical_bessel_zeros(self):
        """Test the order-5/2 zeros against the spherical Bessel j2 zeros."""
        np.testing.assert_allclose(bessel_zeros(2.5, 3), [5.763459, 9.095011, 12.322941], atol=1e-6)

    def test_integer_order(self):
        """Test the first zero of J0."""
        self.assertAlmostEqual(bessel_zeros(0.0, 1)[0], 2.404825557695773, places=12)


class VerticalSpectrumTest(SimpleTestCase):
    """
    Test cases for VerticalModeService.
    """

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        params = GasParameters(gamma=1.4, c_v=1.0, g=1.0)
        equilibria = EquilibriumService()
        cls.isentropic = equilibria.build_equilibrium(params, IsentropicLaw(), 1.0)
        cls.stable = equilibria.build_equilibrium(params, LinearLaw(beta=0.5), 1.0)
        cls.service = VerticalModeService()
        cls.isentropic_spectrum = cls.service.vertical_spectrum(cls.isentropic, 3)
        cls.stable_spectrum = cls.service.vertical_spectrum(cls.stable, 3)

    def test_isentropic_closed_form(self):
        """Test the first three eigenvalues against the Bessel closed form."""
        expected = self.service.bessel_vertical_eigenvalues(self.isentropic, 3)
        np.testing.assert_allclose(self.isentropic_spectrum.values, expected, rtol=1e-4)
        np.testing.assert_allclose(expected, [3.32171, 8.27190, 15.18449], rtol=1e-4)
        self.assertLess(self.service.closed_form_disagreement(self.isentropic_spectrum, self.isentropic), 1e-4)

    def test_methods_agree(self):
        """Test that the oracle and shooting agree on both profiles."""
        self.assertLess(self.isentropic_spectrum.disagreement, 1e-6)
        self.assertLess(self.stable_spectrum.disagreement, 1e-6)
        self.assertEqual(self.stable_spectrum.cross_validation()['methods'], ['fd', 'shooting'])

    def test_positive_and_increasing(self):
        """Test lambda_1 > 0 and strictly increasing eigenvalues."""
        for spectrum in (self.isentropic_spectrum, self.stable_spectrum):
            self.assertGreater(spectrum.values[0], 0.0)
            self.assertTrue(np.all(np.diff(spectrum.values) > 1e-10))

    def test_not_isentropic(self):
        """Test that the closed form refuses a stratified profile."""
        with self.assertRaises(NotIsentropic):
            self.service.bessel_vertical_eigenvalues(self.stable, 2)

    def test_mode_functions(self):
        """Test boundary values, zero counts and residuals of the mode functions."""
        first = self.service.vertical_mode_function(self.isentropic_spectrum, 1)
        second = self.service.vertical_mode_function(self.isentropic_spectrum, 2)
        self.assertEqual(first.w[0], 0.0)
        self.assertGreater(first.w[-1], 0.0)
        self.assertEqual(first.transformed[-1], 0.0)
        self.assertEqual(self.isentropic_spectrum.pairs[0].zeros, 0)
        self.assertEqual(self.isentropic_spectrum.pairs[1].zeros, 1)
        self.assertLess(first.residual, 1e-6)
        self.assertLess(second.residual, 1e-6)

    def test_mode_residual_detects_wrong_eigenvalue(self):
        """Test that the equation residual of w_1 grows to about 1% when lambda_1 is raised by 1%."""
        mode = self.service.vertical_mode_function(self.isentropic_spectrum, 1)
        shifted = self.service.ode_residual(self.isentropic_spectrum, mode.w, 1.01 * mode.value)
        self.assertAlmostEqual(shifted, 0.01 / 1.01, delta=1e-3)
        self.assertGreater(shifted, 1e3 * mode.residual)
        extrapolated = self.service.ode_residual(self.isentropic_spectrum, mode.w, mode.value)
        self.assertLess(extrapolated, 1e-3)

    def test_first_mode_shape(self):
        """Test the first isentropic mode against the Bessel shape at ten heights."""
        mode = self.service.vertical_mode_function(self.isentropic_spectrum, 1)
        z = np.linspace(0.05, 0.95, 10)
        computed = np.interp(z, mode.grid, mode.w) / np.interp(0.5, mode.grid, mode.w)
        exact = bessel_vertical_shape(self.isentropic, 1, z) / bessel_vertical_shape(self.isentropic, 1, 0.5)
        np.testing.assert_allclose(computed, exact, rtol=1e-3)

    def test_orthogonality(self):
        """Test that the lumped-mass Gram matrix is the identity."""
        gram = self.service.gram_matrix(self.stable_spectrum)
        np.testing.assert_allclose(gram, np.eye(3), atol=1e-8)

    def test_index_out_of_range(self):
        """Test IndexOutOfRange beyond the computed modes."""
        with self.assertRaises(IndexOutOfRange):
            self.service.vertical_mode_function(self.isentropic_spectrum, 4)
        with self.assertRaises(IndexOutOfRange):
            self.service.vertical_mode_function(self.isentropic_spectrum, 0)


class SpectrumL0CommandTest(SimpleTestCase):
    """
    Test cases for the spectrum_l0 management command.
    """

    def test_command_writes_tables(self):
        """Test the eigenpair, eigenfunction and closed-form exports."""
        with tempfile.TemporaryDirectory() as tmp:
            out = StringIO()
            call_command('spectrum_l0', n=2, closed_form=True, fd_only=True, output_dir=tmp, stdout=out)

            frame = pd.read_csv(Path(tmp) / 'spectrum_l0.csv')
            self.assertEqual(list(frame.columns), ['n', 'lambda', 'residual', 'zeros'])
            self.assertEqual(list(frame['zeros']), [0, 1])
            closed = pd.read_csv(Path(tmp) / 'spectrum_l0_closed_form.csv')
            np.testing.assert_allclose(frame['lambda'], closed['lambda'], rtol=1e-4)
            self.assertTrue((Path(tmp) / 'spectrum_l0_n1.csv').exists())
            self.assertIn('n=1', out.getvalue())
