from dataclasses import replace
from io import StringIO
from pathlib import Path
import tempfile

import numpy as np
import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase
from scipy.integrate import trapezoid

from common.exceptions import ConfigurationError, DomainError, EntropyConditionViolated, FitFailure, OutOfDomain
from .laws import IsentropicLaw, LinearLaw, TableLaw, law_from_descriptor
from .profile import EquilibriumProfile, GasParameters
from .repositories import ProfileRepository
from .serializers import EntropyLawSerializer, ProfileDescriptorSerializer
from .services import EquilibriumService


class BumpedProfile(EquilibriumProfile):
    """Profile whose density carries a +10% bump on [0.45, 0.55]."""

    def fields(self, z, check_domain=True):
        sample = super().fields(z, check_domain=check_domain)
        bump = np.where((np.asarray(z) >= 0.45) & (np.asarray(z) <= 0.55), 1.1, 1.0)
        return replace(sample, rho=np.asarray(sample.rho) * bump)


class EntropyLawTest(SimpleTestCase):
    """
    Test cases for the entropy laws.
    """

    def test_linear_law_integral(self):
        """Test the exp(Sigma/c_v) integral of the linear law against quadrature."""
        law = LinearLaw(beta=0.5)
        eta = np.linspace(0.0, 1.0, 20001)
        expected = trapezoid(np.exp(-0.5 * eta), eta)
        self.assertAlmostEqual(float(law.exp_integral(1.0, 1.0)), expected, delta=1e-8)

    def test_table_law_reproduces_linear_law(self):
        """Test that a tabulated linear law matches the analytic one."""
        eta = np.linspace(0.0, 2.0, 41)
        table = TableLaw(eta_points=eta, sigma_points=-0.5 * eta)
        linear = LinearLaw(beta=0.5)
        samples = np.array([0.01, 0.3, 1.7])

        np.testing.assert_allclose(table.sigma(samples), linear.sigma(samples), atol=1e-12)
        np.testing.assert_allclose(table.exp_integral(samples, 1.0), linear.exp_integral(samples, 1.0), rtol=1e-10)
        np.testing.assert_allclose(table.taylor(3)[:2], [0.0, -0.5], atol=1e-12)

    def test_table_law_rejects_decreasing_eta(self):
        """Test that a non-monotone eta column is rejected."""
        with self.assertRaises(ConfigurationError):
            TableLaw(eta_points=[0.0, 0.5, 0.4], sigma_points=[0.0, 0.0, 0.0])

    def test_law_from_descriptor(self):
        """Test rebuilding laws from their descriptors."""
        self.assertEqual(law_from_descriptor({'kind': 'linear', 'beta': 0.5}), LinearLaw(beta=0.5))
        self.assertTrue(law_from_descriptor({'kind': 'isentropic'}).is_isentropic)
        with self.assertRaises(ConfigurationError):
            law_from_descriptor({'kind': 'isothermal'})


class EquilibriumServiceTest(SimpleTestCase):
    """
    Test cases for EquilibriumService on the isentropic and stable reference profiles.
    """

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.service = EquilibriumService()
        cls.params = GasParameters(gamma=1.4, c_v=1.0, g=1.0)
        cls.isentropic = cls.service.build_equilibrium(cls.params, IsentropicLaw(), 1.0)
        cls.stable = cls.service.build_equilibrium(cls.params, LinearLaw(beta=0.5), 1.0)

    def test_isentropic_closed_form(self):
        """Test rho(0) = (2/7)**2.5 and c2(0) = 0.4 on the isentropic profile."""
        sample = self.service.eval_fields(self.isentropic, 0.0)
        self.assertAlmostEqual(sample.rho / (2.0 / 7.0) ** 2.5, 1.0, delta=1e-10)
        self.assertAlmostEqual(sample.c2, 0.4, delta=1e-12)

    def test_isentropic_density_everywhere(self):
        """Test rho(z) = ((gamma - 1) g (z_plus - z)/gamma)**nu on a grid."""
        z = np.linspace(0.0, 0.999, 200)
        expected = (0.4 * (1.0 - z) / 1.4) ** 2.5
        np.testing.assert_allclose(self.isentropic.density(z), expected, rtol=1e-11)

    def test_isentropic_buoyancy_vanishes(self):
        """Test that N2 and the Schwarzschild discriminant vanish for constant entropy."""
        z = np.linspace(0.0, 0.999, 500)
        sample = self.isentropic.fields(z)
        self.assertLessEqual(np.max(np.abs(sample.n2)), 1e-12)
        self.assertLessEqual(np.max(np.abs(sample.a_schwarz)), 1e-12)
        alternative = self.isentropic.n2_from_scale_height(sample)
        self.assertLessEqual(np.max(np.abs(alternative) * sample.c2), 1e-12)

    def test_stable_profile_is_stable(self):
        """Test N2 > 0 and dS/dz > 0 on the stable profile."""
        z = np.linspace(0.0, 0.999, 400)
        sample = self.stable.fields(z)
        self.assertTrue(np.all(sample.n2 > 0.0))
        slope = self.service.derivative(self.stable, lambda x: self.stable.fields(x, check_domain=False).s, z)
        self.assertTrue(np.all(slope > 0.0))

    def test_stable_n2_matches_entropy_gradient(self):
        """Test N2(0.5) = (g/(gamma c_v)) dS/dz within 1e-8 relative."""
        sample = self.service.eval_fields(self.stable, 0.5)
        slope = self.service.derivative(self.stable, lambda x: self.stable.fields(x, check_domain=False).s, 0.5)[0]
        expected = self.params.g / (self.params.gamma * self.params.c_v) * slope
        self.assertAlmostEqual(sample.n2 / expected, 1.0, delta=1e-8)

    def test_two_evaluations_of_n2_agree(self):
        """Test that N2 via the discriminant and via the scale height agree."""
        z = np.linspace(0.0, 0.995, 300)
        sample = self.stable.fields(z)
        alternative = self.stable.n2_from_scale_height(sample)
        np.testing.assert_allclose(alternative, sample.n2, rtol=1e-8)

    def test_scale_height_matches_log_density_slope(self):
        """Test 1/h_rho = -d(log rho)/dz."""
        z = np.array([0.1, 0.4, 0.8])
        sample = self.stable.fields(z)
        slope = self.service.derivative(self.stable, lambda x: np.log(self.stable.density(x)), z)
        np.testing.assert_allclose(1.0 / sample.h_rho, -slope, rtol=1e-7)

    def test_sound_speed_near_vacuum(self):
        """Test c2 nu/(g (z_plus - z)) stays within 1% of 1 in the last percent."""
        for profile in (self.isentropic, self.stable):
            z = np.linspace(0.99, 0.999999, 50)
            ratio = profile.fields(z).c2 * profile.nu / (profile.g * (profile.z_plus - z))
            self.assertTrue(np.all(np.abs(ratio - 1.0) <= 0.01))

    def test_vacuum_exponents(self):
        """Test the fitted vacuum exponent and amplitude."""
        for profile in (self.isentropic, self.stable):
            nu_fit, c_rho_fit = self.service.vacuum_exponents(profile)
            self.assertAlmostEqual(nu_fit, 2.5, delta=0.01)
            self.assertAlmostEqual(c_rho_fit / profile.c_rho, 1.0, delta=0.01)
        self.assertAlmostEqual(self.isentropic.c_rho / (1.0 / 3.5) ** 2.5, 1.0, delta=1e-6)

    def test_vacuum_fit_needs_near_vacuum_data(self):
        """Test FitFailure when only [0, z_plus/2] is available."""
        with self.assertRaises(FitFailure):
            self.service.vacuum_exponents(self.isentropic, z_max=0.5)

    def test_check_admissible(self):
        """Test that both reference profiles are admissible."""
        for profile in (self.isentropic, self.stable):
            report = self.service.check_admissible(profile)
            self.assertTrue(report.passed, [check for check in report.checks if not check.passed])
            self.assertLess(report.check('hydrostatic').value, 1e-10)

    def test_check_admissible_detects_bump(self):
        """Test that a density bump mid-domain fails the monotonicity check."""
        bumped = BumpedProfile(
            params=self.isentropic.params, law=self.isentropic.law, z_plus=1.0,
            eta_base=self.isentropic.eta_base, c_rho=self.isentropic.c_rho,
        )
        report = self.service.check_admissible(bumped)
        self.assertFalse(report.passed)
        self.assertFalse(report.check('monotonicity').passed)

    def test_check_admissible_field_consistency(self):
        """Test the two evaluations of N2 and the scale height against the log-density slope."""
        report = self.service.check_admissible(self.stable)
        self.assertTrue(report.check('n2_consistency').passed)
        self.assertLess(report.check('n2_consistency').value, 1e-8)
        self.assertLess(report.check('scale_height').value, 1e-6)
        self.assertEqual(self.service.check_admissible(self.isentropic).check('n2_consistency').value, 0.0)

    def test_derivative_step(self):
        """Test central and one-sided differences of a cubic with the default step."""
        z = np.array([0.2, 0.5, 1.0 - 5e-6])
        slope = self.service.derivative(self.isentropic, lambda x: x ** 3, z)
        np.testing.assert_allclose(slope, 3.0 * z ** 2, rtol=1e-8)

    def test_check_tabulated(self):
        """Test that the exported table of a built profile passes the tabulated checks."""
        table = self.service.profile_table(self.isentropic)
        report = self.service.check_tabulated(table['z'], table['rho'], table['p'], self.params.g)
        self.assertTrue(report.passed, report.checks)
        self.assertEqual([check.name for check in report.checks], ['positivity', 'monotonicity', 'hydrostatic'])
        self.assertLess(report.check('hydrostatic').value, 1e-4)

    def test_check_tabulated_detects_bump(self):
        """Test that a +10% density bump mid-domain fails monotonicity but not positivity."""
        table = self.service.profile_table(self.isentropic)
        z = table['z']
        rho = np.where((z >= 0.45) & (z <= 0.55), 1.1, 1.0) * table['rho']
        report = self.service.check_tabulated(z, rho, table['p'], self.params.g)
        self.assertFalse(report.passed)
        self.assertTrue(report.check('positivity').passed)
        self.assertFalse(report.check('monotonicity').passed)
        self.assertGreater(report.check('monotonicity').value, 0.0)

    def test_check_tabulated_rejects_malformed_columns(self):
        """Test DomainError for decreasing heights and mismatched lengths."""
        with self.assertRaises(DomainError):
            self.service.check_tabulated([0.0, 0.5, 0.4], [3.0, 2.0, 1.0], [3.0, 2.0, 1.0])
        with self.assertRaises(DomainError):
            self.service.check_tabulated([0.0, 0.5, 0.6], [3.0, 2.0], [3.0, 2.0, 1.0])

    def test_out_of_domain(self):
        """Test OutOfDomain below the ground and at the vacuum height."""
        with self.assertRaises(OutOfDomain):
            self.service.eval_fields(self.isentropic, -0.1)
        with self.assertRaises(OutOfDomain):
            self.service.eval_fields(self.isentropic, 1.0)

    def test_entropy_condition_violated(self):
        """Test that a steeply decreasing entropy law is rejected."""
        with self.assertRaises(EntropyConditionViolated):
            self.service.build_equilibrium(self.params, LinearLaw(beta=100.0), 1.0)

    def test_table_law_profile_matches_linear_profile(self):
        """Test that a tabulated linear law gives the same profile."""
        eta = np.linspace(0.0, 2.0, 41)
        profile = self.service.build_equilibrium(self.params, TableLaw(eta_points=eta, sigma_points=-0.5 * eta), 1.0)
        z = np.array([0.0, 0.5, 0.9])
        np.testing.assert_allclose(profile.density(z), self.stable.density(z), rtol=1e-8)

    def test_fingerprint_depends_on_law(self):
        """Test that different laws give different fingerprints."""
        self.assertNotEqual(self.isentropic.fingerprint, self.stable.fingerprint)
        rebuilt = self.service.profile_from_descriptor(self.stable.describe())
        self.assertEqual(rebuilt.fingerprint, self.stable.fingerprint)


class ProfileSerializerTest(SimpleTestCase):
    """
    Test cases for the profile descriptor serializers.
    """

    def test_defaults(self):
        """Test that an empty descriptor validates to the isentropic defaults."""
        serializer = ProfileDescriptorSerializer(data={})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        descriptor = serializer.to_descriptor()
        self.assertEqual(descriptor['gas'], {'gamma': 1.4, 'c_v': 1.0, 'g': 1.0})
        self.assertEqual(descriptor['law']['kind'], 'isentropic')
        self.assertEqual(descriptor['z_plus'], 1.0)

    def test_rejects_negative_gravity(self):
        """Test that a negative g is reported on the gas field."""
        serializer = ProfileDescriptorSerializer(data={'gas': {'g': -1.0}})
        self.assertFalse(serializer.is_valid())
        self.assertIn('g', serializer.errors['gas'])

    def test_linear_law_needs_beta(self):
        """Test that the linear law requires beta."""
        serializer = EntropyLawSerializer(data={'kind': 'linear'})
        self.assertFalse(serializer.is_valid())
        self.assertIn('beta', serializer.errors)

    def test_table_law_from_file(self):
        """Test reading a table law from a two-column CSV."""
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'law.csv'
            pd.DataFrame({'eta': [0.0, 1.0, 2.0], 'sigma': [0.0, -0.5, -1.0]}).to_csv(path, index=False)
            serializer = EntropyLawSerializer(data={'kind': 'table', 'table_file': str(path)})
            self.assertTrue(serializer.is_valid(), serializer.errors)
            self.assertEqual(serializer.to_descriptor()['table'][1], [1.0, -0.5])


class EquilibriumCommandTest(SimpleTestCase):
    """
    Test cases for the equilibrium management command.
    """

    def test_command_writes_profile(self):
        """Test that the command writes the profile table and descriptor."""
        with tempfile.TemporaryDirectory() as tmp:
            out = StringIO()
            call_command('equilibrium', output_dir=tmp, points=101, stdout=out)

            frame = pd.read_csv(Path(tmp) / 'profile.csv')
            self.assertEqual(list(frame.columns), ProfileRepository.columns)
            self.assertEqual(len(frame), 100)
            self.assertIn('hydrostatic: pass', out.getvalue())

            profile = EquilibriumService(ProfileRepository(tmp)).load_profile(str(Path(tmp) / 'profile.json'))
            self.assertAlmostEqual(profile.fields(0.0).c2, 0.4, delta=1e-12)

    def test_command_linear_law(self):
        """Test the command with a linear entropy law."""
        with tempfile.TemporaryDirectory() as tmp:
            call_command('equilibrium', output_dir=tmp, law='linear', beta=0.5, stdout=StringIO())
            frame = pd.read_csv(Path(tmp) / 'profile.csv')
            self.assertTrue(np.all(frame['n2'] > 0.0))

    def test_command_rejects_bad_gamma(self):
        """Test that an invalid gamma is reported as a command error."""
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError) as ctx:
                call_command('equilibrium', output_dir=tmp, gamma=2.5, stdout=StringIO())
            self.assertIn('config_invalid', str(ctx.exception))

    def test_command_checks_table(self):
        """Test certification of an exported table and of a table with a density bump."""
        with tempfile.TemporaryDirectory() as tmp:
            call_command('equilibrium', output_dir=tmp, stdout=StringIO())
            path = Path(tmp) / 'profile.csv'
            out = StringIO()
            call_command('equilibrium', check_table=str(path), stdout=out)
            self.assertIn('monotonicity: pass', out.getvalue())
            self.assertIn('hydrostatic: pass', out.getvalue())

            frame = pd.read_csv(path)
            frame.loc[(frame['z'] >= 0.45) & (frame['z'] <= 0.55), 'rho'] *= 1.1
            frame[['z', 'rho', 'p']].to_csv(Path(tmp) / 'bumped.csv', index=False)
            out = StringIO()
            call_command('equilibrium', check_table=str(Path(tmp) / 'bumped.csv'), stdout=out)
            self.assertIn('monotonicity: fail', out.getvalue())

    def test_command_table_missing_column(self):
        """Test that a table without a pressure column is a configuration error."""
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'partial.csv'
            pd.DataFrame({'z': [0.0, 0.5, 0.9], 'rho': [3.0, 2.0, 1.0]}).to_csv(path, index=False)
            with self.assertRaises(CommandError) as ctx:
                call_command('equilibrium', check_table=str(path), stdout=StringIO())
            self.assertEqual(ctx.exception.returncode, 2)
