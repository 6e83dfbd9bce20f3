from io import StringIO
from pathlib import Path
import math
import tempfile

import numpy as np
import pandas as pd
from django.core.management import call_command
from django.test import SimpleTestCase

from common.exceptions import NoSignChange, ParameterOutOfRange, PeriodMismatch, StabilityViolated
from equilibrium.laws import IsentropicLaw, LinearLaw
from equilibrium.profile import GasParameters
from equilibrium.services import EquilibriumService
from slcore.services import SturmLiouvilleService
from .problems import GroundCondition, ModeSpec, g_problem, p_problem
from .repositories import FixedPointRepository, SweepRepository
from .services import FixedPointService

DIRICHLET = GroundCondition.DIRICHLET


def reference_profiles():
    params = GasParameters(gamma=1.4, c_v=1.0, g=1.0)
    equilibria = EquilibriumService()
    return (equilibria.build_equilibrium(params, LinearLaw(beta=0.5), 1.0),
            equilibria.build_equilibrium(params, IsentropicLaw(), 1.0))


class ModeSpecTest(SimpleTestCase):
    """
    Test cases for the horizontal quantization of ModeSpec.
    """

    def test_harmonic(self):
        """Test that integer harmonics of the period are accepted."""
        spec = ModeSpec.harmonic(2, x_plus=0.5)
        self.assertAlmostEqual(spec.l, 8.0 * math.pi, places=12)

    def test_period_mismatch(self):
        """Test that a wavenumber incompatible with the period is rejected."""
        with self.assertRaises(PeriodMismatch):
            ModeSpec(l=3.0, x_plus=1.0)

    def test_nonpositive_wavenumber(self):
        """Test that l must be positive."""
        with self.assertRaises(ParameterOutOfRange):
            ModeSpec(l=0.0)


class WeightedSpectrumTest(SimpleTestCase):
    """
    Test cases for the g- and p-branch weighted spectra and parameter sweeps.
    """

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.stable, cls.isentropic = reference_profiles()
        cls.spec = ModeSpec.harmonic(1)
        cls.service = FixedPointService()
        cls.solver = SturmLiouvilleService()

    def test_g_spectrum_matches_oracle(self):
        """Test Lambda_n(0) against the finite-difference oracle of the same problem."""
        spectrum = self.service.g_weighted_spectrum(self.stable, self.spec, 0.0, 3)
        oracle = [pair.value for pair in self.solver.fd_eigensolve(g_problem(self.stable, self.spec, 0.0), 3)]
        np.testing.assert_allclose(spectrum.values, oracle, rtol=1e-5)
        self.assertGreater(spectrum.values[0], 0.0)
        self.assertTrue(np.all(np.diff(spectrum.values) > 0.0))
        self.assertEqual(spectrum.nonpositive, 0)

    def test_g_spectrum_requires_stability(self):
        """Test that the isentropic profile violates the stability hypothesis."""
        with self.assertRaises(StabilityViolated):
            self.service.g_weighted_spectrum(self.isentropic, self.spec, 0.0, 3)

    def test_g_parameter_range(self):
        """Test that lambda = l g is outside the g-branch range."""
        with self.assertRaises(ParameterOutOfRange):
            self.service.g_weighted_spectrum(self.stable, self.spec, self.spec.l * self.stable.g, 3)

    def test_g_spectrum_decreases_with_lambda(self):
        """Test Lambda_n(lambda0) <= Lambda_n(0)."""
        lambda0 = self.service.default_lambda0(self.stable, self.spec)
        at_zero = self.service.g_weighted_spectrum(self.stable, self.spec, 0.0, 3, DIRICHLET).values
        at_top = self.service.g_weighted_spectrum(self.stable, self.spec, lambda0, 3, DIRICHLET).values
        self.assertTrue(np.all(at_top <= at_zero))

    def test_p_spectrum_matches_oracle(self):
        """Test Lambda_n(0) of the p-branch against the oracle."""
        spectrum = self.service.p_weighted_spectrum(self.stable, self.spec, 0.0, 3)
        oracle = [pair.value for pair in self.solver.fd_eigensolve(p_problem(self.stable, self.spec, 0.0), 3)]
        np.testing.assert_allclose(spectrum.values, oracle, rtol=1e-5)

    def test_p_parameter_drops_out_without_buoyancy(self):
        """Test that mu has no effect on the isentropic profile."""
        first = self.service.p_weighted_spectrum(self.isentropic, self.spec, 0.0, 3, DIRICHLET).values
        second = self.service.p_weighted_spectrum(self.isentropic, self.spec, 0.01, 3, DIRICHLET).values
        np.testing.assert_allclose(first, second, rtol=1e-14)

    def test_p_parameter_range(self):
        """Test that mu = 1/(l g) is rejected."""
        with self.assertRaises(ParameterOutOfRange):
            self.service.p_weighted_spectrum(self.stable, self.spec, 1.0 / self.spec.l, 3)

    def test_g_sweep_nonincreasing(self):
        """Test that every Lambda_n is nonincreasing along a 32-point lambda grid."""
        lambda0 = self.service.default_lambda0(self.stable, self.spec)
        sweep = self.service.parameter_sweep(self.stable, self.spec, 'g', np.linspace(0.0, lambda0, 32), 3, DIRICHLET)
        self.assertEqual(sweep.spectra.shape, (32, 3))
        self.assertTrue(sweep.ordered)
        self.assertTrue(np.all(np.diff(sweep.spectra, axis=0) <= 1e-9 * np.abs(sweep.spectra[1:])))
        spacing = float(np.max(np.diff(sweep.parameter_grid)))
        self.assertLessEqual(sweep.max_jump(), 1.5 * sweep.lipschitz_estimate * spacing)

    def test_p_sweep_lipschitz_bound(self):
        """Test the p-branch Lipschitz estimate against max(l**2 c2 N2)."""
        mu0 = self.service.default_mu0(self.stable, self.spec)
        sweep = self.service.parameter_sweep(self.stable, self.spec, 'p', np.linspace(0.0, mu0, 8), 3, DIRICHLET)
        bound = self.service.lipschitz_bound(self.stable, self.spec)
        self.assertTrue(np.isfinite(sweep.lipschitz_estimate))
        self.assertLessEqual(sweep.lipschitz_estimate, 1.1 * bound)
        self.assertTrue(sweep.ordered)

    def test_single_point_sweep(self):
        """Test that a one-point grid degenerates to one spectrum."""
        sweep = self.service.parameter_sweep(self.stable, self.spec, 'g', [0.5], 2)
        self.assertEqual(sweep.spectra.shape, (1, 2))
        self.assertEqual(sweep.lipschitz_estimate, 0.0)

    def test_sweep_export(self):
        """Test the long-form sweep table."""
        sweep = self.service.parameter_sweep(self.stable, self.spec, 'g', [0.0, 0.5], 2)
        with tempfile.TemporaryDirectory() as tmp:
            service = FixedPointService(FixedPointRepository(tmp))
            service.export_sweep(sweep, 'g')
            frame = pd.read_csv(Path(tmp) / 'g_sweep.csv')
            self.assertEqual(list(frame.columns), SweepRepository.columns)
            self.assertEqual(list(frame['n']), [1, 2, 1, 2])


class FixedPointModesTest(SimpleTestCase):
    """
    Test cases for solve_gmodes and solve_pmodes.
    """

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.stable, cls.isentropic = reference_profiles()
        cls.spec = ModeSpec.harmonic(1)
        cls.service = FixedPointService()
        cls.lambda0 = cls.service.default_lambda0(cls.stable, cls.spec)
        cls.gmodes = cls.service.solve_gmodes(cls.stable, cls.spec, range(1, 9))
        cls.pmodes = cls.service.solve_pmodes(cls.stable, cls.spec, range(5, 13))

    def test_gmodes_certified(self):
        """Test eight certified g-modes below lambda0 with the Robin ground condition."""
        self.assertEqual(len(self.gmodes), 8)
        for result in self.gmodes:
            self.assertTrue(result.ok, result)
            self.assertLess(result.f_residual, result.tolerance)
            self.assertLessEqual(result.tolerance, 1e-4)
            self.assertGreater(result.lam, 0.0)
            self.assertLess(result.lam, self.lambda0)
            self.assertGreaterEqual(result.roots_found, 1)

    def test_gmodes_accumulate_at_zero(self):
        """Test that lambda_{-n} decreases with n."""
        values = np.array([result.lam for result in self.gmodes])
        self.assertTrue(np.all(np.diff(values) < 0.0))
        self.assertLessEqual(values[-1], 0.5 * values[0])

    def test_gmodes_match_dispersion_roots(self):
        """Test lambda_{-1}, lambda_{-2} and lambda_{-8} against the roots of the dispersion function."""
        values = [self.gmodes[0].lam, self.gmodes[1].lam, self.gmodes[7].lam]
        np.testing.assert_allclose(values, [0.0721867, 0.042665, 0.0057691], rtol=1e-4)

    def test_gmode_bound_decays(self):
        """Test that 1/Lambda_n(lambda0) falls by at least half from n = 1 to n = 8."""
        spectrum = self.service.g_weighted_spectrum(self.stable, self.spec, self.lambda0, 8)
        bounds = 1.0 / spectrum.values
        self.assertLessEqual(bounds[-1], 0.5 * bounds[0])

    def test_root_independent_of_scan_end(self):
        """Test that halving lambda0 leaves the first g-mode unchanged."""
        first = self.gmodes[0]
        halved = self.service.fixed_point('g', self.stable, self.spec, 1, 0.5 * self.lambda0, n_max=8)
        self.assertLess(first.lam, 0.5 * self.lambda0)
        self.assertAlmostEqual(halved.lam, first.lam, delta=max(first.tolerance, halved.tolerance) * first.lam)

    def test_no_sign_change(self):
        """Test NoSignChange when Lambda_n(lambda0) <= 1/lambda0."""
        with self.assertRaises(NoSignChange):
            self.service.fixed_point('g', self.stable, self.spec, 1, 1e-3)
        reported = self.service.solve_gmodes(self.stable, self.spec, [1], lambda0=1e-3)
        self.assertEqual(reported[0].status, 'no_sign_change')
        self.assertTrue(math.isnan(reported[0].lam))

    def test_pmodes_certified_and_growing(self):
        """Test certified, increasing p-modes above l g with quadratic growth."""
        self.assertEqual(len(self.pmodes), 8)
        values = np.array([result.lam for result in self.pmodes])
        for result in self.pmodes:
            self.assertTrue(result.ok, result)
            self.assertLess(result.f_residual, result.tolerance)
        self.assertTrue(np.all(np.diff(values) > 0.0))
        ratio = values[-1] / values[1]
        self.assertGreaterEqual(ratio, 3.0)
        self.assertLessEqual(ratio, 5.0)

    def test_branch_separation(self):
        """Test every g-mode < l g < every p-mode."""
        l_g = self.spec.l * self.stable.g
        self.assertLess(max(result.lam for result in self.gmodes), l_g)
        self.assertGreater(min(result.lam for result in self.pmodes), l_g)

    def test_isentropic_pmodes_exist(self):
        """Test that p-modes need no stratification."""
        results = self.service.solve_pmodes(self.isentropic, self.spec, [6])
        self.assertTrue(results[0].ok)
        self.assertGreater(results[0].lam, self.spec.l * self.isentropic.g)


class FixedPointCommandTest(SimpleTestCase):
    """
    Test cases for the gmodes and pmodes management commands.
    """

    def test_gmodes_command(self):
        """Test the g-mode table written for a stratified profile."""
        with tempfile.TemporaryDirectory() as tmp:
            call_command('equilibrium', output_dir=tmp, law='linear', beta=0.5, stdout=StringIO())
            out = StringIO()
            call_command('gmodes', profile=str(Path(tmp) / 'profile.json'), n_min=1, n_max=2,
                         output_dir=tmp, stdout=out)

            frame = pd.read_csv(Path(tmp) / 'gmodes.csv')
            self.assertEqual(list(frame.columns), FixedPointRepository.columns)
            self.assertEqual(list(frame['n']), [1, 2])
            self.assertTrue((frame['branch'] == 'g').all())
            self.assertTrue((frame['lambda'] < 2.0 * math.pi).all())
            self.assertIn('n=1 lambda=', out.getvalue())

    def test_pmodes_command(self):
        """Test the p-mode table for the default profile."""
        with tempfile.TemporaryDirectory() as tmp:
            call_command('pmodes', n_min=3, n_max=4, output_dir=tmp, stdout=StringIO())
            frame = pd.read_csv(Path(tmp) / 'pmodes.csv')
            self.assertTrue((frame['branch'] == 'p').all())
            self.assertTrue((frame['lambda'] > 2.0 * math.pi).all())
