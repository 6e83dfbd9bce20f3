from io import StringIO
from pathlib import Path
import tempfile

import numpy as np
import pandas as pd
from django.core.management import call_command
from django.test import SimpleTestCase
from scipy.interpolate import CubicSpline, make_interp_spline

from common.exceptions import (
    DomainError, GlueMismatch, GridTooCoarse, NearEigenvalue, NotIsentropic, OutOfDomain, SkipPoint, ZeroLambda,
)
from common.utils import fit_power_law
from equilibrium.laws import IsentropicLaw, LinearLaw
from equilibrium.profile import GasParameters
from equilibrium.services import EquilibriumService
from modes_fixedpoint.problems import ModeSpec
from modes_fixedpoint.services import FixedPointService
from .operator import Bump, operator_residual
from .repositories import DispersionRepository, ModeFunctionRepository
from .series import frobenius_series
from .services import DispersionService

SPEC = ModeSpec.harmonic(1)


def reference_profiles(gamma: float = 1.4):
    params = GasParameters(gamma=gamma, c_v=1.0, g=1.0)
    equilibria = EquilibriumService()
    return (equilibria.build_equilibrium(params, LinearLaw(beta=0.5), 1.0),
            equilibria.build_equilibrium(params, IsentropicLaw(), 1.0))


def smooth_field(grid: np.ndarray, rng: np.random.Generator, terms: int = 3):
    k = np.arange(1, terms + 1)[:, None] * np.pi * grid[None, :]
    return rng.normal(size=terms) @ np.cos(k), rng.normal(size=terms) @ np.sin(k)


class FirstOrderSystemTest(SimpleTestCase):
    """
    Test cases for the coefficients and the turning point of the first-order system.
    """

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.stable, cls.isentropic = reference_profiles()
        cls.service = DispersionService()

    def test_trace_free(self):
        """Test A11 + A22 = 0 at random heights and parameters."""
        rng = np.random.default_rng(3)
        for lam in rng.uniform(0.05, 40.0, size=10):
            system = self.service.assemble_system(self.stable, SPEC, float(lam))
            a11, _, _, a22 = system.coefficients(rng.uniform(0.0, 0.999, size=10))
            self.assertTrue(np.all(np.abs(a11 + a22) <= 1e-14 * np.abs(a11)))

    def test_a21_vanishes_at_l_g(self):
        """Test that A21 vanishes identically at lambda = l g."""
        system = self.service.assemble_system(self.stable, SPEC, SPEC.l * self.stable.g)
        a21 = system.coefficients(np.linspace(0.0, 0.9, 10))[2]
        np.testing.assert_allclose(a21, 0.0, atol=1e-12)

    def test_isentropic_a12_identity(self):
        """Test A12 c2 rho = Q on the isentropic profile."""
        system = self.service.assemble_system(self.isentropic, SPEC, 3.0)
        z = np.linspace(0.05, 0.95, 7)
        sample = self.isentropic.fields(z)
        a12 = system.coefficients(z)[1]
        np.testing.assert_allclose(a12 * sample.c2 * sample.rho, system.turning_factor(z), rtol=1e-12, atol=1e-12)

    def test_zero_lambda(self):
        """Test that lambda = 0 is rejected."""
        with self.assertRaises(ZeroLambda):
            self.service.assemble_system(self.stable, SPEC, 0.0)

    def test_isentropic_turning_point_closed_form(self):
        """Test z(lambda) = z_plus - nu lambda/(g l**2) on the isentropic profile."""
        profile = self.isentropic
        for lam in (0.5, 2.0, 10.0):
            expected = profile.z_plus - profile.nu * lam / (profile.g * SPEC.l ** 2)
            self.assertAlmostEqual(self.service.turning_point(profile, SPEC, lam), expected, delta=1e-10)

    def test_turning_point_splits_the_column(self):
        """Test Q < 0 below and Q > 0 above the turning point of a small lambda."""
        system = self.service.assemble_system(self.stable, SPEC, 0.5)
        z_t = self.service.turning_point(self.stable, SPEC, 0.5)
        self.assertTrue(0.0 < z_t < self.stable.z_plus)
        self.assertTrue(np.all(system.turning_factor(np.linspace(0.0, z_t, 20)[:-1]) < 0.0))
        self.assertTrue(np.all(system.turning_factor(np.linspace(z_t, 0.999, 20)[1:]) > 0.0))

    def test_no_turning_point_for_large_lambda(self):
        """Test None when lambda >= l**2 c2(0)."""
        bottom = float(self.stable.fields(0.0).c2)
        self.assertIsNone(self.service.turning_point(self.stable, SPEC, 1.01 * SPEC.l ** 2 * bottom))


class FrobeniusSeriesTest(SimpleTestCase):
    """
    Test cases for the Frobenius fundamental matrix at the vacuum boundary.
    """

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.stable, cls.isentropic = reference_profiles()
        cls.service = DispersionService()
        cls.series = cls.service.frobenius_series(cls.stable, SPEC, 2.0)

    def test_regular_solution_starts_at_one(self):
        """Test w of phi_S1 equals 1 within 1e-5 at s = 1e-6."""
        self.assertAlmostEqual(float(self.series.first(1e-6)[0, 0]), 1.0, delta=1e-5)

    def test_regular_solution_eta_order(self):
        """Test eta of phi_S1 decays like s**(nu + 1)."""
        s = np.geomspace(1e-6, 1e-4, 12)
        slope, _ = fit_power_law(s, self.series.state(s)[:, 1])
        self.assertAlmostEqual(slope, self.stable.nu + 1.0, delta=0.01 * (self.stable.nu + 1.0))

    def test_singular_solution_slope(self):
        """Test w of phi_S2 grows like s**-nu."""
        s = np.geomspace(1e-6, 1e-4, 12)
        slope, _ = fit_power_law(s, self.series.second(s)[:, 0])
        self.assertAlmostEqual(slope, -self.stable.nu, delta=0.01 * self.stable.nu)

    def test_truncation_orders_agree(self):
        """Test that orders 8 and 4 share P_1..P_4 and differ by the s**5 tail at s0 = 1e-3."""
        low = self.service.frobenius_series(self.stable, SPEC, 2.0, order=4)
        np.testing.assert_allclose(low.p_matrices[1:], self.series.p_matrices[1:5], rtol=1e-10, atol=1e-12)
        s0 = 1e-3
        difference = np.max(np.abs(self.series.first(s0) - low.first(s0)))
        tail = sum(np.max(np.abs(self.series.p_matrices[m])) * s0 ** m for m in range(5, 9))
        self.assertLessEqual(difference, 2.0 * np.max(np.abs(self.series.transform)) * tail + 1e-15)

    def test_residual_order(self):
        """Test the truncation residual slope of at least K - 0.5."""
        s = np.geomspace(1e-6, 1e-3, 16)
        slope, _ = fit_power_law(s, self.series.residual(s))
        self.assertGreaterEqual(slope, self.series.order - 0.5)

    def test_integer_nu_regular_column(self):
        """Test that an integer nu leaves the regular solution intact."""
        profile = reference_profiles(gamma=1.5)[1]
        series = frobenius_series(profile, SPEC.l, 2.0, 8, 1e-6, require_second=False)
        self.assertAlmostEqual(profile.nu, 2.0)
        self.assertAlmostEqual(float(series.first(1e-6)[0, 0]), 1.0, delta=1e-5)


class DispersionScanTest(SimpleTestCase):
    """
    Test cases for the dispersion function, its roots and the cross-check
    against the fixed-point eigenvalues.
    """

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.stable, cls.isentropic = reference_profiles()
        cls.service = DispersionService()
        fixed_point = FixedPointService()
        cls.gmodes = np.sort([r.lam for r in fixed_point.solve_gmodes(cls.stable, SPEC, range(1, 9))])
        cls.pmodes = np.sort([r.lam for r in fixed_point.solve_pmodes(cls.stable, SPEC, range(5, 13))])
        l_g = SPEC.l * cls.stable.g
        cls.g_scan = cls.service.scan_and_refine(cls.stable, SPEC, (0.95 * cls.gmodes[0], 0.9 * l_g), 128)
        cls.p_scan = cls.service.scan_and_refine(cls.stable, SPEC, (0.97 * cls.pmodes[0], 1.03 * cls.pmodes[-1]), 96)

    def test_integrate_regular_start(self):
        """Test that the regular solution starts at (w, eta) = (0, 1)."""
        system = self.service.assemble_system(self.stable, SPEC, 2.0)
        np.testing.assert_array_equal(self.service.integrate_regular(system, 0.0), [0.0, 1.0])

    def test_integrate_regular_linearity(self):
        """Test that doubling the initial eta doubles the state."""
        system = self.service.assemble_system(self.stable, SPEC, 2.0)
        single = self.service.integrate_regular(system, 0.6)
        double = self.service.integrate_regular(system, 0.6, initial=(0.0, 2.0))
        np.testing.assert_allclose(double, 2.0 * single, rtol=1e-8)

    def test_integrate_regular_reversal(self):
        """Test that integrating back to the ground recovers (0, 1)."""
        system = self.service.assemble_system(self.stable, SPEC, 2.0)
        state = self.service.integrate_regular(system, 0.6)
        back = system.propagate(state, 0.6, 0.0)
        np.testing.assert_allclose(back, [0.0, 1.0], atol=1e-8)

    def test_integrate_regular_domain(self):
        """Test that z_to = z_plus is outside the regular integration."""
        system = self.service.assemble_system(self.stable, SPEC, 2.0)
        with self.assertRaises(OutOfDomain):
            self.service.integrate_regular(system, self.stable.z_plus)

    def test_fixed_point_mode_is_a_root(self):
        """Test |D| is small at a fixed-point g-mode compared with nearby values."""
        lam = float(self.gmodes[-1])
        at_root = abs(self.service.dispersion_value(self.stable, SPEC, lam))
        nearby = max(abs(self.service.dispersion_value(self.stable, SPEC, lam * factor)) for factor in (0.999, 1.001))
        self.assertLess(at_root, 1e-2 * nearby)

    def test_gmodes_cross_check(self):
        """Test that the g-branch roots and the fixed-point g-modes coincide."""
        roots = np.sort(self.g_scan.values)
        self.assertEqual(len(roots), len(self.gmodes))
        np.testing.assert_allclose(roots, self.gmodes, rtol=1e-5)

    def test_pmodes_cross_check(self):
        """Test that the p-branch roots and the fixed-point p-modes coincide."""
        roots = np.sort(self.p_scan.values)
        self.assertEqual(len(roots), len(self.pmodes))
        np.testing.assert_allclose(roots, self.pmodes, rtol=1e-5)

    def test_roots_are_simple_and_bracketed(self):
        """Test that every root is simple, isolated and bracketed by a sign change."""
        for scan in (self.g_scan, self.p_scan):
            values = scan.values
            self.assertTrue(np.all(np.diff(values) > 1e-10 * values[1:]))
            for root in scan.roots:
                self.assertTrue(root.simple, root)
                left, right = root.bracket
                self.assertTrue(left <= root.lam <= right)
                i = int(np.searchsorted(scan.lambda_grid, left))
                self.assertLessEqual(scan.d_values[i] * scan.d_values[i + 1], 0.0)

    def test_matching_point_independence(self):
        """Test that roots refined at z_plus/3 and 2 z_plus/3 agree within 1e-9."""
        for root in (self.g_scan.roots[0], self.p_scan.roots[0]):
            for z_m in (self.stable.z_plus / 3.0, 2.0 * self.stable.z_plus / 3.0):
                moved = self.service.refine_root(self.stable, SPEC, root.bracket, z_m)
                self.assertAlmostEqual(moved, root.lam, delta=1e-9 * root.lam)

    def test_isentropic_g_branch_is_empty(self):
        """Test that the isentropic profile has no roots below l g."""
        l_g = SPEC.l * self.isentropic.g
        scan = self.service.scan_and_refine(self.isentropic, SPEC, (0.01 * l_g, 0.9 * l_g), 32)
        self.assertEqual(scan.roots, [])
        self.assertTrue(np.all(np.isfinite(scan.d_values)))

    def test_skip_window(self):
        """Test SkipPoint at lambda = l g and its annotation in scans."""
        l_g = SPEC.l * self.isentropic.g
        with self.assertRaises(SkipPoint):
            self.service.dispersion_value(self.isentropic, SPEC, l_g)
        scan = self.service.scan_and_refine(self.isentropic, SPEC, (0.5 * l_g, 2.0 * l_g), 17)
        self.assertGreaterEqual(len(scan.skipped), 1)
        self.assertAlmostEqual(scan.skipped[0].lam, l_g, delta=1e-6 * l_g)
        self.assertTrue(np.isnan(scan.d_values[8]))

    def test_scan_arguments(self):
        """Test the scan range and size preconditions."""
        with self.assertRaises(DomainError):
            self.service.scan_and_refine(self.stable, SPEC, (0.1, 1.0), 8)
        with self.assertRaises(DomainError):
            self.service.scan_and_refine(self.stable, SPEC, (0.0, 1.0), 16)
        with self.assertRaises(ZeroLambda):
            self.service.dispersion_value(self.stable, SPEC, 0.0)

    def test_captured_norm_fractions(self):
        """Test that projections on the first 15 modes capture a nondecreasing share."""
        roots = list(self.g_scan.values) + list(self.p_scan.values)
        modes = [self.service.reconstruct_eigenfunction(self.stable, SPEC, lam, points=1201) for lam in roots[:15]]
        grid = modes[0].grid
        weight = self.stable.eta_at(grid, check_domain=False) ** self.stable.nu
        field = smooth_field(grid, np.random.default_rng(11))
        fractions = self.service.captured_norm_fractions(grid, weight, field, [(m.u, m.w) for m in modes])
        self.assertEqual(len(fractions), 15)
        self.assertTrue(np.all(np.diff(fractions) >= 0.0))
        self.assertGreaterEqual(fractions[0], 0.0)
        self.assertLessEqual(fractions[-1], 1.0 + 1e-12)

    def test_export_scan(self):
        """Test the lambda,D table."""
        with tempfile.TemporaryDirectory() as tmp:
            service = DispersionService(DispersionRepository(tmp))
            service.export_scan(self.g_scan, 'g')
            frame = pd.read_csv(Path(tmp) / 'g.csv')
            self.assertEqual(list(frame.columns), DispersionRepository.columns)
            self.assertEqual(len(frame), 128)


class ModeFunctionTest(SimpleTestCase):
    """
    Test cases for reconstruct_eigenfunction on the first g-mode of the stable profile.
    """

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.stable, _ = reference_profiles()
        cls.service = DispersionService()
        first = FixedPointService().solve_gmodes(cls.stable, SPEC, [1])[0].lam
        cls.lam = cls.service.refine_root(cls.stable, SPEC, (first * (1.0 - 1e-3), first * (1.0 + 1e-3)))
        cls.mode = cls.service.reconstruct_eigenfunction(cls.stable, SPEC, cls.lam)
        cls.depth = cls.stable.z_plus - cls.mode.grid

    def test_normalization_and_ground(self):
        """Test alpha = w(z_plus) = 1 and w(0) = 0."""
        self.assertEqual(self.mode.alpha, 1.0)
        self.assertAlmostEqual(float(self.mode.w[-1]), 1.0, delta=1e-12)
        self.assertAlmostEqual(float(self.mode.w[0]), 0.0, delta=1e-10)
        self.assertEqual(self.mode.grid[0], 0.0)
        self.assertEqual(self.mode.grid[-1], self.stable.z_plus)

    def test_first_gmode_has_no_interior_zero(self):
        """Test that w of the first g-mode keeps its sign."""
        self.assertEqual(self.mode.zeros, 0)

    def test_eta_vacuum_exponent(self):
        """Test the fitted exponent of eta near z_plus within 5% of nu + 1."""
        near = (self.depth >= 1e-5) & (self.depth <= 1e-3)
        slope, _ = fit_power_law(self.depth[near], self.mode.eta[near])
        expected = self.stable.nu + 1.0
        self.assertAlmostEqual(slope, expected, delta=0.05 * expected)

    def test_operator_residual(self):
        """Test ||(L - lambda)(u, w)|| / ||(u, w)|| < 1e-5."""
        self.assertLess(self.service.mode_residual(self.stable, self.mode), 1e-5)

    def test_u_trace(self):
        """Test that u extrapolates to the closed-form trace -l g/lambda."""
        expected = -SPEC.l * self.stable.g / self.lam
        self.assertAlmostEqual(self.mode.u_trace, expected, delta=1e-12 * abs(expected))
        near = (self.depth > 1e-4) & (self.depth < 1e-2)
        extrapolated = np.polyval(np.polyfit(self.depth[near], self.mode.u[near], 3), 0.0)
        self.assertAlmostEqual(extrapolated, expected, delta=1e-4 * abs(expected))

    def test_u_recovery(self):
        """Test u = -(1/l)(eta/(c2 rho) + w') away from the boundary."""
        inside = self.mode.grid < 0.99 * self.stable.z_plus
        grid = self.mode.grid[inside]
        sample = self.stable.fields(grid)
        dw = make_interp_spline(self.mode.grid, self.mode.w, k=5)(grid, 1)
        recovered = -(self.mode.eta[inside] / (sample.c2 * sample.rho) + dw) / SPEC.l
        scale = np.max(np.abs(self.mode.u))
        np.testing.assert_allclose(recovered, self.mode.u[inside], atol=1e-6 * scale)

    def test_glue_mismatch_off_the_spectrum(self):
        """Test GlueMismatch when lambda is not an eigenvalue."""
        with self.assertRaises(GlueMismatch):
            self.service.reconstruct_eigenfunction(self.stable, SPEC, 1.01 * self.lam, points=401)

    def test_export_mode(self):
        """Test the z,u,w,eta table."""
        with tempfile.TemporaryDirectory() as tmp:
            service = DispersionService(DispersionRepository(tmp))
            service.export_mode(self.mode, 'g1')
            frame = pd.read_csv(Path(tmp) / 'g1.csv')
            self.assertEqual(list(frame.columns), ModeFunctionRepository.columns)
            self.assertEqual(len(frame), len(self.mode.grid))


class OperatorTest(SimpleTestCase):
    """
    Test cases for apply_operator and the isentropic kernel family.
    """

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.stable, cls.isentropic = reference_profiles()
        cls.service = DispersionService()
        cls.grid = cls.service.operator_grid(cls.isentropic)

    def test_zero_field(self):
        """Test that (0, 0) maps to (0, 0)."""
        grid = np.linspace(0.0, 1.0, 41)
        lu, lw = self.service.apply_operator(self.stable, SPEC, grid, np.zeros(41), np.zeros(41))
        np.testing.assert_array_equal(lu, 0.0)
        np.testing.assert_array_equal(lw, 0.0)

    def test_grid_too_coarse(self):
        """Test GridTooCoarse for short and non-increasing grids."""
        with self.assertRaises(GridTooCoarse):
            self.service.apply_operator(self.stable, SPEC, np.linspace(0.0, 1.0, 5), np.zeros(5), np.zeros(5))
        grid = np.linspace(0.0, 1.0, 40)[::-1]
        with self.assertRaises(GridTooCoarse):
            self.service.apply_operator(self.stable, SPEC, grid, np.zeros(40), np.zeros(40))

    def test_kernel_family(self):
        """Test ||L(u, w)|| / ||(u, w)|| < 1e-6 for five random bumps."""
        rng = np.random.default_rng(5)
        for _ in range(5):
            bump = Bump(center=rng.uniform(0.4, 0.6), half_width=rng.uniform(0.15, 0.3), amplitude=rng.uniform(0.5, 2.0))
            u, w = self.service.kernel_family_isentropic(self.isentropic, SPEC, bump)
            self.assertLess(operator_residual(self.isentropic, SPEC.l, self.grid, u, w, 0.0), 1e-6)

    def test_kernel_requires_isentropic(self):
        """Test NotIsentropic on the stable profile."""
        with self.assertRaises(NotIsentropic):
            self.service.kernel_family_isentropic(self.stable, SPEC, Bump(0.5, 0.2))

    def test_kernel_support(self):
        """Test that the bump must be supported inside (0, z_plus)."""
        with self.assertRaises(OutOfDomain):
            self.service.kernel_family_isentropic(self.isentropic, SPEC, Bump(0.9, 0.2))

    def test_zero_bump(self):
        """Test that Upsilon = 0 gives (0, 0)."""
        u, w = self.service.kernel_family_isentropic(self.isentropic, SPEC, Bump(0.5, 0.2, amplitude=0.0))
        self.assertFalse(np.any(u))
        self.assertFalse(np.any(w))


class ResolventTest(SimpleTestCase):
    """
    Test cases for resolvent_solve on the isentropic profile.
    """

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        _, cls.profile = reference_profiles()
        cls.service = DispersionService()
        l_g = SPEC.l * cls.profile.g
        scan = cls.service.scan_and_refine(cls.profile, SPEC, (1.05 * l_g, 4.0 * l_g), 32)
        cls.root = float(scan.values[0])
        cls.mode = cls.service.reconstruct_eigenfunction(cls.profile, SPEC, cls.root)
        cls.resolvents = {lam: cls.service.resolvent(cls.profile, SPEC, lam, [cls.root])
                          for lam in (0.5, 1.0, 2.0, 3.0, 4.0)}

    def test_zero_forcing(self):
        """Test that zero forcing gives the zero solution."""
        problem = self.resolvents[2.0].solve(0.0, 0.0)
        self.assertFalse(np.any(problem.solution.u))
        self.assertFalse(np.any(problem.solution.w))
        self.assertEqual(problem.bound, 0.0)

    def test_random_forcings(self):
        """Test ||(L - lambda) solution - f|| / ||f|| < 1e-6 for 10 forcings at 5 parameters."""
        rng = np.random.default_rng(17)
        for lam, resolvent in self.resolvents.items():
            for _ in range(10):
                fu, fw = smooth_field(resolvent.grid, rng)
                problem = resolvent.solve(fu, fw)
                self.assertLess(problem.residual, 1e-6, f'lambda={lam}')
                self.assertTrue(np.isfinite(problem.bound))
                self.assertAlmostEqual(float(problem.solution.w[0]), 0.0, delta=1e-10 * np.max(np.abs(problem.solution.w)))

    def test_boundary_behavior(self):
        """Test bounded w and eta decaying at least like s**((nu + 1)/2) near z_plus."""
        resolvent = self.resolvents[1.0]
        problem = resolvent.solve(*smooth_field(resolvent.grid, np.random.default_rng(23)))
        self.assertEqual(problem.c1[-1], 0.0)
        self.assertEqual(problem.c2[0], 0.0)
        depth = self.profile.z_plus - problem.grid
        near = (depth >= 1e-5) & (depth <= 1e-3)
        slope, _ = fit_power_law(depth[near], problem.solution.eta[near])
        self.assertGreaterEqual(slope, 0.5 * (self.profile.nu + 1.0))
        self.assertTrue(np.all(np.isfinite(problem.solution.w)))

    def test_one_mode_forcing(self):
        """Test that forcing by an eigenfunction is divided by lambda* - lambda."""
        lam = 2.0
        resolvent = self.resolvents[lam]
        grid = resolvent.grid
        fu = CubicSpline(self.mode.grid, self.mode.u)(grid)
        fw = CubicSpline(self.mode.grid, self.mode.w)(grid)
        problem = resolvent.solve(fu, fw)
        self.assertLess(problem.residual, 1e-6)
        expected = 1.0 / abs(self.root - lam)
        self.assertAlmostEqual(problem.bound, expected, delta=0.1 * expected)

    def test_near_eigenvalue(self):
        """Test NearEigenvalue within 1e-8 of a known root."""
        with self.assertRaises(NearEigenvalue):
            self.service.resolvent_solve(self.profile, SPEC, self.root * (1.0 + 1e-9), 0.0, 1.0, roots=[self.root])


class DispersionCommandTest(SimpleTestCase):
    """
    Test cases for the dispersion and modes management commands.
    """

    def test_dispersion_command(self):
        """Test the lambda,D table and the empty-root report on the isentropic g-range."""
        with tempfile.TemporaryDirectory() as tmp:
            out = StringIO()
            call_command('dispersion', grid=16, output_dir=tmp, stdout=out)
            frame = pd.read_csv(Path(tmp) / 'dispersion.csv')
            self.assertEqual(list(frame.columns), ['lambda', 'D'])
            self.assertEqual(len(frame), 16)
            self.assertIn('No roots', out.getvalue())

    def test_modes_command(self):
        """Test the z,u,w,eta table of a refined p-mode."""
        _, profile = reference_profiles()
        l_g = SPEC.l * profile.g
        root = DispersionService().scan_and_refine(profile, SPEC, (1.05 * l_g, 4.0 * l_g), 16).values[0]
        with tempfile.TemporaryDirectory() as tmp:
            out = StringIO()
            call_command('modes', lam=float(root), refine=1e-6, points=801, output_dir=tmp, stdout=out)
            frame = pd.read_csv(Path(tmp) / 'mode.csv')
            self.assertEqual(list(frame.columns), ['z', 'u', 'w', 'eta'])
            self.assertEqual(len(frame), 801)
            self.assertAlmostEqual(float(frame['w'].iloc[-1]), 1.0, delta=1e-12)
            self.assertIn('lambda=', out.getvalue())
