from io import StringIO
import math
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
from django.test import SimpleTestCase
from scipy.integrate import trapezoid
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq
from scipy.special import jv

from common.exceptions import LimitCircleEndpoint, MeshTooCoarse, NonAdmissibleTrial
from .finite_difference import discretize, fd_eigensolve, fd_levels, solve_level
from .liouville import liouville_transform
from .problems import MeshSpec, SchrodingerForm, SingularEnd, SLProblem
from .repositories import EigenfunctionRepository, EigenpairRepository
from .services import SturmLiouvilleService, max_relative_disagreement
from .shooting import shoot_eigensolve
from .variational import rayleigh_quotient

NU = 2.5
BESSEL_BRACKETS = [(5.5, 6.0), (8.8, 9.3), (12.0, 12.6), (15.2, 15.8), (18.4, 19.0)]


def ones(z):
    return np.ones_like(np.asarray(z, dtype=float))


def zeros(z):
    return np.zeros_like(np.asarray(z, dtype=float))


def box_problem(robin=None):
    return SLProblem(a=ones, b=zeros, kappa=ones, length=math.pi, robin=robin, name='box')


def isentropic_vertical_problem():
    """-(c2 rho w')' = Lambda rho w on the gamma = 1.4, g = 1, z_plus = 1 polytrope."""
    def c2(z):
        return 0.4 * (1.0 - np.asarray(z, dtype=float))

    def rho(z):
        return (c2(z) / 1.4) ** NU

    return SLProblem(
        a=lambda z: c2(z) * rho(z), b=zeros, kappa=rho, length=1.0,
        right_end=SingularEnd(a_power=NU + 1.0, kappa_power=NU), name='isentropic_l0',
    )


def bessel_eigenvalues(count):
    """g j_{nu,k}**2 / (4 nu z_plus) for the isentropic polytrope."""
    roots = [brentq(lambda x: jv(NU, x), lo, hi, xtol=1e-14) for lo, hi in BESSEL_BRACKETS[:count]]
    return np.array(roots) ** 2 / (4.0 * NU)


class ProblemTypesTest(SimpleTestCase):
    """
    Test cases for the singular-end descriptor.
    """

    def test_singular_strengths(self):
        """Test cq for the vertical, gravity and pressure problems at nu = 2.5."""
        self.assertAlmostEqual(SingularEnd(a_power=NU + 1.0, kappa_power=NU).cq, 6.0, places=12)
        self.assertAlmostEqual(SingularEnd(a_power=-NU, kappa_power=-NU).cq, 2.8125, places=12)
        self.assertAlmostEqual(SingularEnd(a_power=-NU, kappa_power=-NU - 1.0).cq, 12.0, places=12)

    def test_natural_end(self):
        """Test that only a vanishing leading coefficient gives a natural end."""
        self.assertTrue(SingularEnd(a_power=3.5, kappa_power=2.5).natural)
        self.assertFalse(SingularEnd(a_power=-2.5, kappa_power=-2.5).natural)


class FiniteDifferenceTest(SimpleTestCase):
    """
    Test cases for the finite-difference oracle.
    """

    def test_box_spectrum(self):
        """Test the Dirichlet box spectrum {1, 4, 9}."""
        pairs = fd_eigensolve(box_problem(), 3, MeshSpec(cells=400))
        for pair, expected in zip(pairs, [1.0, 4.0, 9.0]):
            self.assertAlmostEqual(pair.value, expected, delta=1e-6)
            self.assertEqual(pair.zeros, pair.index - 1)

    def test_empty_request(self):
        """Test that n_max = 0 returns no eigenpairs."""
        self.assertEqual(fd_eigensolve(box_problem(), 0, MeshSpec()), [])

    def test_isentropic_vertical_closed_form(self):
        """Test the isentropic l = 0 eigenvalues against the Bessel closed form."""
        pairs = fd_eigensolve(isentropic_vertical_problem(), 2, MeshSpec(cells=400))
        expected = bessel_eigenvalues(2)
        for pair, value in zip(pairs, expected):
            self.assertAlmostEqual(pair.value / value, 1.0, delta=1e-4)
        self.assertAlmostEqual(expected[0], 3.32171, delta=1e-4)
        self.assertAlmostEqual(expected[1], 8.27190, delta=1e-4)

    def test_second_order_convergence(self):
        """Test that successive refinement differences shrink at order >= 1.9."""
        for problem in (box_problem(), isentropic_vertical_problem()):
            levels = fd_levels(problem, 3, MeshSpec(cells=100, refinements=3))
            ratio = np.abs(levels[0] - levels[1]) / np.abs(levels[1] - levels[2])
            self.assertTrue(np.all(np.log2(ratio) >= 1.9), (problem.name, np.log2(ratio)))

    def test_mesh_too_coarse(self):
        """Test MeshTooCoarse for under-resolved requests."""
        with self.assertRaises(MeshTooCoarse):
            fd_eigensolve(box_problem(), 30, MeshSpec(cells=20))
        with self.assertRaises(MeshTooCoarse):
            fd_eigensolve(box_problem(), 2, MeshSpec(cells=8, tolerance=1e-6))

    def test_eigenvector_normalization(self):
        """Test the lumped-mass normalization and the sign convention."""
        pair = fd_eigensolve(box_problem(), 1, MeshSpec(cells=400))[0]
        self.assertAlmostEqual(trapezoid(pair.values ** 2, pair.grid), 1.0, delta=1e-8)
        self.assertGreater(pair.values[-2], 0.0)
        self.assertEqual(pair.values[0], 0.0)

    def test_energy_quotients_match_matrix(self):
        """Test that level eigenvalues agree with the tridiagonal eigenvalues on a regular problem."""
        problem = box_problem(robin=-0.5)
        disc = discretize(problem, 200, 1.0)
        expected = eigh_tridiagonal(disc.diagonal, disc.off_diagonal, select='i', select_range=(0, 2))[0]
        values = solve_level(problem, 3, 200, 1.0)[0]
        np.testing.assert_allclose(values, expected, rtol=1e-10)

    def test_level_values_smooth_near_singular_end(self):
        """Test that a 1e-7 shift of the potential moves Lambda_n smoothly on a strongly graded mesh."""
        def shifted(t):
            return SLProblem(
                a=lambda z: (1.0 - np.asarray(z, dtype=float)) ** -NU, b=lambda z: t * ones(z),
                kappa=lambda z: (1.0 - np.asarray(z, dtype=float)) ** -NU, length=1.0,
                right_end=SingularEnd(a_power=-NU, kappa_power=-NU), robin=-2.0, name=f'shifted:{t}',
            )

        step = 1e-7
        below, centre, above = (solve_level(shifted(t), 3, 800, 2.0)[0] for t in (1.0 - step, 1.0, 1.0 + step))
        self.assertTrue(np.all(above > centre))
        np.testing.assert_allclose(above - 2.0 * centre + below, 0.0, atol=1e-9 * float(np.max(centre)))


class LiouvilleTransformTest(SimpleTestCase):
    """
    Test cases for the Liouville normal form.
    """

    def test_box_transform(self):
        """Test that the box maps to itself with q = 0."""
        form = liouville_transform(box_problem())
        self.assertAlmostEqual(form.zeta_plus, math.pi, delta=1e-12)
        samples = np.linspace(0.0, math.pi, 50)
        self.assertLess(np.max(np.abs(form.q(samples))), 1e-8)
        self.assertIsNone(form.cq)

    def test_isentropic_vertical_transform(self):
        """Test zeta_plus = 2 sqrt(nu z_plus/g) and cq = 6 for the isentropic l = 0 problem."""
        form = liouville_transform(isentropic_vertical_problem())
        self.assertAlmostEqual(form.zeta_plus, 2.0 * math.sqrt(2.5), delta=1e-8)
        self.assertAlmostEqual(form.cq, 6.0, places=12)
        depth = np.array([0.5, 0.1, 0.01]) * form.zeta_plus
        np.testing.assert_allclose(form.q(form.zeta_plus - depth) * depth ** 2, 6.0, rtol=1e-5)
        self.assertGreater(form.k1, 0.75)
        self.assertLess(form.k1, form.cq)

    def test_coordinate_maps_are_inverse(self):
        """Test that zeta_of_z and z_of_zeta invert each other."""
        form = liouville_transform(isentropic_vertical_problem())
        z = np.linspace(0.0, 0.999, 40)
        np.testing.assert_allclose(form.z_of_zeta(form.zeta_of_z(z)), z, atol=1e-7)
        self.assertAlmostEqual(float(form.zeta_of_z(0.0)), 0.0, delta=1e-12)
        self.assertTrue(np.all(np.diff(form.zeta_of_z(z)) > 0.0))


class ShootingTest(SimpleTestCase):
    """
    Test cases for the Prufer shooting eigensolver.
    """

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.box_form = SchrodingerForm.direct(zeros, math.pi)
        cls.isentropic_form = liouville_transform(isentropic_vertical_problem())
        cls.isentropic_pairs = shoot_eigensolve(cls.isentropic_form, 5)

    def test_box_spectrum(self):
        """Test the q = 0 box spectrum {1, 4, 9}."""
        pairs = shoot_eigensolve(self.box_form, 3)
        for pair, expected in zip(pairs, [1.0, 4.0, 9.0]):
            self.assertAlmostEqual(pair.value, expected, delta=1e-8 * expected)

    def test_isentropic_matches_closed_form_and_oracle(self):
        """Test shooting against the Bessel closed form and the finite-difference oracle."""
        expected = bessel_eigenvalues(5)
        oracle = fd_eigensolve(isentropic_vertical_problem(), 5, MeshSpec(cells=800))
        for pair, value, fd_pair in zip(self.isentropic_pairs, expected, oracle):
            self.assertAlmostEqual(pair.value / value, 1.0, delta=1e-6)
            self.assertAlmostEqual(pair.value / fd_pair.value, 1.0, delta=1e-6)

    def test_oscillation_and_ordering(self):
        """Test n - 1 interior zeros and strictly increasing eigenvalues."""
        for pair in self.isentropic_pairs:
            self.assertEqual(pair.zeros, pair.index - 1)
        values = np.array([pair.value for pair in self.isentropic_pairs])
        self.assertTrue(np.all(np.diff(values) > 1e-10))

    def test_matching_point_independence(self):
        """Test that moving the matching point to zeta_plus/3 leaves the eigenvalues unchanged."""
        moved = shoot_eigensolve(self.isentropic_form, 3, match_fraction=1.0 / 3.0)
        for pair, reference in zip(moved, self.isentropic_pairs):
            self.assertAlmostEqual(pair.value / reference.value, 1.0, delta=1e-8)

    def test_robin_box(self):
        """Test w'(0) = w(0) in both solvers against tan(k pi) = -k."""
        k = brentq(lambda x: math.tan(x * math.pi) + x, 0.51, 0.99)
        problem = box_problem(robin=1.0)
        oracle = fd_eigensolve(problem, 1, MeshSpec(cells=400))[0]
        shot = shoot_eigensolve(liouville_transform(problem), 1)[0]
        self.assertAlmostEqual(oracle.value / k ** 2, 1.0, delta=1e-6)
        self.assertAlmostEqual(shot.value / k ** 2, 1.0, delta=1e-6)

    def test_limit_circle_rejected(self):
        """Test that cq = 0.5 is rejected."""
        form = SchrodingerForm.direct(lambda zeta: 0.5 / (1.0 - np.asarray(zeta)) ** 2, 1.0, cq=0.5)
        with self.assertRaises(LimitCircleEndpoint):
            shoot_eigensolve(form, 1)

    def test_eigenfunction_normalization(self):
        """Test int v**2 dzeta = 1 and w = v/m on the original grid."""
        pair = self.isentropic_pairs[0]
        self.assertAlmostEqual(trapezoid(pair.v_values ** 2, pair.zeta_grid), 1.0, delta=1e-5)
        self.assertEqual(pair.values.size, pair.grid.size)
        self.assertEqual(pair.values[0], 0.0)
        self.assertTrue(np.all(pair.values[1:] > 0.0))


class RayleighQuotientTest(SimpleTestCase):
    """
    Test cases for the Rayleigh quotient.
    """

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.box_form = SchrodingerForm.direct(zeros, math.pi)
        cls.zeta = np.linspace(0.0, math.pi, 4001)

    def test_box_ground_state(self):
        """Test that sin(zeta) gives exactly 1."""
        self.assertAlmostEqual(rayleigh_quotient(self.box_form, self.zeta, np.sin(self.zeta)), 1.0, delta=1e-8)

    def test_box_mixture(self):
        """Test that sin + 0.1 sin 2 lies in (1, 4)."""
        value = rayleigh_quotient(self.box_form, self.zeta, np.sin(self.zeta) + 0.1 * np.sin(2.0 * self.zeta))
        self.assertGreater(value, 1.0)
        self.assertLess(value, 4.0)
        self.assertAlmostEqual(value, (1.0 + 0.04) / 1.01, delta=1e-8)

    def test_isentropic_eigenfunction_and_floor(self):
        """Test the quotient of the first eigenfunction and the variational floor for random trials."""
        form = liouville_transform(isentropic_vertical_problem())
        first = shoot_eigensolve(form, 1)[0]
        value = rayleigh_quotient(form, first.zeta_grid, first.v_values)
        self.assertAlmostEqual(value / first.value, 1.0, delta=1e-6)

        rng = np.random.default_rng(7)
        zeta = np.linspace(0.0, form.zeta_plus, 4001)
        basis = np.array([np.sin(k * math.pi * zeta / form.zeta_plus) for k in range(1, 7)])
        for _ in range(50):
            trial = rng.normal(size=6) @ basis
            self.assertGreaterEqual(rayleigh_quotient(form, zeta, trial), first.value - 1e-8)

    def test_non_admissible_trials(self):
        """Test rejection of trials violating the boundary behaviour."""
        with self.assertRaises(NonAdmissibleTrial):
            rayleigh_quotient(self.box_form, self.zeta, np.cos(self.zeta))
        form = liouville_transform(isentropic_vertical_problem())
        zeta = np.linspace(0.0, form.zeta_plus, 2001)
        with self.assertRaises(NonAdmissibleTrial):
            rayleigh_quotient(form, zeta, np.abs(np.sin(math.pi * zeta / form.zeta_plus)) ** 0.3)


class SturmLiouvilleServiceTest(SimpleTestCase):
    """
    Test cases for SturmLiouvilleService.
    """

    def test_solve_both_and_export(self):
        """Test cross-validation of the two methods and the eigenpair export."""
        with tempfile.TemporaryDirectory() as tmp:
            service = SturmLiouvilleService(EigenpairRepository(tmp), EigenfunctionRepository(tmp))
            oracle, shooting, disagreement = service.solve_both(box_problem(), 3)
            self.assertLess(disagreement, 1e-6)
            written = service.export('box', oracle)

            frame = pd.read_csv(Path(tmp) / 'box.csv')
            self.assertEqual(list(frame.columns), ['n', 'lambda', 'residual', 'zeros'])
            self.assertEqual(list(frame['zeros']), [0, 1, 2])
            self.assertEqual(len(written), 4)
            self.assertTrue((Path(tmp) / 'box_n2.csv').exists())

    def test_max_relative_disagreement(self):
        """Test the disagreement measure."""
        self.assertEqual(max_relative_disagreement([], []), 0.0)
        self.assertAlmostEqual(max_relative_disagreement([1.0, 2.0], [1.0, 2.2]), 0.2 / 2.2, places=12)
