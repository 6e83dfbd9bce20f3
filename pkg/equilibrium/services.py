from dataclasses import replace
from typing import Any, Dict, List, Optional
import logging

import numpy as np
from scipy.optimize import brentq

from common.exceptions import (
    ConfigInvalid, DomainError, EntropyConditionViolated, FitFailure, InversionFailure,
)
from common.services import SpectralService
from common.serializers import flatten_errors
from common.utils import fit_power_law
from .laws import EntropyLaw, TableLaw, law_from_descriptor
from .profile import (
    AdmissibilityCheck, AdmissibilityReport, EquilibriumProfile, FieldSample, GasParameters,
)
from .repositories import ProfileRepository
from .serializers import ProfileDescriptorSerializer

logger = logging.getLogger(__name__)


class EquilibriumService(SpectralService):
    """
    Service class for building and certifying stratified equilibria.
    """

    def __init__(self, repository: Optional[ProfileRepository] = None):
        super().__init__(repository or ProfileRepository())

    def build_equilibrium(self, params: GasParameters, law: EntropyLaw, z_plus: float) -> EquilibriumProfile:
        """
        Construct the admissible equilibrium for an entropy law.

        Args:
            params: Gas constants
            law: Entropy law Sigma(eta)
            z_plus: Vacuum height

        Returns:
            EquilibriumProfile with the vacuum amplitude extracted

        Raises:
            EntropyConditionViolated: If the positivity condition fails
            InversionFailure: If the enthalpy inversion does not converge
        """
        if not 1.0 < params.gamma < 2.0:
            raise DomainError("gamma must lie in (1, 2)", details={'gamma': params.gamma})
        self.validate_positive(c_v=params.c_v, g=params.g, z_plus=z_plus)

        rtol = self.option('INVERSION_RTOL', 1e-13)
        seed = EquilibriumProfile(params=params, law=law, z_plus=z_plus, eta_base=1.0, inversion_rtol=rtol)
        target = params.g * z_plus

        eta_hi = target / ((params.nu + 1.0) * float(np.exp(law.sigma(0.0) / params.c_v)))
        for _ in range(200):
            self.check_entropy_condition(params, law, max(eta_hi, law.eta_max or 0.0))
            if seed.enthalpy(eta_hi) >= target:
                break
            eta_hi *= 2.0
        else:
            raise InversionFailure("Enthalpy function does not reach g*z_plus", details={'z_plus': z_plus})

        if isinstance(law, TableLaw) and eta_hi > law.table_max:
            raise EntropyConditionViolated(
                "Entropy table does not cover the eta range of the profile",
                details={'eta_required': eta_hi, 'table_max': law.table_max},
            )

        try:
            eta_base = brentq(lambda eta: float(seed.enthalpy(eta)) - target, 0.0, eta_hi,
                              xtol=1e-300, rtol=max(rtol, 4 * np.finfo(float).eps))
        except (ValueError, RuntimeError) as e:
            raise InversionFailure(str(e))

        profile = replace(seed, eta_base=eta_base)
        offset = 1e-8 * z_plus
        c_rho = float(profile.density(z_plus - offset)[0]) / offset ** params.nu
        profile = replace(profile, c_rho=c_rho)

        self.log_operation('build_equilibrium', profile.fingerprint[:12], {
            'law': law.kind, 'z_plus': z_plus, 'rho_base': eta_base ** params.nu, 'c_rho': c_rho,
        })
        return profile

    def check_entropy_condition(self, params: GasParameters, law: EntropyLaw, eta_max: float) -> None:
        """
        Check gamma + ((gamma - 1)/c_v) eta Sigma'(eta) > 0 on a log-spaced grid.

        Raises:
            EntropyConditionViolated: At the first failing eta
        """
        points = self.option('ENTROPY_VALIDATION_POINTS', 1024)
        eta = np.concatenate([[0.0], np.logspace(np.log10(eta_max) - 12.0, np.log10(eta_max), points)])
        value = params.gamma + (params.gamma - 1.0) / params.c_v * eta * law.sigma_prime(eta)
        bad = np.flatnonzero(~(value > 0.0))
        if bad.size:
            raise EntropyConditionViolated(details={'eta': float(eta[bad[0]]), 'value': float(value[bad[0]])})

    def profile_from_descriptor(self, descriptor: Dict[str, Any]) -> EquilibriumProfile:
        """Rebuild a profile from the JSON descriptor written by the equilibrium command."""
        gas = descriptor['gas']
        params = GasParameters(gamma=float(gas['gamma']), c_v=float(gas['c_v']), g=float(gas['g']))
        return self.build_equilibrium(params, law_from_descriptor(descriptor['law']), float(descriptor['z_plus']))

    def eval_fields(self, profile: EquilibriumProfile, z) -> FieldSample:
        """
        Background fields at height z.

        Raises:
            OutOfDomain: If z is outside [0, z_plus)
        """
        return profile.fields(z)

    def derivative(self, profile: EquilibriumProfile, func, z) -> np.ndarray:
        """
        Differentiate ``func(z)`` by central differences, one-sided within ten
        steps of the vacuum height.
        """
        z = np.atleast_1d(np.asarray(z, dtype=float))
        h = self.option('DERIVATIVE_STEP', 1e-6) * profile.z_plus
        near = z > profile.z_plus - 10.0 * h
        up, down = np.where(near, z, z + h), np.where(near, z, z - h)
        # divide by the spacing of the rounded abscissae
        central = (func(up) - func(down)) / np.where(near, 1.0, up - down)
        backward = (3.0 * func(z) - 4.0 * func(z - h) + func(z - 2.0 * h)) / (2.0 * h)
        return np.where(near, backward, central)

    def vacuum_exponents(self, profile: EquilibriumProfile, z_max: Optional[float] = None):
        """
        Fit rho ~ c_rho_fit (z_plus - z)**nu_fit near the vacuum boundary.

        Args:
            profile: Built profile
            z_max: Largest height available to the fit (defaults to the full domain)

        Returns:
            (nu_fit, c_rho_fit)

        Raises:
            FitFailure: If fewer than eight sample heights fall in the fit window
        """
        points = self.option('VACUUM_FIT_POINTS', 64)
        depth = np.logspace(-4.0, -3.0, points) * profile.z_plus
        z = profile.z_plus - depth
        if z_max is not None:
            keep = z <= z_max
            depth, z = depth[keep], z[keep]
        if depth.size < 8:
            raise FitFailure(details={'points': int(depth.size)})
        nu_fit, c_rho_fit = fit_power_law(depth, profile.density(z))
        return nu_fit, c_rho_fit

    def shape_checks(self, rho: np.ndarray) -> List[AdmissibilityCheck]:
        """Positivity and strict decrease of sampled densities."""
        return [
            AdmissibilityCheck('positivity', bool(np.all(rho > 0.0)), float(np.min(rho))),
            AdmissibilityCheck('monotonicity', bool(np.all(np.diff(rho) < 0.0)), float(np.max(np.diff(rho)))),
        ]

    def hydrostatic_check(self, pressure_slope: np.ndarray, rho: np.ndarray, g: float,
                          tolerance: float) -> AdmissibilityCheck:
        residual = float(np.max(np.abs(pressure_slope + g * rho)) / np.max(g * rho))
        return AdmissibilityCheck('hydrostatic', residual <= tolerance, residual, 'sup|dP/dz + g rho| / sup(g rho)')

    def check_admissible(self, profile: EquilibriumProfile, points: Optional[int] = None) -> AdmissibilityReport:
        """
        Certify positivity, monotonicity, hydrostatic balance, vacuum contact and
        the consistency of the derived fields.

        N**2 is compared with -g**2/c2 + g/h_rho wherever |N**2| exceeds
        N2_FLOOR, and 1/h_rho with the numerical slope of -log(rho).
        Failures are report entries, never exceptions.
        """
        points = points or self.option('PROFILE_EXPORT_POINTS', 401)
        z = np.linspace(0.0, profile.z_plus, points)[:-1]
        sample = profile.fields(z)
        rho = np.asarray(sample.rho)
        checks = self.shape_checks(rho)

        pressure_slope = self.derivative(profile, lambda x: np.asarray(profile.fields(x, check_domain=False).p), z)
        hydrostatic = self.hydrostatic_check(pressure_slope, rho, profile.g, 1e-10)
        checks.append(hydrostatic)

        n2 = np.asarray(sample.n2)
        resolved = np.abs(n2) > self.option('N2_FLOOR', 1e-12)
        mismatch = 0.0
        if np.any(resolved):
            alternative = profile.n2_from_scale_height(sample)
            mismatch = float(np.max(np.abs(alternative[resolved] - n2[resolved]) / np.abs(n2[resolved])))
        checks.append(AdmissibilityCheck('n2_consistency', mismatch <= 1e-8, mismatch,
                                         f'{int(np.count_nonzero(resolved))} heights with |N2| above the floor'))

        log_slope = self.derivative(profile, lambda x: np.log(np.asarray(profile.fields(x, check_domain=False).rho)), z)
        inverse_height = 1.0 / np.asarray(sample.h_rho)
        drift = float(np.max(np.abs(inverse_height + log_slope) / np.abs(inverse_height)))
        checks.append(AdmissibilityCheck('scale_height', drift <= 1e-6, drift, '1/h_rho against -dlog(rho)/dz'))

        try:
            nu_fit, c_rho_fit = self.vacuum_exponents(profile)
            fit_error = abs(nu_fit - profile.nu)
            checks.append(AdmissibilityCheck('vacuum_exponent', fit_error < 0.01, nu_fit, f'c_rho_fit={c_rho_fit:.6g}'))
        except FitFailure as e:
            checks.append(AdmissibilityCheck('vacuum_exponent', False, float('nan'), e.message))

        report = AdmissibilityReport(checks=checks)
        self.log_operation('check_admissible', profile.fingerprint[:12], {
            'passed': report.passed, 'hydrostatic_residual': hydrostatic.value, 'n2_mismatch': mismatch,
        })
        return report

    def check_tabulated(self, z, rho, p, g: float = 1.0) -> AdmissibilityReport:
        """
        Certify a sampled (z, rho, P) table.

        dP/dz is taken by second-order differences on the table heights and
        compared against TABULATED_HYDROSTATIC_RTOL. Only positivity,
        monotonicity and hydrostatic balance are reported.

        Raises:
            DomainError: Unless the columns are one-dimensional, of equal length >= 3,
                with strictly increasing heights
        """
        z, rho, p = (np.asarray(column, dtype=float) for column in (z, rho, p))
        if z.ndim != 1 or z.shape != rho.shape or z.shape != p.shape or z.size < 3:
            raise DomainError("z, rho and p must be equal-length columns with at least three rows",
                              details={'z': z.shape, 'rho': rho.shape, 'p': p.shape})
        if np.any(np.diff(z) <= 0.0):
            raise DomainError("Table heights must be strictly increasing")
        self.validate_positive(g=g)

        checks = self.shape_checks(rho)
        slope = np.gradient(p, z, edge_order=2)
        checks.append(self.hydrostatic_check(slope, rho, g, self.option('TABULATED_HYDROSTATIC_RTOL', 1e-4)))
        report = AdmissibilityReport(checks=checks)
        self.log_operation('check_tabulated', None, {'passed': report.passed, 'rows': int(z.size)})
        return report

    def profile_table(self, profile: EquilibriumProfile, points: Optional[int] = None) -> Dict[str, np.ndarray]:
        """Sampled fields with the export column names."""
        points = points or self.option('PROFILE_EXPORT_POINTS', 401)
        z = np.linspace(0.0, profile.z_plus, points)[:-1]
        sample = profile.fields(z)
        return {
            'z': z, 'rho': sample.rho, 'p': sample.p, 's': sample.s, 'c2': sample.c2,
            'n2': sample.n2, 'a': sample.a_schwarz, 'h_rho': sample.h_rho,
        }

    def export(self, profile: EquilibriumProfile, stem: str = 'profile', points: Optional[int] = None) -> Dict[str, str]:
        """Write the profile CSV and its JSON descriptor; returns path -> checksum."""
        self.repository.write(f'{stem}.csv', self.profile_table(profile, points))
        self.repository.write_descriptor(f'{stem}.json', profile)
        return self.repository.written_files()

    def load_profile(self, path: Optional[str] = None) -> EquilibriumProfile:
        """
        Rebuild the profile described by a JSON descriptor file.

        Without a path the default isentropic profile (gamma 1.4, c_v = g = z_plus = 1)
        is built.
        """
        raw = self.repository.read_descriptor(path) if path else {}
        serializer = ProfileDescriptorSerializer(data=raw)
        if not serializer.is_valid():
            raise ConfigInvalid(details={'errors': '; '.join(flatten_errors(serializer.errors))})
        return self.profile_from_descriptor(serializer.to_descriptor())
