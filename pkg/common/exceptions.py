from django.core.management.base import CommandError
import logging

logger = logging.getLogger(__name__)


class SpectralLabError(Exception):
    """
    Base exception class for every domain error raised by the apps.
    """
    default_message = "An error occurred"
    default_code = "error"
    exit_status = 1

    def __init__(self, message=None, code=None, details=None, exit_status=None):
        self.message = message or self.default_message
        self.code = code or self.default_code
        self.details = details or {}
        if exit_status:
            self.exit_status = exit_status
        super().__init__(self.message)


class ConfigurationError(SpectralLabError):
    """
    Exception for invalid run configurations and settings.
    """
    default_message = "Configuration is invalid"
    default_code = "configuration_error"
    exit_status = 2


class DomainError(SpectralLabError):
    """
    Exception for arguments outside the domain of an operation.
    """
    default_message = "Argument outside the admissible domain"
    default_code = "domain_error"
    exit_status = 3


class ConvergenceError(SpectralLabError):
    """
    Exception for numerical procedures that failed to converge.
    """
    default_message = "Numerical procedure did not converge"
    default_code = "convergence_error"
    exit_status = 4


class PhysicsPreconditionError(SpectralLabError):
    """
    Exception for violated physical hypotheses of an operation.
    """
    default_message = "Physical precondition violated"
    default_code = "precondition_error"
    exit_status = 5


# Configuration

class ConfigInvalid(ConfigurationError):
    default_message = "Run configuration failed validation"
    default_code = "config_invalid"


# Domain

class OutOfDomain(DomainError):
    default_message = "Height outside [0, z_plus)"
    default_code = "out_of_domain"


class ParameterOutOfRange(DomainError):
    default_message = "Spectral parameter outside the legal range"
    default_code = "parameter_out_of_range"


class IndexOutOfRange(DomainError):
    default_message = "Mode index outside the computed range"
    default_code = "index_out_of_range"


class ZeroLambda(DomainError):
    default_message = "The spectral parameter must be nonzero"
    default_code = "zero_lambda"


class SkipPoint(DomainError):
    default_message = "Spectral parameter coincides with the degenerate point l*g"
    default_code = "skip_point"


class PeriodMismatch(DomainError):
    default_message = "Horizontal wavenumber is not compatible with the period"
    default_code = "period_mismatch"


class NonAdmissibleTrial(DomainError):
    default_message = "Trial function violates the boundary behaviour"
    default_code = "non_admissible_trial"


class GridTooCoarse(DomainError):
    default_message = "Sample grid is too coarse"
    default_code = "grid_too_coarse"


class NonInvertibleMap(DomainError):
    default_message = "Amplitude too large for an invertible boundary map"
    default_code = "non_invertible_map"


# Convergence

class InversionFailure(ConvergenceError):
    default_message = "Inversion of the enthalpy function failed"
    default_code = "inversion_failure"


class FitFailure(ConvergenceError):
    default_message = "Not enough resolvable points near the vacuum boundary"
    default_code = "fit_failure"


class DivergentTransform(ConvergenceError):
    default_message = "Liouville coordinate integral did not converge"
    default_code = "divergent_transform"


class MeshTooCoarse(ConvergenceError):
    default_message = "Successive mesh refinements disagree"
    default_code = "mesh_too_coarse"


class BracketFailure(ConvergenceError):
    default_message = "Eigenvalue could not be bracketed"
    default_code = "bracket_failure"


class StepFailure(ConvergenceError):
    default_message = "ODE integrator broke down"
    default_code = "step_failure"


class NoSignChange(ConvergenceError):
    default_message = "Fixed-point function has no sign change on the scan"
    default_code = "no_sign_change"


class ResonanceUnhandled(ConvergenceError):
    default_message = "Integer-exponent resonance beyond the implemented order"
    default_code = "resonance_unhandled"


class GlueMismatch(ConvergenceError):
    default_message = "Regular and vacuum branches are not parallel"
    default_code = "glue_mismatch"


# Physics

class EntropyConditionViolated(PhysicsPreconditionError):
    default_message = "Entropy law violates the positivity condition"
    default_code = "entropy_condition_violated"


class StabilityViolated(PhysicsPreconditionError):
    default_message = "Squared buoyancy frequency is not positive everywhere"
    default_code = "stability_violated"


class NotIsentropic(PhysicsPreconditionError):
    default_message = "Profile is not isentropic"
    default_code = "not_isentropic"


class LimitCircleEndpoint(PhysicsPreconditionError):
    default_message = "Singular strength c_q must exceed 3/4"
    default_code = "limit_circle_endpoint"


class NearEigenvalue(PhysicsPreconditionError):
    default_message = "Spectral parameter is too close to an eigenvalue"
    default_code = "near_eigenvalue"


def command_error_handler(exc, command=None):
    """
    Convert a domain error into a management-command error.

    Args:
        exc: Exception raised by a service
        command: Name of the running command, for the log record

    Returns:
        CommandError carrying the error message, code and exit status
    """
    if isinstance(exc, SpectralLabError):
        logger.error(
            f"Command {command or '?'} failed: {exc.message}",
            extra={'code': exc.code, 'details': exc.details},
            exc_info=True,
        )
        message = f"[{exc.code}] {exc.message}"
        if exc.details:
            detail_text = "; ".join(f"{key}={value}" for key, value in sorted(exc.details.items()))
            message = f"{message} ({detail_text})"
        return CommandError(message, returncode=exc.exit_status)

    logger.error(f"Unexpected error in command {command or '?'}: {exc}", exc_info=True)
    return CommandError(str(exc))
