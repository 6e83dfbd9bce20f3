from abc import ABC
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Any, Dict, Iterator, Optional, Union
from django.core.cache import cache
from django.conf import settings
import hashlib
import logging

logger = logging.getLogger(__name__)

_option_overrides: ContextVar[Dict[str, Any]] = ContextVar('spectral_lab_overrides', default={})


@contextmanager
def overriding(options: Optional[Dict[str, Any]] = None) -> Iterator[None]:
    """
    Temporarily replace SPECTRAL_LAB entries for every service in the current context.

    Args:
        options: Setting names mapped to replacement values
    """
    token = _option_overrides.set({**_option_overrides.get(), **(options or {})})
    try:
        yield
    finally:
        _option_overrides.reset(token)


class BaseService(ABC):
    """
    Abstract base service class holding the repository used for persistence.
    """

    def __init__(self, repository=None):
        super().__init__()
        self.repository = repository

    @property
    def options(self) -> Dict[str, Any]:
        """Numerical defaults from the SPECTRAL_LAB settings dictionary."""
        return {**getattr(settings, 'SPECTRAL_LAB', {}), **_option_overrides.get()}

    def option(self, name: str, default: Any = None) -> Any:
        """Read one numerical default, falling back to ``default``."""
        return self.options.get(name, default)


class CacheableService:
    """
    Mixin memoizing derived quantities of a profile (series, spectra) in the
    Django cache. Keys include the active option overrides, so a run with
    tightened tolerances never reuses results computed under the defaults.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.cache_timeout = getattr(settings, 'DEFAULT_CACHE_TIMEOUT', 300)

    def get_cache_key(self, key_suffix: str) -> str:
        overrides = _option_overrides.get()
        scope = ';'.join(f"{name}={overrides[name]!r}" for name in sorted(overrides))
        digest = hashlib.sha1(f"{key_suffix}|{scope}".encode('utf-8')).hexdigest()
        return f"{type(self).__name__.lower()}:{digest}"

    def get_from_cache(self, key_suffix: str) -> Any:
        return cache.get(self.get_cache_key(key_suffix))

    def set_cache(self, key_suffix: str, data: Any, timeout: Optional[int] = None) -> None:
        cache.set(self.get_cache_key(key_suffix), data, timeout or self.cache_timeout)

    def cached(self, key_suffix: str, compute, use_cache: bool = True) -> Any:
        """
        Look up ``key_suffix``; on a miss call ``compute()`` and store its result.

        None results are never stored.
        """
        if not use_cache:
            return compute()
        hit = self.get_from_cache(key_suffix)
        if hit is None:
            hit = compute()
            self.set_cache(key_suffix, hit)
        return hit

    def delete_cache(self, key_suffix: str) -> None:
        cache.delete(self.get_cache_key(key_suffix))


class LoggingService:
    """
    Mixin writing one structured record per numerical operation. The record
    carries the service, the operation, the object it worked on (usually a
    profile fingerprint prefix) and the numeric diagnostics.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.logger = logging.getLogger(type(self).__module__)

    def _context(self, operation: str, obj_id: Optional[Union[int, str]], **fields: Any) -> Dict[str, Any]:
        return {'service': type(self).__name__, 'operation': operation, 'object_id': obj_id, **fields}

    def log_operation(self, operation: str, obj_id: Optional[Union[int, str]] = None,
                      extra_data: Optional[Dict] = None) -> None:
        """
        Args:
            operation: Operation name
            obj_id: Identifier of the object the operation worked on
            extra_data: Numeric diagnostics, also rendered into the message
        """
        diagnostics = extra_data or {}
        summary = ", ".join(f"{key}={value}" for key, value in diagnostics.items())
        self.logger.info(f"{operation} {summary}".rstrip(), extra={'context': self._context(operation, obj_id, **diagnostics)})

    def log_error(self, operation: str, error: Exception, obj_id: Optional[Union[int, str]] = None) -> None:
        code = getattr(error, 'code', type(error).__name__)
        self.logger.error(f"{operation} failed [{code}]: {error}",
                          extra={'context': self._context(operation, obj_id, error=str(error), code=code)},
                          exc_info=True)


class ValidationService:
    """
    Mixin class that provides argument validation for services.
    """

    def validate_positive(self, **values: float) -> None:
        """
        Validate that every keyword value is a positive finite number.

        Raises:
            DomainError: If a value is not positive
        """
        from common.exceptions import DomainError

        bad = [name for name, value in values.items() if not (value is not None and value > 0 and value < float('inf'))]
        if bad:
            raise DomainError(f"Expected positive values for: {', '.join(bad)}", details={name: values[name] for name in bad})

    def validate_count(self, name: str, value: int, minimum: int = 0) -> None:
        from common.exceptions import DomainError

        if int(value) != value or value < minimum:
            raise DomainError(f"{name} must be an integer >= {minimum}", details={name: value})


class SpectralService(BaseService, CacheableService, LoggingService, ValidationService):
    """
    Concrete base for the numerical services: settings access, caching,
    structured logging and validation.
    """
