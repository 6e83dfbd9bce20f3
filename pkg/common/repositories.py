from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Optional, Union
from django.conf import settings
import hashlib
import logging
import pandas as pd

from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)


class BaseRepository(ABC):
    """
    Abstract base repository class that defines the interface for result storage.
    """

    def __init__(self, output_dir: Optional[Union[str, Path]] = None):
        self.output_dir = Path(output_dir or settings.SPECTRA_OUTPUT_DIR)

    @abstractmethod
    def write(self, name: str, data: Any) -> Path:
        """Persist data under the given file name."""
        pass

    @abstractmethod
    def read(self, name: str) -> Any:
        """Load data previously written under the given file name."""
        pass

    def path_for(self, name: str) -> Path:
        return self.output_dir / name


class CsvRepository(BaseRepository):
    """
    Concrete repository writing header-first CSV tables through pandas.

    Every written file is recorded together with its sha256 checksum so the
    run manifest can list what was produced.
    """

    #: Column order of the table, or None to keep the frame order
    columns: Optional[List[str]] = None

    def __init__(self, output_dir: Optional[Union[str, Path]] = None):
        super().__init__(output_dir)
        self.float_format = settings.SPECTRAL_LAB.get('CSV_FLOAT_FORMAT', '%.17g')
        self.written: Dict[str, str] = {}

    def to_frame(self, data: Any) -> pd.DataFrame:
        """
        Convert domain data into a DataFrame.

        Args:
            data: DataFrame, mapping of column arrays or list of row dicts

        Returns:
            DataFrame with the repository column order applied
        """
        frame = data if isinstance(data, pd.DataFrame) else pd.DataFrame(data)
        if self.columns is not None:
            missing = [column for column in self.columns if column not in frame.columns]
            if missing:
                raise ConfigurationError(
                    f"Table is missing columns: {', '.join(missing)}",
                    details={'repository': self.__class__.__name__},
                )
            frame = frame[self.columns]
        return frame

    def write(self, name: str, data: Any) -> Path:
        """
        Write a table to ``output_dir/name``.

        Args:
            name: File name relative to the output directory
            data: Table data accepted by ``to_frame``

        Returns:
            Path of the written file
        """
        path = self.path_for(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame = self.to_frame(data)
        frame.to_csv(path, index=False, float_format=self.float_format, lineterminator='\n')
        self.written[str(path)] = file_checksum(path)
        logger.info(f"Wrote {len(frame)} rows to {path}")
        return path

    def read(self, name: str) -> pd.DataFrame:
        path = Path(name)
        if not path.is_absolute() and not path.exists():
            path = self.path_for(name)
        if not path.exists():
            raise ConfigurationError(f"File not found: {path}", code='file_not_found')
        return pd.read_csv(path)


class JsonRepository(BaseRepository):
    """
    Repository for JSON documents rendered with the DRF JSON renderer.
    """

    def __init__(self, output_dir: Optional[Union[str, Path]] = None):
        super().__init__(output_dir)
        self.written: Dict[str, str] = {}

    def write(self, name: str, data: Dict[str, Any]) -> Path:
        from .utils import render_json

        path = self.path_for(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(render_json(data))
        self.written[str(path)] = file_checksum(path)
        logger.info(f"Wrote JSON document {path}")
        return path

    def read(self, name: str) -> Dict[str, Any]:
        from .utils import parse_json

        path = Path(name)
        if not path.exists():
            path = self.path_for(name)
        if not path.exists():
            raise ConfigurationError(f"File not found: {path}", code='file_not_found')
        return parse_json(path.read_bytes())


def file_checksum(path: Union[str, Path]) -> str:
    """
    Compute the sha256 checksum of a file.

    Args:
        path: File path

    Returns:
        Hex digest
    """
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for chunk in iter(lambda: handle.read(65536), b''):
            digest.update(chunk)
    return digest.hexdigest()
