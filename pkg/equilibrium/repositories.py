from pathlib import Path
from typing import Dict, Optional, Union

from common.exceptions import ConfigurationError
from common.repositories import CsvRepository, JsonRepository


class ProfileRepository(CsvRepository):
    """
    Repository for sampled profile tables and their JSON descriptors.
    """
    columns = ['z', 'rho', 'p', 's', 'c2', 'n2', 'a', 'h_rho']

    def __init__(self, output_dir: Optional[Union[str, Path]] = None):
        super().__init__(output_dir)
        self.documents = JsonRepository(self.output_dir)

    def write_descriptor(self, name: str, profile) -> Path:
        """Write the descriptor from which ``profile`` can be rebuilt."""
        return self.documents.write(name, profile.describe())

    def read_descriptor(self, name: str) -> Dict:
        return self.documents.read(name)

    def written_files(self) -> Dict[str, str]:
        return {**self.written, **self.documents.written}

    def read_table(self, name: str):
        """
        Read a sampled profile table; only z, rho and p are required.

        Raises:
            ConfigurationError: If the file is missing or lacks one of the three columns
        """
        frame = self.read(name)
        missing = [column for column in ('z', 'rho', 'p') if column not in frame.columns]
        if missing:
            raise ConfigurationError(f"Table is missing columns: {', '.join(missing)}", details={'file': name})
        return frame
