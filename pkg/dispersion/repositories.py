from pathlib import Path

from common.repositories import CsvRepository
from .operator import ModeFunction
from .scan import DispersionScan


class DispersionRepository(CsvRepository):
    """
    Repository for sampled dispersion functions (lambda, D).
    """
    columns = ['lambda', 'D']

    def write_scan(self, name: str, scan: DispersionScan) -> Path:
        return self.write(name, scan.as_columns())


class ModeFunctionRepository(CsvRepository):
    """
    Repository for reconstructed mode functions (z, u, w, eta).
    """
    columns = ['z', 'u', 'w', 'eta']

    def write_mode(self, name: str, mode: ModeFunction) -> Path:
        return self.write(name, mode.as_columns())
