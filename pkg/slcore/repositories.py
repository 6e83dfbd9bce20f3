from pathlib import Path
from typing import List

from common.repositories import CsvRepository
from .problems import Eigenpair


class EigenpairRepository(CsvRepository):
    """
    Repository for eigenpair tables (n, lambda, residual, zeros).
    """
    columns = ['n', 'lambda', 'residual', 'zeros']

    def write_pairs(self, name: str, pairs: List[Eigenpair]) -> Path:
        return self.write(name, [pair.as_row() for pair in pairs])


class EigenfunctionRepository(CsvRepository):
    """
    Repository for two-column eigenfunction samples, one file per mode.
    """
    columns = ['z', 'w']

    def write_function(self, stem: str, pair: Eigenpair) -> Path:
        return self.write(f'{stem}_n{pair.index}.csv', {'z': pair.grid, 'w': pair.values})
