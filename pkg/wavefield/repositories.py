from pathlib import Path
from typing import Any, Dict, List

import numpy as np

from common.repositories import CsvRepository
from .fields import BoundarySurface


class SurfaceRepository(CsvRepository):
    """
    Repository for the vacuum boundary motion (t, x, xbar, zbar).
    """
    columns = ['t', 'x', 'xbar', 'zbar']

    def write_surface(self, name: str, surface: BoundarySurface) -> Path:
        return self.write(name, surface.as_columns())


class SnapshotRepository(CsvRepository):
    """
    Repository for displacement snapshots (t, x, z, xi1, xi3).
    """
    columns = ['t', 'x', 'z', 'xi1', 'xi3']

    def write_snapshots(self, name: str, columns: Dict[str, np.ndarray]) -> Path:
        return self.write(name, columns)


class ModeTableRepository(CsvRepository):
    """
    Repository for mode selections (direction, l, lambda, amplitude) read by synthesize.
    """
    columns = ['direction', 'l', 'lambda', 'amplitude']

    def read_table(self, name: str) -> List[Dict[str, Any]]:
        """
        Raises:
            ConfigurationError: If the file is missing or lacks a column
        """
        return self.to_frame(self.read(name)).to_dict('records')
