from pathlib import Path

import numpy as np

from common.repositories import CsvRepository


class ClosedFormRepository(CsvRepository):
    """
    Repository for closed-form eigenvalue tables (n, lambda).
    """
    columns = ['n', 'lambda']

    def write_values(self, name: str, values: np.ndarray) -> Path:
        return self.write(name, {'n': np.arange(1, len(values) + 1), 'lambda': np.asarray(values)})
