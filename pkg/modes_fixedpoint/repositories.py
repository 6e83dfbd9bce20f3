from pathlib import Path
from typing import List

import numpy as np

from common.repositories import CsvRepository
from .problems import FixedPointResult, ParameterSweep


class FixedPointRepository(CsvRepository):
    """
    Repository for fixed-point eigenvalue tables.
    """
    columns = ['branch', 'n', 'lambda', 'capital_lambda', 'f_residual', 'roots_found']

    def write_results(self, name: str, results: List[FixedPointResult]) -> Path:
        return self.write(name, [result.as_row() for result in results])


class SweepRepository(CsvRepository):
    """
    Repository for parameter sweeps in long form (parameter, n, capital_lambda).
    """
    columns = ['parameter', 'n', 'capital_lambda']

    def write_sweep(self, name: str, sweep: ParameterSweep) -> Path:
        points, n_max = sweep.spectra.shape
        return self.write(name, {
            'parameter': np.repeat(sweep.parameter_grid, n_max),
            'n': np.tile(np.arange(1, n_max + 1), points),
            'capital_lambda': sweep.spectra.reshape(-1),
        })
