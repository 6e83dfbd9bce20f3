from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional
import math


def json_safe(value: Any) -> Any:
    """Replace non-finite floats by None, recursively."""
    if isinstance(value, dict):
        return {key: json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(item) for item in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


@dataclass
class StageReport:
    """
    Outcome of one pipeline stage.

    Attributes:
        name: Stage name
        status: 'ok', 'error' or 'skipped'
        metrics: Numeric diagnostics of the stage
        files: Paths written by the stage
        code: Error code when the stage failed or was skipped
        message: Error message
        exit_status: Exit status of the error, 0 otherwise
    """
    name: str
    status: str = 'ok'
    metrics: Dict[str, Any] = field(default_factory=dict)
    files: List[str] = field(default_factory=list)
    code: Optional[str] = None
    message: Optional[str] = None
    exit_status: int = 0

    def as_document(self) -> Dict[str, Any]:
        document = {'status': self.status, 'metrics': json_safe(self.metrics), 'files': sorted(self.files)}
        if self.code:
            document.update(code=self.code, message=self.message)
        return document


@dataclass
class RunManifest:
    """
    Record of a batch run: config hash, stage outcomes, produced files with
    sha256 checksums and the cross-validation summary.
    """
    config_hash: str
    output_dir: str
    stages: Dict[str, StageReport] = field(default_factory=dict)
    files: Dict[str, str] = field(default_factory=dict)
    cross_validation: Dict[str, float] = field(default_factory=dict)

    @property
    def exit_status(self) -> int:
        return max((report.exit_status for report in self.stages.values()), default=0)

    @property
    def max_disagreement(self) -> float:
        return max(self.cross_validation.values(), default=0.0)

    def as_document(self) -> Dict[str, Any]:
        return {
            'config_hash': self.config_hash,
            'output_dir': self.output_dir,
            'exit_status': self.exit_status,
            'stages': {name: report.as_document() for name, report in self.stages.items()},
            'files': self.files,
            'cross_validation': json_safe({**self.cross_validation, 'max': self.max_disagreement}),
        }
