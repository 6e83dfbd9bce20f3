from pathlib import Path
from typing import Any, Dict

from rest_framework.exceptions import ParseError

from common.exceptions import ConfigInvalid
from common.repositories import JsonRepository
from .manifest import RunManifest


class RunRepository(JsonRepository):
    """
    Repository for run configuration documents and manifests.
    """

    def read_config(self, name: str) -> Dict[str, Any]:
        """
        Raises:
            ConfigurationError: If the file is missing
            ConfigInvalid: If the document is not a JSON object
        """
        try:
            document = self.read(name)
        except ParseError as e:
            raise ConfigInvalid(details={'errors': str(e.detail)})
        if not isinstance(document, dict):
            raise ConfigInvalid(details={'errors': 'The configuration must be a JSON object'})
        return document

    def write_manifest(self, name: str, manifest: RunManifest) -> Path:
        return self.write(name, manifest.as_document())
