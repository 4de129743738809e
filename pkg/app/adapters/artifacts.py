"""
Artifact sink interface: where emitted documents and figures go.
"""

import hashlib
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, List, Optional, Union

from app.models.schemas import ArtifactDoc, ManifestDocument, canonical_json

MANIFEST_NAME = "manifest.json"

MEDIA_TYPES = {
    ".json": "application/json",
    ".dot": "text/vnd.graphviz",
    ".svg": "image/svg+xml",
    ".yaml": "application/yaml",
    ".prom": "text/plain",
}


@dataclass(frozen=True)
class ArtifactRecord:
    name: str
    sha256: str
    size: int
    media_type: str


def media_type_for(name: str) -> str:
    for suffix, media_type in MEDIA_TYPES.items():
        if name.endswith(suffix):
            return media_type
    return "application/octet-stream"


class ArtifactSink(ABC):
    """Abstract base class for artifact sinks.

    Every `put` is recorded; `write_manifest` lists the recorded artifacts
    with their hashes. The manifest itself is not listed.
    """

    def __init__(self):
        self._records: Dict[str, ArtifactRecord] = {}

    @abstractmethod
    def _store(self, name: str, data: bytes) -> None:
        """
        Persist raw bytes under a name.

        Args:
            name: Artifact file name
            data: Content

        Raises:
            OSError: If the backing store cannot be written
        """
        pass

    @abstractmethod
    def read(self, name: str) -> bytes:
        """
        Read a stored artifact.

        Raises:
            KeyError: If no artifact has that name
        """
        pass

    def put(self, name: str, content: Union[str, bytes], media_type: Optional[str] = None) -> ArtifactRecord:
        """Store content and record its hash."""
        data = content.encode("utf-8") if isinstance(content, str) else content
        self._store(name, data)
        record = ArtifactRecord(
            name=name,
            sha256=hashlib.sha256(data).hexdigest(),
            size=len(data),
            media_type=media_type or media_type_for(name),
        )
        self._records[name] = record
        return record

    def records(self) -> List[ArtifactRecord]:
        return [self._records[name] for name in sorted(self._records)]

    def write_manifest(self, command: str, spec_name: str, exit_code: int = 0) -> ArtifactRecord:
        manifest = ManifestDocument(
            command=command,
            spec=spec_name,
            exit_code=exit_code,
            artifacts=[ArtifactDoc(**r.__dict__) for r in self.records()],
        )
        data = canonical_json(manifest).encode("utf-8")
        self._store(MANIFEST_NAME, data)
        return ArtifactRecord(MANIFEST_NAME, hashlib.sha256(data).hexdigest(), len(data), "application/json")

