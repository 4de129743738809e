"""
In-memory artifact sink implementation.
"""

from typing import Dict

from app.adapters.artifacts import ArtifactSink


class InMemoryArtifactSink(ArtifactSink):
    """Keeps artifacts in a dict; used by tests."""

    def __init__(self):
        super().__init__()
        self.files: Dict[str, bytes] = {}

    def _store(self, name: str, data: bytes) -> None:
        self.files[name] = data

    def read(self, name: str) -> bytes:
        if name not in self.files:
            raise KeyError(f"Artifact '{name}' not found")
        return self.files[name]
