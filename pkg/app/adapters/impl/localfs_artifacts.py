"""
LocalFS artifact sink implementation.
"""

from pathlib import Path
from typing import Union

from app.adapters.artifacts import ArtifactSink


class LocalFSArtifactSink(ArtifactSink):
    """Writes artifacts into one output directory."""

    def __init__(self, directory: Union[str, Path]):
        """
        Initialize the sink.

        Args:
            directory: Output directory, created when missing
        """
        super().__init__()
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.directory / name

    def _store(self, name: str, data: bytes) -> None:
        target = self.path(name)
        tmp = target.with_name(f".{target.name}.tmp")
        tmp.write_bytes(data)
        tmp.replace(target)

    def read(self, name: str) -> bytes:
        target = self.path(name)
        if not target.is_file():
            raise KeyError(f"Artifact '{name}' not found")
        return target.read_bytes()
