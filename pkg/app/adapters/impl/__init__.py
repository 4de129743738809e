"""
Artifact sink implementations for reeb-strip.
"""

from .localfs_artifacts import LocalFSArtifactSink
from .memory_artifacts import InMemoryArtifactSink

__all__ = [
    "LocalFSArtifactSink",
    "InMemoryArtifactSink",
]
