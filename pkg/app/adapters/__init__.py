"""
Adapter interfaces for reeb-strip.
"""

from .artifacts import ArtifactRecord, ArtifactSink

__all__ = [
    "ArtifactRecord",
    "ArtifactSink",
]
