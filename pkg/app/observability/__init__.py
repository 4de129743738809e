"""
Observability features for reeb-strip.
"""

from .metrics import MetricsCollector, StageTimer
from .logging import PipelineLogger, setup_logging, get_logger

__all__ = [
    "MetricsCollector",
    "StageTimer",
    "PipelineLogger",
    "setup_logging",
    "get_logger",
]
