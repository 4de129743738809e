"""
Structured logging setup for reeb-strip.
"""

import json
import logging
import sys
from datetime import datetime, timezone
from typing import Any, Dict, Optional, Sequence

_RESERVED = {
    'name', 'msg', 'args', 'levelname', 'levelno', 'pathname',
    'filename', 'module', 'lineno', 'funcName', 'created',
    'msecs', 'relativeCreated', 'thread', 'threadName',
    'processName', 'process', 'getMessage', 'exc_info',
    'exc_text', 'stack_info', 'taskName',
}


class JSONFormatter(logging.Formatter):
    """JSON log formatter for structured logging."""

    def format(self, record: logging.LogRecord) -> str:
        """Format log record as JSON."""
        log_entry = {
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        if record.exc_info:
            log_entry["exception"] = self.formatException(record.exc_info)

        for key, value in record.__dict__.items():
            if key not in _RESERVED:
                log_entry[key] = value

        return json.dumps(log_entry, default=str)


def setup_logging(
    level: str = "WARNING",
    format_type: str = "json",
    log_file: Optional[str] = None
) -> None:
    """
    Setup application logging.

    Logs go to stderr; stdout carries command output only.

    Args:
        level: Log level (DEBUG, INFO, WARNING, ERROR)
        format_type: Format type (json, text)
        log_file: Optional log file path
    """
    root_logger = logging.getLogger()
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    log_level = getattr(logging, level.upper(), logging.WARNING)
    root_logger.setLevel(log_level)

    if format_type == "json":
        formatter = JSONFormatter()
    else:
        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

    logging.getLogger("matplotlib").setLevel(logging.WARNING)


def get_logger(name: str) -> logging.Logger:
    """Get a logger with the specified name."""
    return logging.getLogger(name)


class PipelineLogger:
    """Stage-level logger for one analysis run."""

    def __init__(self, spec_name: str = "", logger_name: str = "reeb.pipeline"):
        self.logger = get_logger(logger_name)
        self.spec_name = spec_name

    def _extra(self, event: str, **fields: Any) -> Dict[str, Any]:
        return {"spec": self.spec_name, "event": event, **fields}

    def stage_start(self, stage: str, window: Optional[Sequence[float]] = None):
        """Log stage start."""
        self.logger.info(
            f"Stage {stage} started",
            extra=self._extra("stage_start", stage=stage, window=list(window) if window else None)
        )

    def stage_end(self, stage: str, duration_ms: float, **details: Any):
        """Log stage completion."""
        self.logger.info(
            f"Stage {stage} completed",
            extra=self._extra("stage_end", stage=stage, duration_ms=duration_ms, **details)
        )

    def window_clipped(self, requested: Sequence[float], effective: Sequence[float]):
        """Log a window shrunk to the oscillation trust window."""
        self.logger.warning(
            "Window clipped to the trust window",
            extra=self._extra("window_clipped", requested=list(requested), effective=list(effective))
        )

    def schedule_fitted(self, requested: Sequence[Sequence[float]], scheduled: Sequence[Sequence[float]]):
        """Log a stabilization schedule scaled into the trust window."""
        self.logger.warning(
            "Stabilization windows scaled into the trust window",
            extra=self._extra(
                "schedule_fitted", requested=[list(w) for w in requested], scheduled=[list(w) for w in scheduled]
            )
        )

    def probe_suspect(self, function: str, end: str, reason: str):
        """Log a tail probe that disagrees with its descriptor."""
        self.logger.warning(
            "Tail descriptor looks suspect",
            extra=self._extra("probe_suspect", function=function, end=end, reason=reason)
        )

    def nf_mismatch(self, message: str):
        """Log an NF flag that disagrees with the accumulation seen in the window."""
        self.logger.warning(
            "NF flag inconsistent with observed accumulation",
            extra=self._extra("nf_mismatch", detail=message)
        )

    def separation_result(self, verified: bool, witness: Optional[float], sampled_only: bool, leaves: int):
        """Log the outcome of the separation check."""
        level = logging.INFO if verified else logging.ERROR
        self.logger.log(
            level,
            "Separation verified" if verified else "Separation violated",
            extra=self._extra(
                "separation_result",
                verified=verified,
                witness=witness,
                sampled_only=sampled_only,
                leaves=leaves,
            )
        )

    def events_scheduled(self, events: int, levels: int):
        """Log the size of the event schedule."""
        self.logger.info(
            "Events scheduled",
            extra=self._extra("events_scheduled", events=events, levels=levels)
        )

    def graph_built(self, vertices: int, edges: int, nf: int, violations: int):
        """Log pre-digraph construction."""
        self.logger.info(
            "Pre-digraph built",
            extra=self._extra("graph_built", vertices=vertices, edges=edges, nf=nf, violations=violations)
        )

    def gdnf_built(self, policy: str, classes: int, edges: int, pattern: str):
        """Log GDNF construction."""
        self.logger.info(
            "GDNF built",
            extra=self._extra("gdnf_built", policy=policy, classes=classes, edges=edges, pattern=pattern)
        )

    def stability_result(self, stable: bool, patterns: Sequence[str]):
        """Log the stabilization verdict."""
        level = logging.INFO if stable else logging.WARNING
        self.logger.log(
            level,
            "GDNF stable across windows" if stable else "GDNF unstable across windows",
            extra=self._extra("stability_result", stable=stable, patterns=list(patterns))
        )

    def oracle_result(self, agree: bool, levels: int, disagreements: int):
        """Log oracle comparison."""
        level = logging.INFO if agree else logging.ERROR
        self.logger.log(
            level,
            "Oracle agrees with sweep" if agree else "Oracle disagrees with sweep",
            extra=self._extra("oracle_result", agree=agree, levels=levels, disagreements=disagreements)
        )
