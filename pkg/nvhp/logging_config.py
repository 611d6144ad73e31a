"""
Structured logging configuration

Provides a consistent, timezone-aware, structured logging setup for:
- Library events (sweep warnings, weak dressing, non-spanning schedules)
- Experiment runs (runner and CLI)
- System events and errors

Features:
- JSON-formatted logs for machine processing
- Pretty console output through rich
- Timezone-aware timestamps (configured in nvhp.yaml)
- Daily log file rotation
"""

import os
import logging
import logging.config
from pathlib import Path
from datetime import datetime

from zoneinfo import ZoneInfo
import structlog
from pythonjsonlogger import jsonlogger

from nvhp.config.config import load_config

LOGGER_NAMES = ("nvhp", "nvhp.runs", "nvhp.system")


class TimezoneAwareJsonFormatter(jsonlogger.JsonFormatter):
    """
    JSON formatter that adds timezone-aware timestamps, the level and the
    logger name to every record.
    """
    def __init__(self, tz=None, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.tz = None
        if tz:
            try:
                self.tz = ZoneInfo(tz)
            except Exception:
                pass

    def add_fields(self, log_record, record, message_dict):
        super().add_fields(log_record, record, message_dict)

        log_record['timestamp'] = datetime.fromtimestamp(record.created, tz=self.tz).isoformat()
        log_record['level'] = record.levelname
        log_record['logger'] = record.name

        for field in list(log_record.keys()):
            if log_record[field] is None or log_record[field] == '':
                del log_record[field]


# Structlog processors
def drop_empty_keys(_, __, event_dict):
    """Remove keys with None or empty string values from structlog event dict"""
    for key in list(event_dict.keys()):
        if event_dict[key] is None or event_dict[key] == '':
            del event_dict[key]
    return event_dict


def make_timestamp_processor(log_timezone=None):
    """Build a processor stamping events in the configured timezone"""
    zone = None
    if log_timezone:
        try:
            zone = ZoneInfo(log_timezone)
        except Exception:
            zone = None

    def add_timestamp(_, __, event_dict):
        event_dict["timestamp"] = datetime.now(zone).isoformat()
        return event_dict

    return add_timestamp


def setup_logging(level=None):
    """
    Setup structured logging:
    - JSON file logs (unless ``logging.to_file`` is false)
    - rich console output
    - timezone-aware timestamps
    """
    config = load_config()
    logging_cfg = config.get("logging", {})
    log_level = (level or logging_cfg.get("level", "INFO")).upper()
    log_datefmt = logging_cfg.get("datefmt", "%Y-%m-%d %H:%M:%S")
    log_timezone = logging_cfg.get("timezone", None)
    backup_count = logging_cfg.get("backupCount", 30)
    to_file = logging_cfg.get("to_file", True)

    shared_processors = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
        make_timestamp_processor(log_timezone),
        drop_empty_keys,
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
    ]

    handlers = {
        "console": {
            "class": "rich.logging.RichHandler",
            "level": log_level,
            "rich_tracebacks": True,
            "show_path": False,
            "log_time_format": log_datefmt,
            "formatter": "console",
        },
    }
    if to_file:
        logs_dir = Path(os.environ.get("NVHP_LOG_DIR", "wd/logs"))
        logs_dir.mkdir(parents=True, exist_ok=True)
        log_filename = f"{datetime.now().strftime('%Y%m%d')}_nvhp.json"
        handlers["file"] = {
            "class": "logging.handlers.TimedRotatingFileHandler",
            "level": log_level,
            "formatter": "json",
            "filename": str(logs_dir / log_filename),
            "when": "midnight",
            "backupCount": backup_count,
            "encoding": "utf-8",
        }

    handler_names = list(handlers)
    logging_config = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "json": {
                "()": "nvhp.logging_config.TimezoneAwareJsonFormatter",
                "fmt": "%(timestamp)s %(level)s %(logger)s %(message)s",
                "json_ensure_ascii": False,
                "tz": log_timezone,
            },
            "console": {
                "()": structlog.stdlib.ProcessorFormatter,
                "processors": [
                    structlog.stdlib.ProcessorFormatter.remove_processors_meta,
                    structlog.dev.ConsoleRenderer(colors=False),
                ],
                "foreign_pre_chain": shared_processors,
            },
        },
        "handlers": handlers,
        "loggers": {
            name: {"handlers": handler_names, "level": log_level, "propagate": False}
            for name in LOGGER_NAMES
        },
    }
    logging.config.dictConfig(logging_config)

    structlog.configure(
        processors=shared_processors + [
            structlog.stdlib.ProcessorFormatter.wrap_for_formatter,
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )


def get_logger(name="nvhp", **initial_context):
    """
    Get a structured logger with initial context values.

    Args:
        name: Logger name (one of: nvhp, nvhp.runs, nvhp.system)
        **initial_context: Initial context values to bind

    Returns:
        A structured logger with bound context
    """
    logger = structlog.get_logger(name)
    if initial_context:
        logger = logger.bind(**initial_context)
    return logger
