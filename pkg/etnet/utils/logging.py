import json
import logging
import os
import sys
import time
from datetime import datetime
from functools import wraps
from typing import Any, Callable, Dict, Optional, TypeVar

import numpy as np

# Configure logging
logger = logging.getLogger("etnet")
logger.setLevel(os.getenv("ETNET_LOG_LEVEL", "INFO").upper())

F = TypeVar("F", bound=Callable[..., Any])


def configure(level: Optional[str] = None) -> None:
    """Attach a stderr handler once and set the level"""
    if not any(getattr(h, "_etnet", False) for h in logger.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(message)s"))
        handler._etnet = True  # type: ignore[attr-defined]
        logger.addHandler(handler)
    if level:
        logger.setLevel(level.upper())


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


def log_event(
    event_type: str, data: Dict[str, Any], run_id: Optional[str] = None
) -> None:
    """Log a structured event as one JSON line"""
    log_data = {
        "event_type": event_type,
        "timestamp": datetime.now().isoformat(),
        "run_id": run_id,
        "data": data,
    }
    logger.info(json.dumps(log_data, default=_jsonable))


def log_metrics(
    namespace: str, metrics: Dict[str, float], run_id: Optional[str] = None
) -> None:
    """Log numeric metrics under a namespace"""
    log_event(
        "metrics",
        {"namespace": namespace, "values": {k: float(v) for k, v in metrics.items()}},
        run_id,
    )


def track_run(command: str) -> Callable[[F], F]:
    """Decorator to log start, end and failure of a CLI command"""

    def decorator(func: F) -> F:
        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            start_time = time.time()
            log_event("run_start", {"command": command})

            try:
                result = func(*args, **kwargs)
            except Exception as e:
                log_event(
                    "run_error",
                    {
                        "command": command,
                        "error": str(e),
                        "error_type": type(e).__name__,
                        "duration": time.time() - start_time,
                    },
                )
                raise

            log_event(
                "run_end",
                {
                    "command": command,
                    "duration": time.time() - start_time,
                    "success": True,
                },
            )
            return result

        return wrapper  # type: ignore[return-value]

    return decorator
