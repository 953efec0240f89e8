"""Decorator that logs how long a call took."""

import logging
import time
from functools import wraps
from typing import Any, Callable, Optional

logger = logging.getLogger(__name__)


def log_duration(label: Optional[str] = None, level: int = logging.INFO) -> Callable:
    """Log the wall-clock duration of each call and keep it on ``wrapper.last_duration``."""

    def decorator(func: Callable) -> Callable:
        name = label or func.__qualname__

        @wraps(func)
        def wrapper(*args, **kwargs) -> Any:
            start_time = time.perf_counter()
            try:
                result = func(*args, **kwargs)
            except Exception as exc:
                wrapper.last_duration = time.perf_counter() - start_time
                logger.warning("%s failed after %d ms: %s", name, int(wrapper.last_duration * 1000), exc)
                raise
            wrapper.last_duration = time.perf_counter() - start_time
            logger.log(level, "%s took %d ms", name, int(wrapper.last_duration * 1000))
            return result

        wrapper.last_duration = 0.0
        return wrapper

    return decorator
