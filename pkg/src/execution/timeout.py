"""Timeout utilities for reference runs.

This module provides a timeout wrapper for async operations.
"""

import asyncio
from collections.abc import Coroutine
from typing import Any, TypeVar

T = TypeVar("T")


async def with_timeout(coro: Coroutine[Any, Any, T], timeout_seconds: float | None) -> T | None:
    """Await a coroutine, giving up after a timeout.

    Args:
        coro: The coroutine to await
        timeout_seconds: Limit in seconds, None for no limit

    Returns:
        The coroutine result, or None if the limit was reached

    Note:
        A solve running in a worker thread cannot be interrupted; it keeps
        running to completion in the background and its result is discarded.
    """
    if timeout_seconds is None:
        return await coro
    try:
        return await asyncio.wait_for(coro, timeout=timeout_seconds)
    except TimeoutError:
        return None
