"""
Async utilities for event loop management and order-preserving parallel maps
"""

import asyncio
import atexit
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Coroutine, List, Sequence, TypeVar

T = TypeVar('T')
R = TypeVar('R')

logger = logging.getLogger(__name__)


class AsyncContextManager:
    """Centralized async context manager for proper cleanup"""

    def __init__(self):
        self._loop = None
        self._cleanup_registered = False

    def get_or_create_loop(self):
        """Get existing event loop or create a new one"""
        if self._loop is None or self._loop.is_closed():
            self._loop = asyncio.new_event_loop()
            asyncio.set_event_loop(self._loop)

        # Register cleanup on exit if not already done
        if not self._cleanup_registered:
            atexit.register(self._cleanup)
            self._cleanup_registered = True

        return self._loop

    def run_async(self, coro: Coroutine[Any, Any, T]) -> T:
        """Run async coroutine on the managed loop"""
        loop = self.get_or_create_loop()
        if loop.is_running():
            raise RuntimeError("run_async called from inside a running event loop")
        return loop.run_until_complete(coro)

    def _cleanup(self):
        """Cleanup async resources properly"""
        if self._loop and not self._loop.is_closed():
            try:
                pending = asyncio.all_tasks(self._loop)
                for task in pending:
                    task.cancel()
                if pending:
                    self._loop.run_until_complete(
                        asyncio.gather(*pending, return_exceptions=True)
                    )
                self._loop.close()
            except Exception:
                # Ignore cleanup errors to prevent exit issues
                pass


# Global instance
async_manager = AsyncContextManager()


def run_async_safe(coro: Coroutine[Any, Any, T]) -> T:
    """Safe wrapper for running async coroutines"""
    return async_manager.run_async(coro)


class ParallelExecutor:
    """Order-preserving map over a process pool.

    ``workers == 1`` runs inline. Otherwise tasks are fanned out with
    ``run_in_executor`` and collected with ``asyncio.gather``, which returns
    results in submission order, so reductions downstream see the same
    sequence for any worker count. Callables must be picklable (module level).
    """

    def __init__(self, workers: int = 1):
        self.workers = max(1, int(workers))

    def map(self, fn: Callable[[T], R], items: Sequence[T]) -> List[R]:
        items = list(items)
        if self.workers == 1 or len(items) <= 1:
            return [fn(item) for item in items]
        logger.debug("Dispatching %d tasks to %d workers", len(items), self.workers)
        return run_async_safe(self._map_async(fn, items))

    async def _map_async(self, fn: Callable[[T], R], items: List[T]) -> List[R]:
        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(max_workers=min(self.workers, len(items))) as pool:
            futures = [loop.run_in_executor(pool, fn, item) for item in items]
            return list(await asyncio.gather(*futures))
