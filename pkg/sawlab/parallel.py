"""Run independent enumeration tasks, optionally on a process pool.

Results always come back in task order, so a reduction over them does not depend on how
many workers were used.
"""
import logging
import multiprocessing
from typing import Callable, List, Sequence, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def run_tasks(worker: Callable[[T], R], tasks: Sequence[T], threads: int = 1) -> List[R]:
    """Apply ``worker`` to every task. ``worker`` must be a module-level function."""
    if threads <= 1 or len(tasks) <= 1:
        return [worker(task) for task in tasks]
    processes = min(threads, len(tasks))
    chunksize = max(1, len(tasks) // (4 * processes))
    logger.debug("Dispatching %d tasks to %d processes", len(tasks), processes)
    with multiprocessing.Pool(processes=processes) as pool:
        return list(pool.imap(worker, tasks, chunksize=chunksize))
