import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Sequence, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')


def run_tasks(worker: Callable[[T], R], tasks: Sequence[T], jobs: int = 1) -> List[R]:
    """
    Run independent tasks, in order, optionally on a process pool.

    `worker` must be a module-level function and every task picklable
    when jobs > 1.

    Args:
        worker: Function applied to each task
        tasks: Task payloads
        jobs: Number of worker processes (1 = in-process)

    Returns:
        Results in task order
    """
    if jobs <= 1 or len(tasks) < 2:
        return [worker(task) for task in tasks]

    logger.info(f"Dispatching {len(tasks)} tasks to {jobs} worker processes")
    chunk = max(1, len(tasks) // (jobs * 4))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, tasks, chunksize=chunk))
