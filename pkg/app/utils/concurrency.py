from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar
import logging

from app.core.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(func: Callable[[T], R], items: Iterable[T], max_workers: Optional[int] = None) -> List[R]:
    """Apply func to every item, results in input order regardless of thread count"""
    tasks = list(items)
    workers = max_workers or settings.max_workers
    if workers <= 1 or len(tasks) <= 1:
        return [func(task) for task in tasks]

    logger.debug(f"Dispatching {len(tasks)} tasks to {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks))
