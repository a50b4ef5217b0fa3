from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

from tqdm import tqdm

from pwavep.core.settings import get_settings

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(
    fn: Callable[[T], R],
    items: Sequence[T],
    threads: Optional[int] = None,
    progress: bool = False,
    desc: Optional[str] = None,
) -> List[R]:
    """
    Ordered thread-pool map.

    Args:
        fn: Function applied to every item
        items: Inputs
        threads: Worker count, defaults to settings.threads
        progress: Show a tqdm bar
        desc: Progress bar label

    Returns:
        Results in input order
    """
    threads = threads or get_settings().threads
    if threads == 1:
        iterator = map(fn, items)
        if progress:
            iterator = tqdm(iterator, total=len(items), desc=desc)
        return list(iterator)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = pool.map(fn, items)
        if progress:
            results = tqdm(results, total=len(items), desc=desc)
        return list(results)
