import functools
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, TypeVar

import torch
from tqdm import tqdm

T = TypeVar("T")


class ThreadCap:
    """Caps torch intra-op threads for the duration of a block and restores the previous setting."""

    def __init__(self, threads: int):
        self.threads = max(1, int(threads))
        self.previous = None

    def __enter__(self):
        self.previous = torch.get_num_threads()
        torch.set_num_threads(self.threads)
        return self

    def __exit__(self, *args):
        torch.set_num_threads(self.previous)


def thread_capped(func: Callable[..., T]) -> Callable[..., T]:
    """Run `func` under a `ThreadCap` taken from its `threads` keyword, when one is given."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        threads = kwargs.get("threads")
        if threads is None:
            return func(*args, **kwargs)
        with ThreadCap(threads):
            return func(*args, **kwargs)

    return wrapper


def map_trials(
    work: Callable[[int], T],
    count: int,
    threads: Optional[int] = 1,
    progress: bool = False,
    desc: str = "trials",
) -> List[T]:
    """
    Evaluate `work(i)` for i in range(count) and return the results in index order.

    Each unit draws from its own seed stream, so the result list is identical for any worker count.
    """
    threads = max(1, int(threads or 1))
    bar = tqdm(total=count, desc=desc, leave=False, disable=not progress)
    try:
        if threads == 1 or count <= 1:
            results = []
            for i in range(count):
                results.append(work(i))
                bar.update(1)
            return results

        def tracked(i):
            result = work(i)
            bar.update(1)
            return result

        # workers share the cores, each runs its torch ops single-threaded
        with ThreadCap(1), ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(tracked, range(count)))
    finally:
        bar.close()
