from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Any, Callable, Hashable, Iterable, Tuple

from sortedcontainers import SortedDict

from varhom.utils.utils import log

JobSpec = Tuple[Hashable, tuple]


def run_jobs(fn: Callable[..., Any], jobs: Iterable[JobSpec], workers: int = 1) -> SortedDict:
    """
    Run ``fn(*args)`` for every ``(key, args)`` and collect results keyed by job key.

    Results come back in arbitrary order from the pool; the sorted mapping makes every reduction over it
    independent of completion order. ``fn`` must be a module-level function when ``workers > 1``.
    """
    jobs = list(jobs)
    results = SortedDict()
    if workers <= 1 or len(jobs) <= 1:
        for key, args in jobs:
            results[key] = fn(*args)
        return results

    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(fn, *args): key for key, args in jobs}
        for done, future in enumerate(as_completed(futures), start=1):
            results[futures[future]] = future.result()
            if done % max(1, len(jobs) // 10) == 0:
                log.debug(f"{done}/{len(jobs)} jobs finished")
    return results
