from concurrent.futures import ProcessPoolExecutor


def map_jobs(func, items, jobs=1):
    """``list(map(func, items))``, optionally over a process pool.

    Results come back in input order, so callers stay deterministic whatever
    the worker count.
    """
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    chunk = max(1, len(items) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items, chunksize=chunk))
