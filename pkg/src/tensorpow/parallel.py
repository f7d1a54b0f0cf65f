"""Order-preserving process-pool map with a serial fallback."""

import os
import pickle
from concurrent.futures import ProcessPoolExecutor


def default_threads():
    return os.cpu_count() or 1


def parallel_map(fn, items, threads=1):
    """``[fn(x) for x in items]``, optionally spread over ``threads`` processes.

    Results come back in input order, so output built from them is identical
    for any thread count.  Work that cannot be pickled runs serially.
    """
    items = list(items)
    if threads is None:
        threads = default_threads()
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    try:
        pickle.dumps(fn)
    except Exception:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * threads))
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items, chunksize=chunk))
