"""Split an index range into contiguous blocks and run a nogil kernel per block."""

from concurrent.futures import ThreadPoolExecutor

import numpy as np


def block_bounds(n, workers):
    """Contiguous ``[start, stop)`` blocks covering ``range(n)``, at most ``workers`` of them."""
    workers = max(1, min(int(workers), n)) if n else 1
    edges = np.linspace(0, n, workers + 1).astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def run_blocks(kernel, n, workers, *args):
    # Each block writes a disjoint slice of the output, so no locking is needed.
    blocks = block_bounds(n, workers)
    if len(blocks) <= 1:
        for start, stop in blocks:
            kernel(start, stop, *args)
        return
    with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
        futures = [pool.submit(kernel, start, stop, *args) for start, stop in blocks]
        for f in futures:
            f.result()
