"""Ordered parallel mapping with a bounded prefetch window.

Results come back in submission order no matter how many workers run, so
reductions downstream stay deterministic; with threads <= 1 the work runs
inline.  The heavy lifting inside workers is numpy, which releases the GIL.
"""

from __future__ import annotations

import itertools
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Iterator, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int) -> Iterator[R]:
    if threads <= 1:
        for item in items:
            yield fn(item)
        return
    items = iter(items)
    with ThreadPoolExecutor(max_workers=threads) as ex:
        window: deque = deque()
        for item in itertools.islice(items, 2 * threads):
            window.append(ex.submit(fn, item))
        while window:
            result = window.popleft().result()
            for item in itertools.islice(items, 1):
                window.append(ex.submit(fn, item))
            yield result
