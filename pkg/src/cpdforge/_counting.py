import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def family_counts(rows: np.ndarray, cards, var: int, parents) -> np.ndarray:
    """Contingency table N[parent_config, state] for one family.

    Parent configurations are mixed-radix with the first parent most
    significant.
    """
    q = 1
    config = np.zeros(rows.shape[0], dtype=np.int64)
    for p in parents:
        config = config * cards[p] + rows[:, p]
        q *= cards[p]
    r = cards[var]
    flat = np.bincount(config * r + rows[:, var], minlength=q * r)
    return flat.reshape(q, r)


def config_index(cards, parents, states) -> int:
    idx = 0
    for p, s in zip(parents, states):
        idx = idx * cards[p] + s
    return idx


def config_states(cards, parents, index: int) -> tuple[int, ...]:
    out = []
    for p in reversed(parents):
        index, s = divmod(index, cards[p])
        out.append(s)
    return tuple(reversed(out))


def worker_count() -> int:
    env = os.environ.get("CPDFORGE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


def ordered_map(fn, items):
    """``list(map(fn, items))``, threaded when more than one worker is allowed."""
    items = list(items)
    n = worker_count()
    if n <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
