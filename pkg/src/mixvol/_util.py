from __future__ import annotations

import functools

import numpy as np


@functools.lru_cache(maxsize=64)
def zero_sum_basis(n: int) -> np.ndarray:
    """Orthonormal basis (n x (n-1) columns) of the hyperplane sum(y) = 0."""
    if n == 1:
        return np.zeros((1, 0))
    M = np.eye(n)[:, : n - 1] - np.eye(n)[:, 1:]
    q, _ = np.linalg.qr(M)
    q.flags.writeable = False
    return q


def project_zero_sum(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return y - y.mean()


def derive_seed(master: int, counter: int) -> int:
    """Deterministic 64-bit child seed for the ``counter``-th random call."""
    state = np.random.SeedSequence([master & 0xFFFFFFFFFFFFFFFF, counter]).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])
