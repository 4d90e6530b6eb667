"""NumPy implementation of the single-step kernel (always available)."""

import numpy as np


def step_kernel(amp: np.ndarray, coin: np.ndarray) -> np.ndarray:
    """
    Coin flip on every site followed by the conditional shift.

    ``amp`` has shape (n, n, 3) and is centred on the origin; the result has
    shape (n + 2, n + 2, 3), again centred, so the window grows by one ring.
    """
    n = amp.shape[0]
    flipped = amp @ coin.T
    out = np.zeros((n + 2, n + 2, 3), dtype=np.complex128)
    out[2:, 1:-1, 0] = flipped[:, :, 0]    # e1: (a, b) -> (a + 1, b)
    out[1:-1, 2:, 1] = flipped[:, :, 1]    # e2: (a, b) -> (a, b + 1)
    out[:-2, :-2, 2] = flipped[:, :, 2]    # e3: (a, b) -> (a - 1, b - 1)
    return out
