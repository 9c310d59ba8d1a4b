"""NumPy implementations of the dense kernels behind the training loop.

Drop-in fallback for the compiled extension (same signatures, BLAS-backed).
"""

import numpy as np

BACKEND_NAME = "python"


def affine(x, w, b):
    """x @ w + b for a batch x of shape (n, in), w (in, out), b (out,)."""
    return x @ w + b


def matmul_at_b(a, b):
    """a.T @ b."""
    return a.T @ b


def matmul_a_bt(a, b):
    """a @ b.T."""
    return a @ b.T
