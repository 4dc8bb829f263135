"""Sylvester Hadamard matrices and the fast Walsh-Hadamard transform.

The binary matrix convention is 0/1 with an all-ones first row and column;
the bipolar form is B = 2*rows - 1, which is symmetric and satisfies
B @ B = N * I. All transforms run in the bipolar domain.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import SizeError

MAX_ORDER_LOG2 = 16
# Largest N for which the dense 0/1 matrix may be materialized. Modem paths
# never need it; only tests, the MMSE weights and the interleaver search do.
DENSE_LIMIT = 256


@lru_cache(maxsize=None)
def _dense_rows(order_log2: int) -> np.ndarray:
    rows = np.array([[1]], dtype=np.int64)
    for _ in range(order_log2):
        rows = np.block([[rows, rows], [rows, 1 - rows]])
    rows.setflags(write=False)
    return rows


@dataclass(frozen=True)
class BinaryHadamard:
    """Sylvester Hadamard matrix of order n = 2**order_log2."""

    order_log2: int
    n: int

    @property
    def rows(self) -> np.ndarray:
        """Dense 0/1 matrix; only available up to DENSE_LIMIT."""
        if self.n > DENSE_LIMIT:
            raise SizeError(
                f"dense Hadamard matrix limited to n <= {DENSE_LIMIT}, got {self.n}"
            )
        return _dense_rows(self.order_log2)

    @property
    def bipolar(self) -> np.ndarray:
        """Bipolar +/-1 matrix B = 2*rows - 1."""
        return 2 * self.rows - 1

    @property
    def complement(self) -> np.ndarray:
        return 1 - self.rows


def sylvester(order_log2: int) -> BinaryHadamard:
    """Build the binary Sylvester Hadamard matrix of order 2**order_log2."""
    if not 0 <= order_log2 <= MAX_ORDER_LOG2:
        raise SizeError(f"order_log2 must be in [0, {MAX_ORDER_LOG2}], got {order_log2}")
    return BinaryHadamard(order_log2=order_log2, n=1 << order_log2)


def fwht(v: np.ndarray, axis: int = -1) -> np.ndarray:
    """Multiply by the bipolar Sylvester Hadamard matrix in O(N log N).

    Equivalent to (2*rows - 1) @ v without materializing the matrix. Accepts
    any array and transforms along `axis`; leading axes are treated as a
    batch. Since B is symmetric with B @ B = N*I, applying fwht twice
    returns N times the input.
    """
    a = np.asarray(v, dtype=np.float64)
    n = a.shape[axis]
    if n == 0 or n & (n - 1):
        raise SizeError(f"fwht length must be a power of two, got {n}")
    a = np.moveaxis(a, axis, -1).copy()
    h = 1
    while h < n:
        pairs = a.reshape(*a.shape[:-1], -1, 2, h)
        top = pairs[..., 0, :] + pairs[..., 1, :]
        bot = pairs[..., 0, :] - pairs[..., 1, :]
        pairs[..., 0, :] = top
        pairs[..., 1, :] = bot
        h *= 2
    return np.moveaxis(a, -1, axis)


def cyclic_shift(v: np.ndarray, ell: int) -> np.ndarray:
    """Right cyclic shift by ell positions: out[i] = v[(i - ell) mod N]."""
    return np.roll(np.asarray(v), ell, axis=-1)
