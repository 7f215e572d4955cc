"""Central finite differences with one Richardson step, for checking analytic derivatives."""

import itertools
from typing import Callable, Sequence

import numpy as np


def _product_stencil(f: Callable[[np.ndarray], float], x: np.ndarray, indices: Sequence[int], step: float) -> float:
    # product of first-order central differences along each index; exact to O(step^2)
    total = 0.0
    for signs in itertools.product((1.0, -1.0), repeat=len(indices)):
        shifted = np.array(x, dtype=float)
        for sign, index in zip(signs, indices):
            shifted[index] += sign * step
        total += np.prod(signs) * f(shifted)
    return total / (2.0 * step) ** len(indices)


def partial(f: Callable[[np.ndarray], float], x: Sequence[float], indices: Sequence[int],
            step: float = 1e-3) -> float:
    """
    Mixed partial derivative of ``f`` at ``x`` along ``indices`` (repeats allowed).

    The O(step^2) error of the central stencil is removed by combining steps h and h/2.
    """
    x = np.asarray_chkfinite(x, dtype=float)
    coarse = _product_stencil(f, x, indices, step)
    fine = _product_stencil(f, x, indices, step / 2.0)
    return (4.0 * fine - coarse) / 3.0


def hessian(f: Callable[[np.ndarray], float], x: Sequence[float], step: float = 2e-3) -> np.ndarray:
    n = len(x)
    result = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            result[i, j] = result[j, i] = partial(f, x, (i, j), step)
    return result


def third_derivatives(f: Callable[[np.ndarray], float], x: Sequence[float], step: float = 1e-2) -> np.ndarray:
    n = len(x)
    result = np.empty((n, n, n))
    for i, j, k in itertools.combinations_with_replacement(range(n), 3):
        value = partial(f, x, (i, j, k), step)
        for p in set(itertools.permutations((i, j, k))):
            result[p] = value
    return result
