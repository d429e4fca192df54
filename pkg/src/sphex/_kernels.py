"""Compiled elementwise loops.

Compiled without fastmath so that every element goes through the same
instruction sequence; symmetric inputs therefore give symmetric outputs.
"""

import numba
import numpy as np

_BLOCK = 1024


@numba.njit(cache=True)
def split_series(t_flat, even, odd, out_flat):
    """out = E(t^2, 1-t^2) + t * O(t^2, 1-t^2) with homogeneous Horner steps.

    ``even``/``odd`` hold coefficients of ``a^(M-i) b^i`` with ``a = t^2`` and
    ``b = 1 - t^2``; ``len(odd) <= len(even)``.  ``t`` must already be clamped.
    """
    n = t_flat.size
    n_even = even.shape[0]
    n_odd = odd.shape[0]
    a = np.empty(_BLOCK)
    b = np.empty(_BLOCK)
    bp = np.empty(_BLOCK)
    e = np.empty(_BLOCK)
    o = np.empty(_BLOCK)
    for start in range(0, n, _BLOCK):
        nb = min(_BLOCK, n - start)
        for i in range(nb):
            t = t_flat[start + i]
            a[i] = t * t
            b[i] = 1.0 - t * t
            bp[i] = 1.0
            e[i] = even[0]
            o[i] = odd[0]
        for r in range(1, n_even):
            c = even[r]
            for i in range(nb):
                bp[i] *= b[i]
                e[i] = e[i] * a[i] + c * bp[i]
            if r < n_odd:
                c = odd[r]
                for i in range(nb):
                    o[i] = o[i] * a[i] + c * bp[i]
        for i in range(nb):
            out_flat[start + i] = e[i] + t_flat[start + i] * o[i]
