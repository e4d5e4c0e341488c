"""Hot loops: sliding-window maxima, offset maxima and edge binning.

Each kernel has a numba implementation and an independent pure-numpy one.
The module-level names (``sliding_max``, ``offset_max``, ``bin_counts``)
dispatch to whichever backend ``_accel`` selected; ``NUMPY`` and ``NUMBA``
expose both for cross-checking and benchmarking.
"""

from types import SimpleNamespace

import numpy as np

from ._accel import BACKEND, HAS_NUMBA, njit

__all__ = [
    "BACKEND",
    "NUMBA",
    "NUMPY",
    "bin_counts",
    "offset_max",
    "pruning_order",
    "sliding_max",
]


def _check_window(n, width):
    if width < 1:
        raise ValueError(f"window width must be >= 1, got {width}")
    if width > n:
        raise ValueError(f"window of {width} samples is longer than the series ({n})")


def pruning_order(offsets):
    """Indices of the finite offsets, smallest offset first (stable)."""
    offsets = np.asarray(offsets, dtype=np.float64)
    order = np.argsort(offsets, kind="stable")
    return order[np.isfinite(offsets[order])].astype(np.int64)


# -- pure numpy -------------------------------------------------------------


def _sliding_max_np(x, width):
    # van Herk / Gil-Werman: block prefix and suffix maxima, O(n) for any width.
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    _check_window(n, width)
    if width == 1:
        return x.copy()
    nblocks = -(-n // width)
    padded = np.full(nblocks * width, -np.inf)
    padded[:n] = x
    blocks = padded.reshape(nblocks, width)
    prefix = np.maximum.accumulate(blocks, axis=1).ravel()
    suffix = np.maximum.accumulate(blocks[:, ::-1], axis=1)[:, ::-1].ravel()
    m = n - width + 1
    return np.maximum(suffix[:m], prefix[width - 1 : width - 1 + m])


def _offset_max_np(x, offsets, order, window_max, n_out):
    x = np.asarray(x, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.float64)
    best = np.full(n_out, -np.inf)
    active = np.arange(n_out)
    top = window_max[:n_out]
    for j in order:
        dj = offsets[j]
        active = active[top[active] - dj > best[active]]
        if active.size == 0:
            break
        best[active] = np.maximum(best[active], x[active + j] - dj)
    return best


def _bin_counts_np(values, right_edges):
    idx = np.searchsorted(right_edges, values, side="left")
    np.minimum(idx, right_edges.shape[0] - 1, out=idx)
    return np.bincount(idx, minlength=right_edges.shape[0]).astype(np.int64)


NUMPY = SimpleNamespace(
    name="numpy",
    sliding_max=_sliding_max_np,
    offset_max=_offset_max_np,
    bin_counts=_bin_counts_np,
)


# -- numba -----------------------------------------------------------------

NUMBA = None

if HAS_NUMBA:

    @njit(cache=True, nogil=True)
    def _sliding_max_deque(x, width):
        n = x.shape[0]
        m = n - width + 1
        out = np.empty(m)
        dq = np.empty(n, np.int64)
        head = 0
        tail = 0
        for i in range(n):
            while tail > head and x[dq[tail - 1]] <= x[i]:
                tail -= 1
            dq[tail] = i
            tail += 1
            if dq[head] <= i - width:
                head += 1
            if i >= width - 1:
                out[i - width + 1] = x[dq[head]]
        return out

    @njit(cache=True, nogil=True)
    def _offset_max_loop(x, offsets, order, window_max, n_out):
        out = np.empty(n_out)
        for t0 in range(n_out):
            best = -np.inf
            top = window_max[t0]
            for jj in range(order.shape[0]):
                j = order[jj]
                dj = offsets[j]
                # offsets ascend along order, so nothing later can beat best
                if top - dj <= best:
                    break
                v = x[t0 + j] - dj
                if v > best:
                    best = v
            out[t0] = best
        return out

    @njit(cache=True, nogil=True)
    def _bin_counts_loop(values, right_edges):
        nb = right_edges.shape[0]
        counts = np.zeros(nb, np.int64)
        e0 = right_edges[0]
        step = (right_edges[nb - 1] - e0) / (nb - 1) if nb > 1 else 1.0
        for i in range(values.shape[0]):
            v = values[i]
            # guess from the (nominally uniform) spacing, then walk to the
            # first edge >= v, so any ascending edges stay exact
            g = (v - e0) / step
            if g <= 0.0:
                k = 0
            elif g >= nb - 1:
                k = nb - 1
            else:
                k = int(g)
            while k > 0 and right_edges[k - 1] >= v:
                k -= 1
            while k < nb - 1 and right_edges[k] < v:
                k += 1
            counts[k] += 1
        return counts

    def _sliding_max_nb(x, width):
        x = np.ascontiguousarray(x, dtype=np.float64)
        _check_window(x.shape[0], width)
        return _sliding_max_deque(x, int(width))

    def _offset_max_nb(x, offsets, order, window_max, n_out):
        return _offset_max_loop(
            np.ascontiguousarray(x, dtype=np.float64),
            np.ascontiguousarray(offsets, dtype=np.float64),
            np.ascontiguousarray(order, dtype=np.int64),
            np.ascontiguousarray(window_max, dtype=np.float64),
            int(n_out),
        )

    def _bin_counts_nb(values, right_edges):
        return _bin_counts_loop(
            np.ascontiguousarray(values, dtype=np.float64),
            np.ascontiguousarray(right_edges, dtype=np.float64),
        )

    NUMBA = SimpleNamespace(
        name="numba",
        sliding_max=_sliding_max_nb,
        offset_max=_offset_max_nb,
        bin_counts=_bin_counts_nb,
    )


_ACTIVE = NUMBA if BACKEND == "numba" else NUMPY


def sliding_max(x, width):
    """Maximum of every length-``width`` window: ``out[i] = max(x[i:i+width])``."""
    return _ACTIVE.sliding_max(x, width)


def offset_max(x, offsets, n_out, window_max=None):
    """``out[t0] = max_j (x[t0+j] - offsets[j])`` for ``t0 < n_out``.

    Infinite offsets mark excluded lags. The search visits lags in order of
    increasing offset and stops once the window maximum minus the next offset
    cannot beat the running best, so the result is exact.
    """
    x = np.asarray(x, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.float64)
    if n_out < 0 or n_out + offsets.shape[0] - 1 > x.shape[0]:
        raise ValueError("offset window runs past the end of the series")
    if window_max is None:
        window_max = sliding_max(x[: n_out + offsets.shape[0] - 1], offsets.shape[0])
    return _ACTIVE.offset_max(x, offsets, pruning_order(offsets), window_max, n_out)


def bin_counts(values, right_edges):
    """Histogram into the first bin whose right edge is >= the value.

    Values beyond the last right edge land in the last bin.
    """
    return _ACTIVE.bin_counts(
        np.asarray(values, dtype=np.float64), np.asarray(right_edges, dtype=np.float64)
    )
