"""Pure-numpy windowed weighted-median kernels.

Reference implementation of the hot loops; ``_ckernels`` must agree with it
bit for bit.  Inputs: ``x`` sorted ascending, ``y`` aligned with ``x``,
``group`` the owning profile index of each point.  Empty windows yield NaN.
"""
import numpy as np

from .kernels import kernel_weights


def _window(x, y, g, bandwidth, code, off, absolute):
    lo = np.searchsorted(x, g - bandwidth, side="left")
    hi = np.searchsorted(x, g + bandwidth, side="right")
    u = (x[lo:hi] - g) / bandwidth
    w = kernel_weights(u, code)
    keep = w > 0.0
    v = y[lo:hi] - off
    if absolute:
        v = np.abs(v)
    # stable sort on values keeps ties in index order (same total order as C)
    order = np.argsort(v[keep], kind="stable")
    idx = np.flatnonzero(keep)[order]
    return v[idx], w[idx], lo + idx


def window_medians(x, y, grid, bandwidth, code, offset=None, absolute=False):
    out = np.empty(len(grid))
    for k, g in enumerate(grid):
        off = 0.0 if offset is None else offset[k]
        v, w, _ = _window(x, y, g, bandwidth, code, off, absolute)
        if len(v) == 0:
            out[k] = np.nan
            continue
        cum = np.cumsum(w)
        half = cum[-1] * 0.5
        out[k] = v[np.searchsorted(cum, half, side="left")]
    return out


def loo_window_medians(x, y, group, n_groups, grid, bandwidth, code,
                       offset=None, absolute=False):
    out = np.full((n_groups, len(grid)), np.nan)
    rows = np.arange(n_groups)[:, None]
    for k, g in enumerate(grid):
        off = 0.0 if offset is None else offset[k]
        v, w, pos = _window(x, y, g, bandwidth, code, off, absolute)
        if len(v) == 0:
            continue
        wm = np.where(group[pos][None, :] == rows, 0.0, w[None, :])
        cum = np.cumsum(wm, axis=1)
        total = cum[:, -1]
        half = total * 0.5
        first = np.argmax(cum >= half[:, None], axis=1)
        ok = total > 0.0
        out[ok, k] = v[first[ok]]
    return out
