"""Pure numpy versions of the hot kernels.

Every routine here performs the same floating-point operations, in the same
order, as its twin in ``_ckernels.pyx``, so both backends return
bit-identical results.
"""

import numpy as np

MAD_SCALE = 1.4826


def scan_projection(y):
    """Summarise one projected sample.

    Returns ``(gap, left, median, mad, far, far_dist)`` where ``gap`` is the
    largest spacing of the sorted values (``left`` its 0-based interval,
    first one on ties), ``mad`` the raw median absolute deviation and
    ``far`` the first position maximising ``|y - median|``.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    s = np.sort(y)
    d = s[1:] - s[:-1]
    left = int(np.argmax(d))
    med = float(np.median(s))
    dev = np.abs(y - med)
    far = int(np.argmax(dev))
    mad = float(np.median(dev))
    return float(d[left]), left, med, mad, far, float(dev[far])


def studentized_max_gaps(z):
    """Row-wise ``max_gap / (1.4826 * MAD)`` for a reps x m sample matrix."""
    z = np.ascontiguousarray(z, dtype=np.float64)
    s = np.sort(z, axis=1)
    g = (s[:, 1:] - s[:, :-1]).max(axis=1)
    med = np.median(s, axis=1)
    mad = np.median(np.abs(z - med[:, None]), axis=1)
    return g / (MAD_SCALE * mad)


def alpha_radii(x, k):
    """k-th smallest Euclidean distance from each row to all rows (self included)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    n, d = x.shape
    d2 = np.zeros((n, n))
    # sequential over coordinates, matching the compiled loop order
    for c in range(d):
        diff = x[:, c, None] - x[None, :, c]
        d2 += diff * diff
    d2.sort(axis=1)
    return np.sqrt(d2[:, k - 1])
