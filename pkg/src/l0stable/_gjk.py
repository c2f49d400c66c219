"""GJK closest points between two convex hulls (points as rows).

Imported normally the helpers are numba-compiled with an on-disk cache.
``kernels`` also executes this file a second time with ``JIT`` preset to
the identity to get the plain Python twin.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

JIT = globals().get("JIT") or (njit(cache=True) if USE_NUMBA else (lambda fn: fn))


@JIT
def _solve_small(m, rhs):
    """Gaussian elimination with partial pivoting; ``ok=False`` when singular."""
    k = m.shape[0]
    a = m.copy()
    b = rhs.copy()
    scale = 0.0
    for i in range(k):
        for j in range(k):
            scale = max(scale, abs(a[i, j]))
    if scale == 0.0:
        return b, False
    for col in range(k):
        piv = col
        for row in range(col + 1, k):
            if abs(a[row, col]) > abs(a[piv, col]):
                piv = row
        if abs(a[piv, col]) <= 1e-13 * scale:
            return b, False
        if piv != col:
            for j in range(k):
                a[col, j], a[piv, j] = a[piv, j], a[col, j]
            b[col], b[piv] = b[piv], b[col]
        for row in range(col + 1, k):
            fac = a[row, col] / a[col, col]
            for j in range(col, k):
                a[row, j] -= fac * a[col, j]
            b[row] -= fac * b[col]
    for row in range(k - 1, -1, -1):
        s = b[row]
        for j in range(row + 1, k):
            s -= a[row, j] * b[j]
        b[row] = s / a[row, row]
    return b, True

@JIT
def _closest_in_simplex(w, count):
    """Closest point to the origin in conv(w[:count]); returns (v, lam, mask)."""
    d = w.shape[1]
    best_norm = np.inf
    best_v = np.zeros(d)
    best_lam = np.zeros(count)
    best_mask = 0
    for mask in range(1, 1 << count):
        idx = np.empty(count, dtype=np.int64)
        s = 0
        for i in range(count):
            if mask & (1 << i):
                idx[s] = i
                s += 1
        lam = np.zeros(count)
        if s == 1:
            lam[idx[0]] = 1.0
        else:
            base = w[idx[0]]
            e = np.empty((s - 1, d))
            for t in range(1, s):
                e[t - 1] = w[idx[t]] - base
            gram = e @ e.T
            rhs = -(e @ base)
            mu, ok = _solve_small(gram, rhs)
            if not ok:
                continue
            total = 0.0
            valid = True
            for t in range(s - 1):
                if mu[t] <= 0.0:
                    valid = False
                total += mu[t]
            if not valid or total >= 1.0:
                continue
            lam[idx[0]] = 1.0 - total
            for t in range(1, s):
                lam[idx[t]] = mu[t - 1]
        v = np.zeros(d)
        for i in range(count):
            v += lam[i] * w[i]
        nv = 0.0
        for k in range(d):
            nv += v[k] * v[k]
        if nv < best_norm:
            best_norm = nv
            best_v = v
            best_lam = lam
            best_mask = mask
    return best_v, best_lam, best_mask

@JIT
def _polytope_distance(a, b):
    d = a.shape[1]
    cap = d + 1
    w = np.zeros((cap + 1, d))
    ia = np.zeros(cap + 1, dtype=np.int64)
    ib = np.zeros(cap + 1, dtype=np.int64)
    w[0] = a[0] - b[0]
    count = 1
    v = w[0].copy()
    lam = np.ones(1)
    scale = 0.0
    for i in range(a.shape[0]):
        for k in range(d):
            scale = max(scale, abs(a[i, k]))
    for i in range(b.shape[0]):
        for k in range(d):
            scale = max(scale, abs(b[i, k]))
    tiny = (1e-13 * max(scale, 1.0)) ** 2
    touching = False
    for _ in range(1000):
        vv = 0.0
        for k in range(d):
            vv += v[k] * v[k]
        if vv <= tiny:
            touching = True
            break
        # support of A - B in direction -v
        ja = 0
        best = np.inf
        for i in range(a.shape[0]):
            s = 0.0
            for k in range(d):
                s += a[i, k] * v[k]
            if s < best:
                best = s
                ja = i
        jb = 0
        best = -np.inf
        for i in range(b.shape[0]):
            s = 0.0
            for k in range(d):
                s += b[i, k] * v[k]
            if s > best:
                best = s
                jb = i
        seen = False
        for t in range(count):
            if ia[t] == ja and ib[t] == jb:
                seen = True
        wv = 0.0
        for k in range(d):
            wv += (a[ja, k] - b[jb, k]) * v[k]
        if seen or vv - wv <= 1e-15 * vv:
            break
        w[count] = a[ja] - b[jb]
        ia[count] = ja
        ib[count] = jb
        count += 1
        v, lam, mask = _closest_in_simplex(w, count)
        keep = 0
        for t in range(count):
            if mask & (1 << t):
                w[keep] = w[t]
                ia[keep] = ia[t]
                ib[keep] = ib[t]
                lam[keep] = lam[t]
                keep += 1
        count = keep
        lam = lam[:count].copy()
        if count == cap:
            touching = True
            break
    pa = np.zeros(d)
    pb = np.zeros(d)
    for t in range(count):
        pa += lam[t] * a[ia[t]]
        pb += lam[t] * b[ib[t]]
    dist = 0.0
    for k in range(d):
        dist += (pa[k] - pb[k]) ** 2
    return np.sqrt(dist), pa, pb, touching

