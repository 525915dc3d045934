"""numba implementations of the hot loops.

Every function here has a twin in ``_numpy`` with the same signature. Tree
building and centroid assignment agree bit-for-bit across the two; window
features agree to rounding (the numpy twin uses an FFT, this one a direct DFT).
"""
import math

import numpy as np
from numba import njit

from .constants import N_FEATURES

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_NODE_MULT = np.uint64(0xD1B54A32D192ED03)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)


# ---------------------------------------------------------------------------
# window features
# ---------------------------------------------------------------------------

@njit(cache=True)
def _lerp_quantile(s, q):
    pos = q * (s.shape[0] - 1)
    lo = int(math.floor(pos))
    if lo >= s.shape[0] - 1:
        return s[s.shape[0] - 1]
    t = pos - lo
    a = s[lo]
    b = s[lo + 1]
    return a + (b - a) * t


@njit(cache=True)
def _lag_corr(x, k):
    n = x.shape[0] - k
    amin = x[0]
    amax = x[0]
    bmin = x[k]
    bmax = x[k]
    sa = 0.0
    sb = 0.0
    for t in range(n):
        a = x[t]
        b = x[t + k]
        sa += a
        sb += b
        amin = min(amin, a)
        amax = max(amax, a)
        bmin = min(bmin, b)
        bmax = max(bmax, b)
    if amin == amax or bmin == bmax:
        return 0.0
    ma = sa / n
    mb = sb / n
    cab = 0.0
    caa = 0.0
    cbb = 0.0
    for t in range(n):
        da = x[t] - ma
        db = x[t + k] - mb
        cab += da * db
        caa += da * da
        cbb += db * db
    r = cab / math.sqrt(caa * cbb)
    return max(-1.0, min(1.0, r))


@njit(cache=True)
def _window_row(x, out, scratch, srt, hist, cos_t, sin_t):
    w = x.shape[0]
    xmin = x[0]
    xmax = x[0]
    s = 0.0
    for t in range(w):
        s += x[t]
        xmin = min(xmin, x[t])
        xmax = max(xmax, x[t])
    m = s / w
    out[0] = m
    out[2] = xmin
    out[3] = xmax

    srt[:] = x
    srt.sort()
    out[18] = _lerp_quantile(srt, 0.10)
    out[19] = _lerp_quantile(srt, 0.90)
    out[20] = _lerp_quantile(srt, 0.75) - _lerp_quantile(srt, 0.25)

    if xmin == xmax:
        # constant window: dispersion, shape and correlation features are 0
        for j in (1, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 21, 22, 23):
            out[j] = 0.0
        return

    m2 = 0.0
    m3 = 0.0
    m4 = 0.0
    for t in range(w):
        d = x[t] - m
        scratch[t] = d
        d2 = d * d
        m2 += d2
        m3 += d2 * d
        m4 += d2 * d2
    m2 /= w
    m3 /= w
    m4 /= w
    out[1] = math.sqrt(m2)
    out[4] = m3 / m2 ** 1.5
    out[5] = m4 / (m2 * m2) - 3.0

    out[6] = _lag_corr(x, 1)
    out[7] = _lag_corr(x, 2)
    out[8] = _lag_corr(x, 3)

    first_zero = w
    for k in range(1, w):
        c = 0.0
        for t in range(w - k):
            c += scratch[t] * scratch[t + k]
        if c <= 0.0:
            first_zero = k
            break
    out[9] = first_zero

    crossings = 0
    run_hi = 0
    run_lo = 0
    best_hi = 0
    best_lo = 0
    prev_above = x[0] > m
    for t in range(w):
        above = x[t] > m
        below = x[t] < m
        if t > 0 and above != prev_above:
            crossings += 1
        prev_above = above
        run_hi = run_hi + 1 if above else 0
        run_lo = run_lo + 1 if below else 0
        best_hi = max(best_hi, run_hi)
        best_lo = max(best_lo, run_lo)
    out[10] = crossings
    out[11] = best_hi
    out[12] = best_lo

    half = (w - 1) / 2.0
    stt = 0.0
    sty = 0.0
    for t in range(w):
        tc = t - half
        stt += tc * tc
        sty += tc * scratch[t]
    slope = sty / stt
    rss = 0.0
    for t in range(w):
        r = scratch[t] - slope * (t - half)
        rss += r * r
    out[13] = slope
    out[14] = math.sqrt(rss / w)

    pos = 0
    sad = 0.0
    mad = 0.0
    for t in range(1, w):
        dd = x[t] - x[t - 1]
        if dd > 0.0:
            pos += 1
        a = abs(dd)
        sad += a
        mad = max(mad, a)
    out[15] = pos / (w - 1)
    out[16] = sad / (w - 1)
    out[17] = mad

    total = 0.0
    weighted = 0.0
    low = 0.0
    for k in range(1, w // 2 + 1):
        re = 0.0
        im = 0.0
        for t in range(w):
            re += scratch[t] * cos_t[k - 1, t]
            im -= scratch[t] * sin_t[k - 1, t]
        p = re * re + im * im
        total += p
        weighted += (k / w) * p
        if 8 * k < w:
            low += p
    if total > 0.0:
        out[21] = weighted / total
        out[22] = low / total
    else:
        out[21] = 0.0
        out[22] = 0.0

    counts = hist
    counts[:] = 0
    span = xmax - xmin
    for t in range(w):
        b = int((x[t] - xmin) / span * 10.0)
        if b > 9:
            b = 9
        counts[b] += 1
    h = 0.0
    for b in range(10):
        if counts[b] > 0:
            p = counts[b] / w
            h -= p * math.log(p)
    out[23] = h


@njit(cache=True)
def window_features(values, w):
    n = values.shape[0]
    out = np.empty((n, N_FEATURES), dtype=np.float64)
    buf = np.empty(w, dtype=np.float64)
    scratch = np.empty(w, dtype=np.float64)
    srt = np.empty(w, dtype=np.float64)
    hist = np.zeros(10, dtype=np.int64)
    # DFT tables for k = 1..w/2
    cos_t = np.empty((w // 2, w), dtype=np.float64)
    sin_t = np.empty((w // 2, w), dtype=np.float64)
    for k in range(1, w // 2 + 1):
        for t in range(w):
            ang = 2.0 * math.pi * k * t / w
            cos_t[k - 1, t] = math.cos(ang)
            sin_t[k - 1, t] = math.sin(ang)
    first = values[0]
    for i in range(n):
        for j in range(w):
            src = i - w + 1 + j
            buf[j] = values[src] if src >= 0 else first
        _window_row(buf, out[i], scratch, srt, hist, cos_t, sin_t)
    return out


# ---------------------------------------------------------------------------
# nearest centroid
# ---------------------------------------------------------------------------

@njit(cache=True)
def nearest_centroid(X, C):
    n, d = X.shape
    k = C.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.float64)
    for i in range(n):
        best = np.inf
        arg = 0
        for c in range(k):
            s = 0.0
            for j in range(d):
                diff = X[i, j] - C[c, j]
                s += diff * diff
            if s < best:
                best = s
                arg = c
        labels[i] = arg
        dist[i] = best
    return labels, dist


# ---------------------------------------------------------------------------
# CART
# ---------------------------------------------------------------------------

@njit(cache=True)
def _splitmix(state):
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return state, z ^ (z >> _S31)


@njit(cache=True)
def build_tree(X, y, counts, order, max_features, max_depth, min_samples_split,
               min_samples_leaf, tree_seed):
    n, n_feat = X.shape
    m = 0
    for s in range(n):
        if counts[s] > 0:
            m += 1
    # per-feature in-bag samples in ascending feature order
    S = np.empty((n_feat, m), dtype=np.int64)
    for f in range(n_feat):
        p = 0
        for q in range(n):
            s = order[f, q]
            if counts[s] > 0:
                S[f, p] = s
                p += 1

    cap = 2 * m + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    count0 = np.zeros(cap, dtype=np.int64)
    count1 = np.zeros(cap, dtype=np.int64)

    st_node = np.empty(cap, dtype=np.int64)
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = m
    st_depth[0] = 0
    top = 1
    n_nodes = 1

    perm = np.empty(n_feat, dtype=np.int64)
    go_left = np.zeros(n, dtype=np.bool_)
    buf = np.empty(m, dtype=np.int64)
    seed = np.uint64(tree_seed)

    while top > 0:
        top -= 1
        node = st_node[top]
        start = st_start[top]
        end = st_end[top]
        depth = st_depth[top]
        wn = 0
        c1 = 0
        for p in range(start, end):
            s = S[0, p]
            wn += counts[s]
            c1 += counts[s] * y[s]
        c0 = wn - c1
        count0[node] = c0
        count1[node] = c1
        if (c0 == 0 or c1 == 0 or wn < min_samples_split
                or wn < 2 * min_samples_leaf
                or (max_depth >= 0 and depth >= max_depth)):
            continue

        for f in range(n_feat):
            perm[f] = f
        state = seed ^ (np.uint64(node) * _NODE_MULT)

        best_score = np.inf
        best_f = -1
        best_thr = 0.0
        visited = 0
        for r in range(n_feat):
            if visited >= max_features:
                break
            state, z = _splitmix(state)
            j = r + int(z % np.uint64(n_feat - r))
            tmp = perm[r]
            perm[r] = perm[j]
            perm[j] = tmp
            f = perm[r]

            if X[S[f, start], f] == X[S[f, end - 1], f]:
                continue
            visited += 1
            wl = 0
            l1 = 0
            for p in range(start + 1, end):
                prev = S[f, p - 1]
                wl += counts[prev]
                l1 += counts[prev] * y[prev]
                lo = X[prev, f]
                hi = X[S[f, p], f]
                if not hi > lo:
                    continue
                if wl < min_samples_leaf or wn - wl < min_samples_leaf:
                    continue
                nl = float(wl)
                nr = float(wn - wl)
                fl1 = float(l1)
                fl0 = nl - fl1
                fr1 = float(c1) - fl1
                fr0 = nr - fr1
                score = (nl - (fl0 * fl0 + fl1 * fl1) / nl) + (nr - (fr0 * fr0 + fr1 * fr1) / nr)
                if score < best_score or (score == best_score and f < best_f):
                    thr = lo / 2.0 + hi / 2.0
                    if thr >= hi or not np.isfinite(thr):
                        thr = lo
                    best_score = score
                    best_f = f
                    best_thr = thr

        if best_f < 0:
            continue

        n_left = 0
        for p in range(start, end):
            s = S[0, p]
            gl = X[s, best_f] <= best_thr
            go_left[s] = gl
            if gl:
                n_left += 1
        mid = start + n_left
        # stable partition of every feature's segment
        for f in range(n_feat):
            a = start
            b = 0
            for p in range(start, end):
                s = S[f, p]
                if go_left[s]:
                    S[f, a] = s
                    a += 1
                else:
                    buf[b] = s
                    b += 1
            for q in range(b):
                S[f, mid + q] = buf[q]

        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = lnode
        right[node] = rnode
        st_node[top] = rnode
        st_start[top] = mid
        st_end[top] = end
        st_depth[top] = depth + 1
        top += 1
        st_node[top] = lnode
        st_start[top] = start
        st_end[top] = mid
        st_depth[top] = depth + 1
        top += 1

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), count0[:n_nodes].copy(), count1[:n_nodes].copy())


@njit(cache=True)
def tree_predict(X, feature, threshold, left, right, leaf_p, root):
    n = X.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        node = root
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = leaf_p[node]
    return out


@njit(cache=True)
def forest_predict(X, feature, threshold, left, right, leaf_p, roots):
    n = X.shape[0]
    out = np.zeros(n, dtype=np.float64)
    for i in range(n):
        acc = 0.0
        for t in range(roots.shape[0]):
            node = roots[t]
            while feature[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            acc += leaf_p[node]
        out[i] = acc / roots.shape[0]
    return out
