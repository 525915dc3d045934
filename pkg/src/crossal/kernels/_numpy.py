"""Pure-numpy twins of the numba kernels (same signatures, same outputs)."""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .constants import N_FEATURES

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_NODE_MULT = 0xD1B54A32D192ED03

_CHUNK = 1 << 14


# ---------------------------------------------------------------------------
# window features
# ---------------------------------------------------------------------------

def _lerp_quantile(S, q):
    w = S.shape[1]
    pos = q * (w - 1)
    lo = int(np.floor(pos))
    if lo >= w - 1:
        return S[:, w - 1].copy()
    t = pos - lo
    a = S[:, lo]
    b = S[:, lo + 1]
    return a + (b - a) * t


def _seq_sum(A):
    # left-to-right accumulation, matching the scalar kernels
    acc = np.zeros(A.shape[0])
    for j in range(A.shape[1]):
        acc += A[:, j]
    return acc


def _lag_corr(W, k):
    a = W[:, :-k]
    b = W[:, k:]
    n = a.shape[1]
    const = (a.min(axis=1) == a.max(axis=1)) | (b.min(axis=1) == b.max(axis=1))
    da = a - (_seq_sum(a) / n)[:, None]
    db = b - (_seq_sum(b) / n)[:, None]
    cab = _seq_sum(da * db)
    caa = _seq_sum(da * da)
    cbb = _seq_sum(db * db)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = cab / np.sqrt(caa * cbb)
    r = np.clip(r, -1.0, 1.0)
    r[const] = 0.0
    return r


def _longest_run(flags):
    cur = np.zeros(flags.shape[0], dtype=np.int64)
    best = np.zeros(flags.shape[0], dtype=np.int64)
    for j in range(flags.shape[1]):
        cur = np.where(flags[:, j], cur + 1, 0)
        np.maximum(best, cur, out=best)
    return best


def _block_features(W):
    n, w = W.shape
    out = np.zeros((n, N_FEATURES))
    xmin = W.min(axis=1)
    xmax = W.max(axis=1)
    m = _seq_sum(W) / w
    out[:, 0] = m
    out[:, 2] = xmin
    out[:, 3] = xmax
    S = np.sort(W, axis=1)
    out[:, 18] = _lerp_quantile(S, 0.10)
    out[:, 19] = _lerp_quantile(S, 0.90)
    out[:, 20] = _lerp_quantile(S, 0.75) - _lerp_quantile(S, 0.25)

    live = xmin != xmax
    if not live.any():
        return out
    W = W[live]
    m = m[live]
    xmin = xmin[live]
    xmax = xmax[live]
    D = W - m[:, None]
    D2 = D * D
    m2 = _seq_sum(D2) / w
    m3 = _seq_sum(D2 * D) / w
    m4 = _seq_sum(D2 * D2) / w
    f = np.zeros((W.shape[0], N_FEATURES))
    f[:, 1] = np.sqrt(m2)
    f[:, 4] = m3 / m2 ** 1.5
    f[:, 5] = m4 / (m2 * m2) - 3.0
    f[:, 6] = _lag_corr(W, 1)
    f[:, 7] = _lag_corr(W, 2)
    f[:, 8] = _lag_corr(W, 3)

    first_zero = np.full(W.shape[0], w, dtype=np.int64)
    pending = np.ones(W.shape[0], dtype=bool)
    for k in range(1, w):
        c = _seq_sum(D[:, : w - k] * D[:, k:])
        hit = pending & (c <= 0.0)
        first_zero[hit] = k
        pending &= ~hit
        if not pending.any():
            break
    f[:, 9] = first_zero

    above = W > m[:, None]
    below = W < m[:, None]
    f[:, 10] = (above[:, 1:] != above[:, :-1]).sum(axis=1)
    f[:, 11] = _longest_run(above)
    f[:, 12] = _longest_run(below)

    tc = np.arange(w) - (w - 1) / 2.0
    stt = 0.0
    for t in range(w):
        stt += tc[t] * tc[t]
    slope = _seq_sum(tc[None, :] * D) / stt
    R = D - slope[:, None] * tc[None, :]
    f[:, 13] = slope
    f[:, 14] = np.sqrt(_seq_sum(R * R) / w)

    dd = np.diff(W, axis=1)
    ad = np.abs(dd)
    f[:, 15] = (dd > 0.0).sum(axis=1) / (w - 1)
    f[:, 16] = _seq_sum(ad) / (w - 1)
    f[:, 17] = ad.max(axis=1)

    spec = np.fft.rfft(D, axis=1)[:, 1: w // 2 + 1]
    P = spec.real ** 2 + spec.imag ** 2
    k = np.arange(1, w // 2 + 1)
    total = _seq_sum(P)
    weighted = _seq_sum(P * (k / w)[None, :])
    low = _seq_sum(P[:, 8 * k < w])
    ok = total > 0.0
    f[ok, 21] = weighted[ok] / total[ok]
    f[ok, 22] = low[ok] / total[ok]

    span = xmax - xmin
    bins = ((W - xmin[:, None]) / span[:, None] * 10.0).astype(np.int64)
    np.minimum(bins, 9, out=bins)
    h = np.zeros(W.shape[0])
    for b in range(10):
        p = (bins == b).sum(axis=1) / w
        nz = p > 0
        h[nz] -= p[nz] * np.log(p[nz])
    f[:, 23] = h

    keep = out[live]
    for j in (1, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 21, 22, 23):
        keep[:, j] = f[:, j]
    out[live] = keep
    return out


def window_features(values, w):
    values = np.asarray(values, dtype=np.float64)
    padded = np.concatenate([np.full(w - 1, values[0]), values])
    windows = sliding_window_view(padded, w)
    n = values.shape[0]
    out = np.empty((n, N_FEATURES))
    for s in range(0, n, _CHUNK):
        out[s: s + _CHUNK] = _block_features(np.ascontiguousarray(windows[s: s + _CHUNK]))
    return out


# ---------------------------------------------------------------------------
# nearest centroid
# ---------------------------------------------------------------------------

def nearest_centroid(X, C):
    n, d = X.shape
    labels = np.empty(n, dtype=np.int64)
    dist = np.empty(n)
    for s in range(0, n, _CHUNK):
        Xb = X[s: s + _CHUNK]
        D = np.zeros((Xb.shape[0], C.shape[0]))
        for j in range(d):
            diff = Xb[:, j, None] - C[None, :, j]
            D += diff * diff
        lab = np.argmin(D, axis=1)  # first minimum, i.e. lowest centroid index
        labels[s: s + _CHUNK] = lab
        dist[s: s + _CHUNK] = D[np.arange(D.shape[0]), lab]
    return labels, dist


# ---------------------------------------------------------------------------
# CART
# ---------------------------------------------------------------------------

def _splitmix(state):
    state = (state + _GOLDEN) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return state, z ^ (z >> 31)


def _best_split(vals, labs, c1, min_samples_leaf):
    n = vals.shape[0]
    order = np.argsort(vals, kind="stable")
    sv = vals[order]
    sy = labs[order]
    lo = sv[:-1]
    hi = sv[1:]
    p = np.arange(1, n)
    valid = (hi > lo) & (p >= min_samples_leaf) & (n - p >= min_samples_leaf)
    if not valid.any():
        return None
    nl = p.astype(np.float64)
    nr = (n - p).astype(np.float64)
    fl1 = np.cumsum(sy)[:-1].astype(np.float64)
    fl0 = nl - fl1
    fr1 = float(c1) - fl1
    fr0 = nr - fr1
    score = (nl - (fl0 * fl0 + fl1 * fl1) / nl) + (nr - (fr0 * fr0 + fr1 * fr1) / nr)
    score = np.where(valid, score, np.inf)
    i = int(np.argmin(score))
    thr = lo[i] / 2.0 + hi[i] / 2.0
    if thr >= hi[i] or not np.isfinite(thr):
        thr = lo[i]
    return score[i], thr


def build_tree(X, y, counts, order, max_features, max_depth, min_samples_split,
               min_samples_leaf, tree_seed):
    # ``order`` is only needed by the numba kernel; bootstrap multiplicities are
    # expanded into repeated rows, which yields the same class counts
    n_feat = X.shape[1]
    sample_idx = np.repeat(np.arange(X.shape[0]), counts)
    feature, threshold, left, right, count0, count1 = [], [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        count0.append(0)
        count1.append(0)
        return len(feature) - 1

    new_node()
    stack = [(0, np.asarray(sample_idx, dtype=np.int64), 0)]
    seed = int(tree_seed) & _MASK
    while stack:
        node, idx, depth = stack.pop()
        n_node = idx.shape[0]
        ys = y[idx]
        c1 = int(ys.sum())
        c0 = n_node - c1
        count0[node] = c0
        count1[node] = c1
        if (c0 == 0 or c1 == 0 or n_node < min_samples_split
                or n_node < 2 * min_samples_leaf
                or (max_depth >= 0 and depth >= max_depth)):
            continue

        perm = list(range(n_feat))
        state = seed ^ ((node * _NODE_MULT) & _MASK)
        best = None  # (score, feature, threshold)
        visited = 0
        Xn = X[idx]
        for r in range(n_feat):
            if visited >= max_features:
                break
            state, z = _splitmix(state)
            j = r + z % (n_feat - r)
            perm[r], perm[j] = perm[j], perm[r]
            f = perm[r]
            vals = Xn[:, f]
            if vals.min() == vals.max():
                continue
            visited += 1
            res = _best_split(vals, ys, c1, min_samples_leaf)
            if res is None:
                continue
            score, thr = res
            if best is None or score < best[0] or (score == best[0] and f < best[1]):
                best = (score, f, thr)

        if best is None:
            continue
        _, f, thr = best
        go_left = Xn[:, f] <= thr
        lnode = new_node()
        rnode = new_node()
        feature[node] = f
        threshold[node] = thr
        left[node] = lnode
        right[node] = rnode
        stack.append((rnode, idx[~go_left], depth + 1))
        stack.append((lnode, idx[go_left], depth + 1))

    return (np.asarray(feature, dtype=np.int64), np.asarray(threshold, dtype=np.float64),
            np.asarray(left, dtype=np.int64), np.asarray(right, dtype=np.int64),
            np.asarray(count0, dtype=np.int64), np.asarray(count1, dtype=np.int64))


def tree_predict(X, feature, threshold, left, right, leaf_p, root):
    node = np.full(X.shape[0], root, dtype=np.int64)
    rows = np.arange(X.shape[0])
    active = feature[node] >= 0
    while active.any():
        r = rows[active]
        nd = node[active]
        f = feature[nd]
        go_left = X[r, f] <= threshold[nd]
        node[active] = np.where(go_left, left[nd], right[nd])
        active = feature[node] >= 0
    return leaf_p[node]


def forest_predict(X, feature, threshold, left, right, leaf_p, roots):
    acc = np.zeros(X.shape[0])
    for root in roots:
        acc += tree_predict(X, feature, threshold, left, right, leaf_p, root)
    return acc / len(roots)
