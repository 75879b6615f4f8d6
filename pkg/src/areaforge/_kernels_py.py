"""Pure-Python/numpy versions of the compiled kernels (same signatures)."""
import numpy as np


def face_areas(xy, ptr, idx):
    xy = np.asarray(xy, dtype=float)
    ptr = np.asarray(ptr, dtype=np.int64)
    idx = np.asarray(idx, dtype=np.int64)
    nxt = np.arange(1, len(idx) + 1)
    # wrap the last entry of each face to its first
    nxt[ptr[1:] - 1] = ptr[:-1]
    a, b = idx, idx[nxt]
    lengths = np.diff(ptr)
    first = np.repeat(idx[ptr[:-1]], lengths)
    ax, ay = xy[a, 0] - xy[first, 0], xy[a, 1] - xy[first, 1]
    bx, by = xy[b, 0] - xy[first, 0], xy[b, 1] - xy[first, 1]
    cross = ax * by - bx * ay
    sums = np.add.reduceat(cross, ptr[:-1]) if len(idx) else np.zeros(0)
    return 0.5 * sums


def area_jacobian(xy, ptr, idx, col):
    xy = np.asarray(xy, dtype=float)
    ptr = np.asarray(ptr, dtype=np.int64)
    idx = np.asarray(idx, dtype=np.int64)
    col = np.asarray(col, dtype=np.int64)
    nf = len(ptr) - 1
    lengths = np.diff(ptr)
    face = np.repeat(np.arange(nf), lengths)
    pos = np.arange(len(idx)) - ptr[face]
    n = lengths[face]
    prev = idx[ptr[face] + (pos - 1) % n]
    nxt = idx[ptr[face] + (pos + 1) % n]
    c = col[idx]
    keep = c >= 0
    f, c, prev, nxt = face[keep], c[keep], prev[keep], nxt[keep]
    rows = np.concatenate([f, f])
    cols = np.concatenate([c, c + 1])
    vals = np.concatenate([0.5 * (xy[nxt, 1] - xy[prev, 1]), 0.5 * (xy[prev, 0] - xy[nxt, 0])])
    order = np.argsort(np.concatenate([np.arange(len(f)) * 2, np.arange(len(f)) * 2 + 1]), kind="stable")
    return rows[order], cols[order], vals[order]


def _sgn(d, tol):
    return 1 if d > tol else (-1 if d < -tol else 0)


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def segments_meet(a, b, c, d, tol):
    s1 = _sgn(_orient(*a, *b, *c), tol)
    s2 = _sgn(_orient(*a, *b, *d), tol)
    s3 = _sgn(_orient(*c, *d, *a), tol)
    s4 = _sgn(_orient(*c, *d, *b), tol)
    if s1 * s2 > 0 or s3 * s4 > 0:
        return False
    if s1 == s2 == s3 == s4 == 0:
        if max(a[0], b[0]) < min(c[0], d[0]) - tol or max(c[0], d[0]) < min(a[0], b[0]) - tol:
            return False
        if max(a[1], b[1]) < min(c[1], d[1]) - tol or max(c[1], d[1]) < min(a[1], b[1]) - tol:
            return False
    return True


def crossing_pairs(xy, edges, tol):
    xy = np.asarray(xy, dtype=float)
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    m = len(edges)
    p, q = xy[edges[:, 0]], xy[edges[:, 1]]
    lo = np.minimum(p[:, 0], q[:, 0])
    hi = np.maximum(p[:, 0], q[:, 0])
    ylo = np.minimum(p[:, 1], q[:, 1])
    yhi = np.maximum(p[:, 1], q[:, 1])
    order = np.argsort(lo, kind="stable")
    pts = xy.tolist()
    el = edges.tolist()
    out = []
    for a in range(m):
        i = order[a]
        u1, v1 = el[i]
        h = hi[i] + tol
        for jj in range(a + 1, m):
            j = order[jj]
            if lo[j] > h:
                break
            u2, v2 = el[j]
            if u1 == u2 or u1 == v2 or v1 == u2 or v1 == v2:
                continue
            if yhi[j] < ylo[i] - tol or ylo[j] > yhi[i] + tol:
                continue
            if segments_meet(pts[u1], pts[v1], pts[u2], pts[v2], tol):
                out.append((min(i, j), max(i, j)))
    return np.array(sorted(out), dtype=np.int64).reshape(-1, 2)
