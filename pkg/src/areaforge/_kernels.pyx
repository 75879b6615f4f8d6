# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: face areas, their Jacobian, and independent-edge crossings."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def face_areas(const double[:, :] xy, const long long[:] ptr, const long long[:] idx):
    cdef Py_ssize_t nf = ptr.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(nf, dtype=np.float64)
    cdef Py_ssize_t f, k, start, stop, a, b
    cdef double s, x0, y0
    for f in range(nf):
        start = ptr[f]
        stop = ptr[f + 1]
        s = 0.0
        if stop > start:
            x0 = xy[idx[start], 0]
            y0 = xy[idx[start], 1]
        for k in range(start, stop):
            a = idx[k]
            b = idx[k + 1] if k + 1 < stop else idx[start]
            # relative to the first vertex to limit cancellation
            s += (xy[a, 0] - x0) * (xy[b, 1] - y0) - (xy[b, 0] - x0) * (xy[a, 1] - y0)
        out[f] = 0.5 * s
    return out


def area_jacobian(const double[:, :] xy, const long long[:] ptr, const long long[:] idx,
                  const long long[:] col):
    """COO triplets of d(area_f)/d(unknown); ``col[v]`` is -1 for fixed vertices."""
    cdef Py_ssize_t nf = ptr.shape[0] - 1
    cdef Py_ssize_t m = idx.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] rows = np.empty(2 * m, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cols = np.empty(2 * m, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vals = np.empty(2 * m, dtype=np.float64)
    cdef Py_ssize_t f, k, start, stop, n, prev, nxt, v, c, t = 0
    for f in range(nf):
        start = ptr[f]
        stop = ptr[f + 1]
        n = stop - start
        for k in range(start, stop):
            v = idx[k]
            c = col[v]
            if c < 0:
                continue
            prev = idx[start + (k - start - 1 + n) % n]
            nxt = idx[start + (k - start + 1) % n]
            rows[t] = f
            cols[t] = c
            vals[t] = 0.5 * (xy[nxt, 1] - xy[prev, 1])
            t += 1
            rows[t] = f
            cols[t] = c + 1
            vals[t] = 0.5 * (xy[prev, 0] - xy[nxt, 0])
            t += 1
    return rows[:t], cols[:t], vals[:t]


cdef inline int _sgn(double d, double tol):
    if d > tol:
        return 1
    if d < -tol:
        return -1
    return 0


cdef inline double _orient(double ax, double ay, double bx, double by, double cx, double cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


cdef bint _segments_meet(double ax, double ay, double bx, double by,
                         double cx, double cy, double dx, double dy, double tol):
    cdef int s1 = _sgn(_orient(ax, ay, bx, by, cx, cy), tol)
    cdef int s2 = _sgn(_orient(ax, ay, bx, by, dx, dy), tol)
    cdef int s3 = _sgn(_orient(cx, cy, dx, dy, ax, ay), tol)
    cdef int s4 = _sgn(_orient(cx, cy, dx, dy, bx, by), tol)
    if s1 * s2 > 0 or s3 * s4 > 0:
        return False
    if s1 == 0 and s2 == 0 and s3 == 0 and s4 == 0:
        if max(ax, bx) < min(cx, dx) - tol or max(cx, dx) < min(ax, bx) - tol:
            return False
        if max(ay, by) < min(cy, dy) - tol or max(cy, dy) < min(ay, by) - tol:
            return False
    return True


def crossing_pairs(const double[:, :] xy, const long long[:, :] edges, double tol):
    """Pairs of independent edges whose closed segments meet (sweep over x)."""
    cdef Py_ssize_t m = edges.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lo = np.empty(m, dtype=np.float64)
    cdef Py_ssize_t i, j, a, ii, jj, u1, v1, u2, v2
    for i in range(m):
        lo[i] = min(xy[edges[i, 0], 0], xy[edges[i, 1], 0])
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order = np.argsort(lo, kind="stable").astype(np.int64)
    cdef double hi_i, ylo_i, yhi_i
    out = []
    for a in range(m):
        i = order[a]
        u1 = edges[i, 0]
        v1 = edges[i, 1]
        hi_i = max(xy[u1, 0], xy[v1, 0]) + tol
        ylo_i = min(xy[u1, 1], xy[v1, 1]) - tol
        yhi_i = max(xy[u1, 1], xy[v1, 1]) + tol
        for jj in range(a + 1, m):
            j = order[jj]
            if lo[j] > hi_i:
                break
            u2 = edges[j, 0]
            v2 = edges[j, 1]
            if u1 == u2 or u1 == v2 or v1 == u2 or v1 == v2:
                continue
            if max(xy[u2, 1], xy[v2, 1]) < ylo_i or min(xy[u2, 1], xy[v2, 1]) > yhi_i:
                continue
            if _segments_meet(xy[u1, 0], xy[u1, 1], xy[v1, 0], xy[v1, 1],
                              xy[u2, 0], xy[u2, 1], xy[v2, 0], xy[v2, 1], tol):
                out.append((min(i, j), max(i, j)))
    return np.array(sorted(out), dtype=np.int64).reshape(-1, 2)
