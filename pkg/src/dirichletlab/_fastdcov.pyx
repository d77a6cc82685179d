# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel for 1-D distance-covariance pair sums.

For a pairing of a sorted x column with y values, computes

    Sab = sum_ij |x_i - x_j| |y_i - y_j|
    S3  = sum_t rxs[t] * ry[order[t]]

in O(n log n) with an interleaved Fenwick tree holding, per y-rank,
the running (count, sum x, sum y, sum x*y) of processed points.
"""


def pair_sum(const double[::1] xs, const double[::1] rxs,
             const long long[::1] order, const double[::1] yv,
             const long long[::1] yrank, const double[::1] ry,
             double[::1] tree):
    """Return (Sab, S3) for the pairing (xs[t], yv[order[t]]).

    xs must be ascending; yrank holds each observation's rank among all
    y values; tree is caller-provided scratch of length >= 4*(n+1).
    """
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t t, i, o
    cdef double xv, yval
    cdef double c1, s1x, s1y, s1xy, c2, s2x, s2y, s2xy
    cdef double d_sum = 0.0, s3 = 0.0
    cdef double tc = 0.0, tx = 0.0, ty = 0.0, txy = 0.0
    cdef double xy

    for i in range(4 * (n + 1)):
        tree[i] = 0.0

    for t in range(n):
        o = order[t]
        xv = xs[t]
        yval = yv[o]
        xy = xv * yval

        # prefix sums over processed points with y-rank <= yrank[o]
        c1 = 0.0; s1x = 0.0; s1y = 0.0; s1xy = 0.0
        i = yrank[o] + 1
        while i > 0:
            c1 += tree[4 * i]
            s1x += tree[4 * i + 1]
            s1y += tree[4 * i + 2]
            s1xy += tree[4 * i + 3]
            i -= i & (-i)
        c2 = tc - c1
        s2x = tx - s1x
        s2y = ty - s1y
        s2xy = txy - s1xy

        # processed points have x <= xv; split on y side for the |.| sign
        d_sum += xy * c1 - yval * s1x - xv * s1y + s1xy
        d_sum += -xy * c2 + yval * s2x + xv * s2y - s2xy

        i = yrank[o] + 1
        while i <= n:
            tree[4 * i] += 1.0
            tree[4 * i + 1] += xv
            tree[4 * i + 2] += yval
            tree[4 * i + 3] += xy
            i += i & (-i)
        tc += 1.0; tx += xv; ty += yval; txy += xy
        s3 += rxs[t] * ry[o]

    return 2.0 * d_sum, s3
