# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Same signatures and semantics as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()

BACKEND = "cython"


cdef int _picard(const double[:, ::1] L, const double[::1] e, double[::1] owed,
                 double[:, ::1] P, double[:, ::1] Pn, double[::1] assets,
                 double alpha, double tol, int max_iter, double solv_tol,
                 bint check_monotone, int* iters, double* change) except -2:
    """Iterate in place on ``P``. Returns 1 when converged, 0 otherwise."""
    cdef Py_ssize_t n = L.shape[0]
    cdef Py_ssize_t i, j
    cdef int it
    cdef double f, d, c
    for i in range(n):
        for j in range(n):
            P[i, j] = L[i, j]
    c = 0.0
    for it in range(1, max_iter + 1):
        for j in range(n):
            assets[j] = e[j]
        for i in range(n):
            for j in range(n):
                assets[j] += P[i, j]
        c = 0.0
        for i in range(n):
            if assets[i] >= owed[i] - solv_tol:
                for j in range(n):
                    Pn[i, j] = L[i, j]
            else:
                f = alpha * assets[i]
                for j in range(n):
                    Pn[i, j] = f * L[i, j] / owed[i]
            for j in range(n):
                d = Pn[i, j] - P[i, j]
                if check_monotone and d > 1e-12:
                    raise AssertionError(f"Picard iterate increased at iteration {it}")
                d = fabs(d)
                if d > c:
                    c = d
        if c < tol or it == max_iter:
            iters[0] = it
            change[0] = c
            return 1 if c < tol else 0
        for i in range(n):
            for j in range(n):
                P[i, j] = Pn[i, j]
    iters[0] = max_iter
    change[0] = c
    return 0


cdef void _row_sums(const double[:, ::1] L, double[::1] owed):
    cdef Py_ssize_t n = L.shape[0]
    cdef Py_ssize_t i, j
    cdef double s
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += L[i, j]
        owed[i] = s


def picard_clear(L, e, double alpha, double tol, int max_iter, double solv_tol, bint check_monotone=False):
    cdef const double[:, ::1] Lv = np.ascontiguousarray(L, dtype=np.float64)
    cdef const double[::1] ev = np.ascontiguousarray(e, dtype=np.float64)
    cdef Py_ssize_t n = Lv.shape[0]
    P = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] Pv = P
    cdef double[:, ::1] Pn = np.empty((n, n), dtype=np.float64)
    cdef double[::1] owed = np.empty(n, dtype=np.float64)
    cdef double[::1] assets = np.empty(n, dtype=np.float64)
    cdef int iters = 0
    cdef double change = 0.0
    _row_sums(Lv, owed)
    ok = _picard(Lv, ev, owed, Pv, Pn, assets, alpha, tol, max_iter, solv_tol,
                 check_monotone, &iters, &change)
    return P, iters, bool(ok), change


cdef int _popcount(uint64_t x):
    cdef int c = 0
    while x:
        x &= x - 1
        c += 1
    return c


cdef bint _better(double total, uint64_t mask, double best_total, uint64_t best_mask,
                  bint have_best, double eps):
    cdef int pc, bc
    cdef uint64_t diff
    if not have_best or total > best_total + eps:
        return True
    if total < best_total - eps:
        return False
    pc = _popcount(mask)
    bc = _popcount(best_mask)
    if pc != bc:
        return pc < bc
    diff = mask ^ best_mask
    return (mask & (diff & (~diff + 1))) != 0


cdef double _total(double[:, ::1] Lm, const double[::1] e, double[::1] owed,
                   double[:, ::1] P, double[:, ::1] Pn, double[::1] assets,
                   double alpha, double tol, int max_iter, double solv_tol, bint* ok):
    cdef Py_ssize_t n = Lm.shape[0]
    cdef Py_ssize_t i, j
    cdef int iters = 0
    cdef double change = 0.0, s
    _row_sums(Lm, owed)
    ok[0] = _picard(Lm, e, owed, P, Pn, assets, alpha, tol, max_iter, solv_tol,
                    False, &iters, &change) == 1
    for j in range(n):
        assets[j] = e[j]
    for i in range(n):
        for j in range(n):
            assets[j] += P[i, j]
    s = 0.0
    for j in range(n):
        s += assets[j]
    return s


def removal_search(L, e, edges, double alpha, double tol, int max_iter, double solv_tol, double eps):
    cdef const double[:, ::1] Lv = np.ascontiguousarray(L, dtype=np.float64)
    cdef const double[::1] ev = np.ascontiguousarray(e, dtype=np.float64)
    cdef const int64_t[:, ::1] ed = np.ascontiguousarray(np.asarray(edges, dtype=np.int64).reshape(-1, 2))
    cdef Py_ssize_t n = Lv.shape[0]
    cdef Py_ssize_t m = ed.shape[0]
    if m > 62:
        raise ValueError("too many candidate edges for a 64-bit mask")
    cdef double[:, ::1] Lm = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] P = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] Pn = np.empty((n, n), dtype=np.float64)
    cdef double[::1] owed = np.empty(n, dtype=np.float64)
    cdef double[::1] assets = np.empty(n, dtype=np.float64)
    cdef uint64_t mask, best_mask = 0
    cdef uint64_t limit = (<uint64_t>1) << m
    cdef double total, best_total = 0.0
    cdef bint have_best = False, ok = True
    cdef Py_ssize_t i, j, k
    mask = 0
    while mask < limit:
        for i in range(n):
            for j in range(n):
                Lm[i, j] = Lv[i, j]
        for k in range(m):
            if (mask >> k) & 1:
                Lm[ed[k, 0], ed[k, 1]] = 0.0
        total = _total(Lm, ev, owed, P, Pn, assets, alpha, tol, max_iter, solv_tol, &ok)
        if not ok:
            return -1, float("nan"), int(mask + 1)
        if _better(total, mask, best_total, best_mask, have_best, eps):
            best_mask = mask
            best_total = total
            have_best = True
        mask += 1
    return int(best_mask), best_total, int(limit)


cdef class _CompressionSearch:
    cdef double[:, :, ::1] stack
    cdef const double[::1] e
    cdef double[::1] owed
    cdef double[::1] assets
    cdef double[:, ::1] P
    cdef double[:, ::1] Pn
    cdef const int64_t[::1] ptr
    cdef const int64_t[::1] nodes
    cdef const int64_t[::1] order
    cdef double alpha, tol, solv_tol, eps, best_total
    cdef int max_iter, status
    cdef int64_t leaves, max_leaves
    cdef uint64_t best_mask
    cdef bint have_best

    def __init__(self, L, e, ptr, nodes, order, alpha, tol, max_iter, solv_tol, eps, max_leaves):
        L = np.ascontiguousarray(L, dtype=np.float64)
        n = L.shape[0]
        depth = len(order)
        stack = np.empty((depth + 1, n, n), dtype=np.float64)
        stack[0] = L
        self.stack = stack
        self.e = np.ascontiguousarray(e, dtype=np.float64)
        self.owed = np.empty(n, dtype=np.float64)
        self.assets = np.empty(n, dtype=np.float64)
        self.P = np.empty((n, n), dtype=np.float64)
        self.Pn = np.empty((n, n), dtype=np.float64)
        self.ptr = np.ascontiguousarray(ptr, dtype=np.int64)
        self.nodes = np.ascontiguousarray(nodes, dtype=np.int64)
        self.order = np.ascontiguousarray(order, dtype=np.int64)
        self.alpha = alpha
        self.tol = tol
        self.max_iter = max_iter
        self.solv_tol = solv_tol
        self.eps = eps
        self.max_leaves = max_leaves
        self.leaves = 0
        self.status = 0
        self.have_best = False
        self.best_mask = 0
        self.best_total = 0.0

    cdef void visit(self, Py_ssize_t depth, uint64_t mask):
        cdef Py_ssize_t n = self.stack.shape[1]
        cdef Py_ssize_t i, j, a, b, s, t, k
        cdef double mu, total
        cdef bint ok = True, valid
        if self.status != 0:
            return
        if depth == self.order.shape[0]:
            self.leaves += 1
            if self.leaves > self.max_leaves:
                self.status = -2
                return
            total = _total(self.stack[depth], self.e, self.owed, self.P, self.Pn, self.assets,
                           self.alpha, self.tol, self.max_iter, self.solv_tol, &ok)
            if not ok:
                self.status = -1
                return
            if _better(total, mask, self.best_total, self.best_mask, self.have_best, self.eps):
                self.best_mask = mask
                self.best_total = total
                self.have_best = True
            return
        k = self.order[depth]
        s = self.ptr[k]
        t = self.ptr[k + 1]
        valid = True
        mu = 0.0
        for i in range(s, t):
            a = self.nodes[i]
            b = self.nodes[i + 1] if i + 1 < t else self.nodes[s]
            if not (self.stack[depth, a, b] > 0):
                valid = False
                break
            if i == s or self.stack[depth, a, b] < mu:
                mu = self.stack[depth, a, b]
        if valid:
            for i in range(n):
                for j in range(n):
                    self.stack[depth + 1, i, j] = self.stack[depth, i, j]
            for i in range(s, t):
                a = self.nodes[i]
                b = self.nodes[i + 1] if i + 1 < t else self.nodes[s]
                self.stack[depth + 1, a, b] = self.stack[depth, a, b] - mu
            self.visit(depth + 1, mask | ((<uint64_t>1) << k))
        for i in range(n):
            for j in range(n):
                self.stack[depth + 1, i, j] = self.stack[depth, i, j]
        self.visit(depth + 1, mask)


def compression_search(L, e, cycle_ptr, cycle_nodes, order, double alpha, double tol, int max_iter,
                       double solv_tol, double eps, max_leaves):
    if len(cycle_ptr) - 1 > 62:
        raise ValueError("too many candidate cycles for a 64-bit mask")
    cdef _CompressionSearch s = _CompressionSearch(L, e, cycle_ptr, cycle_nodes, order, alpha, tol,
                                                   max_iter, solv_tol, eps, max_leaves)
    s.visit(0, 0)
    if s.status != 0:
        return s.status, float("nan"), int(s.leaves)
    return int(s.best_mask), s.best_total, int(s.leaves)
