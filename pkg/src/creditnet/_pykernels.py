"""Pure-numpy kernels; the reference implementation the compiled core mirrors.

Every function here has a twin with the same signature in ``_ckernels.pyx``.
"""
from __future__ import annotations

import numpy as np

BACKEND = "python"


def picard_clear(L, e, alpha, tol, max_iter, solv_tol, check_monotone=False):
    """Downward Picard iteration from ``P = L``.

    Returns ``(P, iterations, converged, residual)`` where ``residual`` is the
    max-norm distance between ``P`` and its image under the payment rule.
    """
    L = np.ascontiguousarray(L, dtype=np.float64)
    e = np.ascontiguousarray(e, dtype=np.float64)
    owed = L.sum(axis=1)
    safe = np.where(owed > 0, owed, 1.0)
    P = L.copy()
    change = 0.0
    for it in range(1, max_iter + 1):
        assets = e + P.sum(axis=0)
        solvent = assets >= owed - solv_tol
        Pn = np.where(solvent[:, None], L, (alpha * assets)[:, None] * L / safe[:, None])
        if check_monotone and np.any(Pn > P + 1e-12):
            raise AssertionError(f"Picard iterate increased at iteration {it}")
        change = float(np.max(np.abs(Pn - P))) if P.size else 0.0
        if change < tol or it == max_iter:
            return P, it, change < tol, change
        P = Pn
    return P, max_iter, False, change


def _system_total(L, e, alpha, tol, max_iter, solv_tol):
    P, _, converged, residual = picard_clear(L, e, alpha, tol, max_iter, solv_tol)
    if not converged:
        return None
    return float((e + P.sum(axis=0)).sum())


def _better(total, mask, best_total, best_mask, eps):
    if best_mask < 0 or total > best_total + eps:
        return True
    if total < best_total - eps:
        return False
    pc, bc = bin(mask).count("1"), bin(best_mask).count("1")
    if pc != bc:
        return pc < bc
    diff = mask ^ best_mask
    return bool(mask & (diff & -diff))


def removal_search(L, e, edges, alpha, tol, max_iter, solv_tol, eps):
    """Evaluate every subset of ``edges`` to remove; return ``(mask, total, evaluated)``.

    Bit ``k`` of ``mask`` selects ``edges[k]``. Ties within ``eps`` prefer fewer
    edges, then the lexicographically smaller index list. ``mask`` is -1 when
    some subset failed to converge.
    """
    L = np.ascontiguousarray(L, dtype=np.float64)
    e = np.ascontiguousarray(e, dtype=np.float64)
    edges = np.asarray(edges, dtype=np.intp).reshape(-1, 2)
    m = len(edges)
    best_mask, best_total = -1, 0.0
    for mask in range(1 << m):
        Lm = L.copy()
        for k in range(m):
            if mask >> k & 1:
                Lm[edges[k, 0], edges[k, 1]] = 0.0
        total = _system_total(Lm, e, alpha, tol, max_iter, solv_tol)
        if total is None:
            return -1, float("nan"), mask + 1
        if _better(total, mask, best_total, best_mask, eps):
            best_mask, best_total = mask, total
    return best_mask, best_total, 1 << m


def compression_search(L, e, cycle_ptr, cycle_nodes, order, alpha, tol, max_iter, solv_tol, eps, max_leaves):
    """Depth-first search over compressing subsets of cycles.

    Cycles are applied in ``order`` (indices into the candidate list, already
    sorted by execution priority). A cycle with a zero edge at its turn is
    skipped, so only its exclude-branch is explored. Bit ``k`` of the returned
    mask refers to candidate ``k``. Returns ``(mask, total, leaves)``; ``mask``
    is -1 on non-convergence and -2 when ``max_leaves`` is exceeded.
    """
    L = np.array(L, dtype=np.float64)
    e = np.ascontiguousarray(e, dtype=np.float64)
    cycles = [
        np.asarray(cycle_nodes[cycle_ptr[k]:cycle_ptr[k + 1]], dtype=np.intp)
        for k in range(len(cycle_ptr) - 1)
    ]
    best = [-1, 0.0]
    leaves = [0]
    status = [0]

    def visit(depth, Lc, mask):
        if status[0]:
            return
        if depth == len(order):
            leaves[0] += 1
            if leaves[0] > max_leaves:
                status[0] = -2
                return
            total = _system_total(Lc, e, alpha, tol, max_iter, solv_tol)
            if total is None:
                status[0] = -1
                return
            if _better(total, mask, best[1], best[0], eps):
                best[0], best[1] = mask, total
            return
        k = order[depth]
        c = cycles[k]
        src, dst = c, np.roll(c, -1)
        flows = Lc[src, dst]
        if np.all(flows > 0):
            Ln = Lc.copy()
            Ln[src, dst] = flows - flows.min()
            visit(depth + 1, Ln, mask | (1 << k))
        visit(depth + 1, Lc, mask)

    visit(0, L, 0)
    if status[0]:
        return status[0], float("nan"), leaves[0]
    return best[0], best[1], leaves[0]
