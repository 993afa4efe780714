"""Hot inner loops: lasso coordinate descent, graph-constrained covariance
fitting and graphical-lasso block coordinate descent.

Every kernel has a ``*_numba`` and a ``*_numpy`` implementation with identical
signatures; the unsuffixed name is bound to whichever backend
:mod:`ggmcomposite._accel` selected. All kernels work in place on the arrays
they are given (``beta``, ``W``, ``B``) so callers can warm start.
"""

import numpy as np

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# Lasso in covariance form:  min_b  0.5 b'Qb - c'b + rho * |b|_1
# ---------------------------------------------------------------------------


def _lasso_cd_py(Q, c, rho, beta, tol, max_iter):
    m = c.shape[0]
    r = c - Q @ beta
    for it in range(max_iter):
        delta = 0.0
        for k in range(m):
            qkk = Q[k, k]
            if qkk <= 0.0:
                continue
            old = beta[k]
            z = r[k] + qkk * old
            if z > rho:
                new = (z - rho) / qkk
            elif z < -rho:
                new = (z + rho) / qkk
            else:
                new = 0.0
            if new != old:
                d = new - old
                for l in range(m):
                    r[l] -= Q[l, k] * d
                beta[k] = new
                if abs(d) > delta:
                    delta = abs(d)
        if delta < tol:
            return it + 1
    return max_iter


lasso_cd_numba = njit(_lasso_cd_py)


def lasso_cd_numpy(Q, c, rho, beta, tol, max_iter):
    """Cyclic coordinate descent for ``0.5 b'Qb - c'b + rho |b|_1``.

    ``beta`` is updated in place and used as the starting point. Returns the
    number of sweeps performed (``max_iter`` if the tolerance on the largest
    coordinate move was never met).
    """
    r = c - Q @ beta
    diag = np.diag(Q)
    for it in range(max_iter):
        delta = 0.0
        for k in range(c.shape[0]):
            qkk = diag[k]
            if qkk <= 0.0:
                continue
            old = beta[k]
            z = r[k] + qkk * old
            new = np.sign(z) * max(abs(z) - rho, 0.0) / qkk
            if new != old:
                d = new - old
                r -= Q[:, k] * d
                beta[k] = new
                delta = max(delta, abs(d))
        if delta < tol:
            return it + 1
    return max_iter


# ---------------------------------------------------------------------------
# Graph-constrained MLE by iterative proportional scaling (row regressions)
# ---------------------------------------------------------------------------


@njit
def _neighbors(adj, j):
    p = adj.shape[0]
    count = 0
    for i in range(p):
        if adj[j, i] and i != j:
            count += 1
    nb = np.empty(count, dtype=np.int64)
    count = 0
    for i in range(p):
        if adj[j, i] and i != j:
            nb[count] = i
            count += 1
    return nb


@njit
def _row_solve(S, W, nb, j):
    d = nb.shape[0]
    A = np.empty((d, d))
    b = np.empty(d)
    for u in range(d):
        b[u] = S[nb[u], j]
        for v in range(d):
            A[u, v] = W[nb[u], nb[v]]
    return np.linalg.solve(A, b)


@njit
def ips_fit_numba(S, adj, W, tol, max_iter):
    p = S.shape[0]
    scale = 0.0
    for i in range(p):
        scale += S[i, i]
    scale = max(scale / p, 1e-300)
    sweeps = 0
    change = np.inf
    for sweep in range(max_iter):
        change = 0.0
        for j in range(p):
            nb = _neighbors(adj, j)
            d = nb.shape[0]
            if d == 0:
                for i in range(p):
                    if i != j:
                        change = max(change, abs(W[i, j]))
                        W[i, j] = 0.0
                        W[j, i] = 0.0
                continue
            beta = _row_solve(S, W, nb, j)
            for i in range(p):
                if i == j:
                    continue
                val = 0.0
                for u in range(d):
                    val += W[i, nb[u]] * beta[u]
                change = max(change, abs(val - W[i, j]))
                W[i, j] = val
                W[j, i] = val
        sweeps = sweep + 1
        if change <= tol * scale:
            break
    K = np.zeros((p, p))
    for j in range(p):
        nb = _neighbors(adj, j)
        d = nb.shape[0]
        if d == 0:
            K[j, j] = 1.0 / S[j, j]
            continue
        beta = _row_solve(S, W, nb, j)
        acc = 0.0
        for u in range(d):
            acc += S[nb[u], j] * beta[u]
        kjj = 1.0 / (S[j, j] - acc)
        K[j, j] = kjj
        for u in range(d):
            K[nb[u], j] = -beta[u] * kjj
    K = 0.5 * (K + K.T)
    return K, sweeps, change / scale


def ips_fit_numpy(S, adj, W, tol, max_iter):
    """Fit the graph-constrained covariance by cycling row regressions.

    Parameters
    ----------
    S : (p, p) array
        Target covariance (already ridged); its diagonal must equal ``W``'s.
    adj : (p, p) bool array
        Symmetric adjacency, diagonal ignored.
    W : (p, p) array
        Starting covariance, overwritten with the fitted covariance.
    tol : float
        Stop when the largest entry change over a sweep is below
        ``tol * mean(diag(S))``.
    max_iter : int
        Sweep cap.

    Returns
    -------
    K : (p, p) array
        Precision assembled column by column from the final regressions,
        exactly zero off the graph.
    sweeps : int
    residual : float
        Last sweep's relative change.
    """
    p = S.shape[0]
    scale = max(float(np.mean(np.diag(S))), 1e-300)
    nbs = [np.flatnonzero(adj[j] & (np.arange(p) != j)) for j in range(p)]
    sweeps = 0
    change = np.inf
    for sweep in range(max_iter):
        change = 0.0
        for j, nb in enumerate(nbs):
            old = W[:, j].copy()
            if nb.size == 0:
                new = np.zeros(p)
            else:
                beta = np.linalg.solve(W[np.ix_(nb, nb)], S[nb, j])
                new = W[:, nb] @ beta
            new[j] = S[j, j]
            change = max(change, float(np.max(np.abs(new - old))))
            W[:, j] = new
            W[j, :] = new
        sweeps = sweep + 1
        if change <= tol * scale:
            break
    K = np.zeros((p, p))
    for j, nb in enumerate(nbs):
        if nb.size == 0:
            K[j, j] = 1.0 / S[j, j]
            continue
        beta = np.linalg.solve(W[np.ix_(nb, nb)], S[nb, j])
        kjj = 1.0 / (S[j, j] - S[nb, j] @ beta)
        K[j, j] = kjj
        K[nb, j] = -beta * kjj
    K = 0.5 * (K + K.T)
    return K, sweeps, change / scale


# ---------------------------------------------------------------------------
# Graphical lasso, unpenalised diagonal
# ---------------------------------------------------------------------------


@njit
def glasso_bcd_numba(S, rho, W, B, tol, max_iter, inner_tol, inner_max):
    p = S.shape[0]
    m = p - 1
    scale = 0.0
    diag = 0.0
    for i in range(p):
        diag += S[i, i]
        for k in range(p):
            if k != i:
                scale += abs(S[i, k])
    scale = scale / (p * m) if m > 0 else 0.0
    if scale <= 0.0:
        scale = max(diag / p, 1e-300)
    Q = np.empty((m, m))
    c = np.empty(m)
    beta = np.empty(m)
    others = np.empty(m, dtype=np.int64)
    sweeps = 0
    change = np.inf
    for sweep in range(max_iter):
        total = 0.0
        for j in range(p):
            k = 0
            for i in range(p):
                if i != j:
                    others[k] = i
                    k += 1
            for u in range(m):
                c[u] = S[others[u], j]
                beta[u] = B[others[u], j]
                for v in range(m):
                    Q[u, v] = W[others[u], others[v]]
            _lasso_cd_inline(Q, c, rho, beta, inner_tol, inner_max)
            for u in range(m):
                B[others[u], j] = beta[u]
                val = 0.0
                for v in range(m):
                    val += Q[u, v] * beta[v]
                total += abs(val - W[others[u], j])
                W[others[u], j] = val
                W[j, others[u]] = val
        sweeps = sweep + 1
        change = total / (p * m) if m > 0 else 0.0
        if change <= tol * scale:
            break
    K = np.zeros((p, p))
    for j in range(p):
        acc = 0.0
        for i in range(p):
            if i != j:
                acc += W[i, j] * B[i, j]
        kjj = 1.0 / (W[j, j] - acc)
        K[j, j] = kjj
        for i in range(p):
            if i != j:
                K[i, j] = -B[i, j] * kjj
    K = 0.5 * (K + K.T)
    return K, sweeps, change / scale


_lasso_cd_inline = lasso_cd_numba


def glasso_bcd_numpy(S, rho, W, B, tol, max_iter, inner_tol, inner_max):
    """Block coordinate descent for the l1-penalised likelihood.

    Each sweep solves, for every column ``j``, the lasso problem
    ``min 0.5 b'W11 b - s12'b + rho |b|_1`` and sets ``w12 = W11 b``. The
    diagonal of ``W`` is never touched, so it stays equal to ``diag(S)``.
    ``W`` and the coefficient matrix ``B`` (column ``j`` holds the regression
    of ``j`` on the others, ``B[j, j]`` unused) are updated in place.

    Convergence: mean absolute change of the off-diagonal of ``W`` over a
    sweep below ``tol`` times the mean absolute off-diagonal of ``S``.
    """
    p = S.shape[0]
    m = p - 1
    off = ~np.eye(p, dtype=bool)
    scale = float(np.mean(np.abs(S[off]))) if m > 0 else 0.0
    if scale <= 0.0:
        scale = max(float(np.mean(np.diag(S))), 1e-300)
    sweeps = 0
    change = np.inf
    for sweep in range(max_iter):
        total = 0.0
        for j in range(p):
            others = np.r_[0:j, j + 1:p]
            Q = W[np.ix_(others, others)]
            beta = B[others, j].copy()
            lasso_cd_numpy(Q, S[others, j], rho, beta, inner_tol, inner_max)
            B[others, j] = beta
            w12 = Q @ beta
            total += float(np.sum(np.abs(w12 - W[others, j])))
            W[others, j] = w12
            W[j, others] = w12
        sweeps = sweep + 1
        change = total / (p * m) if m > 0 else 0.0
        if change <= tol * scale:
            break
    K = np.zeros((p, p))
    for j in range(p):
        others = np.r_[0:j, j + 1:p]
        kjj = 1.0 / (W[j, j] - W[others, j] @ B[others, j])
        K[j, j] = kjj
        K[others, j] = -B[others, j] * kjj
    K = 0.5 * (K + K.T)
    return K, sweeps, change / scale


if USE_NUMBA:
    lasso_cd = lasso_cd_numba
    ips_fit = ips_fit_numba
    glasso_bcd = glasso_bcd_numba
else:
    lasso_cd = lasso_cd_numpy
    ips_fit = ips_fit_numpy
    glasso_bcd = glasso_bcd_numpy
