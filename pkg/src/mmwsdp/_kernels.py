"""Compiled hot loops for the multiplicative-weight solvers.

Everything here is private plumbing: a cyclic Jacobi eigensolver for small
complex Hermitian matrices (no per-round allocation, deterministic rotation
order) and fused per-round loops for the two weight-update iterations.  The
public modules own the contracts; these functions are verified against the
numpy reference paths in the test suite.

Round counts in the acceptance workloads reach 10^7..10^8 per solve, which
is why these loops are JIT compiled.  If numba is unavailable the same code
runs as plain Python (slow but identical results).
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


@njit(cache=True, nogil=True)
def _jacobi_inplace(h, v):
    """Diagonalize Hermitian h in place by cyclic Jacobi rotations.

    On return the diagonal of h holds the (unsorted) eigenvalues and the
    columns of v the matching eigenvectors.  Rotation order is fixed, so
    the result is reproducible for identical input.
    """
    n = h.shape[0]
    for i in range(n):
        for j in range(n):
            v[i, j] = 1.0 + 0.0j if i == j else 0.0j
    if n == 1:
        return

    fro = 0.0
    for i in range(n):
        for j in range(n):
            fro += h[i, j].real ** 2 + h[i, j].imag ** 2
    stop = max(np.sqrt(fro), 1.0e-300) * 1.0e-15
    skip = stop * 1.0e-2

    for _sweep in range(60):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += abs(h[p, q])
        if off <= stop:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = h[p, q]
                mag = abs(apq)
                if mag <= skip:
                    continue
                app = h[p, p].real
                aqq = h[q, q].real
                u = apq / mag  # phase of the off-diagonal entry
                tau = (aqq - app) / (2.0 * mag)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                uc = np.conj(u)
                # unitary J: identity except
                #   J[p,p]=c, J[p,q]=s, J[q,p]=-s*conj(u), J[q,q]=c*conj(u)
                # update h <- J^* h J and v <- v J
                for k in range(n):
                    hkp = h[k, p]
                    hkq = h[k, q]
                    h[k, p] = c * hkp - s * uc * hkq
                    h[k, q] = s * hkp + c * uc * hkq
                for k in range(n):
                    hpk = h[p, k]
                    hqk = h[q, k]
                    h[p, k] = c * hpk - s * u * hqk
                    h[q, k] = s * hpk + c * u * hqk
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * uc * vkq
                    v[k, q] = s * vkp + c * uc * vkq


@njit(cache=True, nogil=True)
def jacobi_eigh(a):
    """Eigendecomposition of a complex Hermitian matrix.

    Returns ``(w, v)`` with eigenvalues ascending and eigenvectors in
    columns, matching ``numpy.linalg.eigh``.
    """
    n = a.shape[0]
    h = a.copy()
    v = np.empty((n, n), dtype=np.complex128)
    _jacobi_inplace(h, v)
    w = np.empty(n, dtype=np.float64)
    for i in range(n):
        w[i] = h[i, i].real
    order = np.argsort(w)
    w_sorted = np.empty(n, dtype=np.float64)
    v_sorted = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        w_sorted[i] = w[order[i]]
        for k in range(n):
            v_sorted[k, i] = v[k, order[i]]
    return w_sorted, v_sorted


@njit(cache=True, nogil=True)
def _gibbs_state(mcum, eps, out, hwork, vwork):
    """out <- exp(-eps*mcum) / tr(exp(-eps*mcum)).

    The exponent is shifted by the smallest eigenvalue of the cumulative
    sum, which cancels in the normalization and keeps every exponent
    nonpositive (no overflow for any round count).
    """
    n = mcum.shape[0]
    for i in range(n):
        for j in range(n):
            hwork[i, j] = mcum[i, j]
    _jacobi_inplace(hwork, vwork)
    wmin = hwork[0, 0].real
    for k in range(1, n):
        if hwork[k, k].real < wmin:
            wmin = hwork[k, k].real
    z = 0.0
    for k in range(n):
        ek = np.exp(-eps * (hwork[k, k].real - wmin))
        hwork[k, k] = ek  # reuse the diagonal as scratch for the weights
        z += ek
    for i in range(n):
        for j in range(i, n):
            acc = 0.0 + 0.0j
            for k in range(n):
                acc += vwork[i, k] * np.conj(vwork[j, k]) * hwork[k, k].real
            acc /= z
            out[i, j] = acc
            out[j, i] = np.conj(acc)


@njit(cache=True, nogil=True)
def _positive_part(g, proj, hwork, vwork):
    """Positive-eigenspace projector of Hermitian g and its positive trace.

    Eigenvalues below 1e-12 * max(1, |g|_inf) are excluded from the
    projector; the positive trace sums every eigenvalue above zero.
    """
    n = g.shape[0]
    for i in range(n):
        for j in range(n):
            hwork[i, j] = g[i, j]
    _jacobi_inplace(hwork, vwork)
    amax = 0.0
    for k in range(n):
        if abs(hwork[k, k].real) > amax:
            amax = abs(hwork[k, k].real)
    tau = 1.0e-12 * max(1.0, amax)
    pos = 0.0
    for i in range(n):
        for j in range(n):
            proj[i, j] = 0.0j
    for k in range(n):
        wk = hwork[k, k].real
        if wk > 0.0:
            pos += wk
        if wk > tau:
            for i in range(n):
                for j in range(i, n):
                    acc = vwork[i, k] * np.conj(vwork[j, k])
                    proj[i, j] += acc
                    proj[j, i] = np.conj(proj[i, j])
    return pos


@njit(cache=True, nogil=True)
def _ip_herm(a, b):
    """Re tr(a b) for Hermitian a, b of equal side."""
    n = a.shape[0]
    acc = 0.0
    for i in range(n):
        for j in range(n):
            acc += (a[i, j] * b[j, i]).real
    return acc


@njit(cache=True, nogil=True)
def feasibility_game_loop(a_mat, b_mat, c, r, eps, rounds, d_traced, trace_first):
    """Fused equilibrium iteration for the block feasibility game.

    One round: form the Gibbs state from the cumulative loss sum, take the
    positive-eigenspace best response of the block payoff
    diag(c - <A,rho>, Psi(rho) - B), translate it into the primal loss
    (N(Pi) + r I)/2r, accumulate.  The traced subsystem of the bipartite
    primal space is the first factor when ``trace_first`` else the second.

    Returns (rho_bar, losses_dot, loss_sum, obj_bar) where obj_bar is the
    running mean of <A, rho_t>.
    """
    dim = a_mat.shape[0]
    dk = dim // d_traced
    mcum = np.zeros((dim, dim), dtype=np.complex128)
    rho = np.empty((dim, dim), dtype=np.complex128)
    rho_bar = np.zeros((dim, dim), dtype=np.complex128)
    losses_dot = np.empty(rounds, dtype=np.float64)
    marg = np.empty((dk, dk), dtype=np.complex128)
    proj = np.empty((dk, dk), dtype=np.complex128)
    hbig = np.empty((dim, dim), dtype=np.complex128)
    vbig = np.empty((dim, dim), dtype=np.complex128)
    hsml = np.empty((dk, dk), dtype=np.complex128)
    vsml = np.empty((dk, dk), dtype=np.complex128)
    obj_bar = 0.0
    inv2r = 1.0 / (2.0 * r)

    for t in range(rounds):
        _gibbs_state(mcum, eps, rho, hbig, vbig)

        # scalar block of the payoff
        obj = _ip_herm(a_mat, rho)
        obj_bar += obj
        scal = c - obj

        # constraint block: partial trace minus the bound
        if trace_first:
            for i in range(dk):
                for j in range(dk):
                    acc = 0.0 + 0.0j
                    for m in range(d_traced):
                        acc += rho[m * dk + i, m * dk + j]
                    marg[i, j] = acc - b_mat[i, j]
        else:
            for i in range(dk):
                for j in range(dk):
                    acc = 0.0 + 0.0j
                    for m in range(d_traced):
                        acc += rho[i * d_traced + m, j * d_traced + m]
                    marg[i, j] = acc - b_mat[i, j]

        _positive_part(marg, proj, hsml, vsml)
        p = 1.0 if scal > 1.0e-12 * max(1.0, abs(scal)) else 0.0
        bp = _ip_herm(b_mat, proj)

        # N(Pi) = -p A + adjoint-lift of proj + (p c - <B,proj>) I;
        # loss M = (N + r I)/2r accumulated straight into the running sum
        shift = p * c - bp
        dot = 0.0
        if trace_first:
            for i in range(dim):
                ik = i % dk
                for j in range(dim):
                    nij = -p * a_mat[i, j]
                    if i // dk == j // dk:
                        nij += proj[ik, j % dk]
                    if i == j:
                        nij += shift + r
                    m_ij = nij * inv2r
                    mcum[i, j] += m_ij
                    dot += (m_ij * rho[j, i]).real
                    rho_bar[i, j] += rho[i, j]
        else:
            for i in range(dim):
                ik = i // d_traced
                for j in range(dim):
                    nij = -p * a_mat[i, j]
                    if i % d_traced == j % d_traced:
                        nij += proj[ik, j // d_traced]
                    if i == j:
                        nij += shift + r
                    m_ij = nij * inv2r
                    mcum[i, j] += m_ij
                    dot += (m_ij * rho[j, i]).real
                    rho_bar[i, j] += rho[i, j]
        losses_dot[t] = dot

    for i in range(dim):
        for j in range(dim):
            rho_bar[i, j] /= rounds
    return rho_bar, losses_dot, mcum, obj_bar / rounds


@njit(cache=True, nogil=True)
def two_register_game_loop(r_mat, c, r, eps, rounds, dim_x, dim_y):
    """Fused iteration for the two-register game with independent updates.

    Register one lives on A (x) X (x) Y with dim(A) = 2; register two on X.
    Block payoff: diag(c - <R,rho>, tr_Y rho - 0.5 I_A (x) sigma).  Both
    weight matrices share eps and the round count.

    Returns (value_mean, losses1_dot, losses2_dot, loss1_sum, loss2_sum).
    """
    d1 = r_mat.shape[0]          # 2 * dim_x * dim_y
    d2 = dim_x
    dax = 2 * dim_x              # side of the constraint block
    m1cum = np.zeros((d1, d1), dtype=np.complex128)
    m2cum = np.zeros((d2, d2), dtype=np.complex128)
    rho = np.empty((d1, d1), dtype=np.complex128)
    sig = np.empty((d2, d2), dtype=np.complex128)
    g = np.empty((dax, dax), dtype=np.complex128)
    proj = np.empty((dax, dax), dtype=np.complex128)
    h1 = np.empty((d1, d1), dtype=np.complex128)
    v1 = np.empty((d1, d1), dtype=np.complex128)
    h2 = np.empty((d2, d2), dtype=np.complex128)
    v2 = np.empty((d2, d2), dtype=np.complex128)
    hg = np.empty((dax, dax), dtype=np.complex128)
    vg = np.empty((dax, dax), dtype=np.complex128)
    losses1 = np.empty(rounds, dtype=np.float64)
    losses2 = np.empty(rounds, dtype=np.float64)
    value_sum = 0.0
    inv2r = 1.0 / (2.0 * r)

    for t in range(rounds):
        _gibbs_state(m1cum, eps, rho, h1, v1)
        _gibbs_state(m2cum, eps, sig, h2, v2)

        obj = _ip_herm(r_mat, rho)
        scal = c - obj

        # tr_Y rho - 0.5 I_A (x) sigma on A (x) X
        for i in range(dax):
            for j in range(dax):
                acc = 0.0 + 0.0j
                for m in range(dim_y):
                    acc += rho[i * dim_y + m, j * dim_y + m]
                g[i, j] = acc
        for ai in range(2):
            base = ai * dim_x
            for i in range(dim_x):
                for j in range(dim_x):
                    g[base + i, base + j] -= 0.5 * sig[i, j]

        _positive_part(g, proj, hg, vg)
        p = 1.0 if scal > 1.0e-12 * max(1.0, abs(scal)) else 0.0
        value_sum += p * scal + _ip_herm(g, proj)

        # N1 = -p R + proj (x) I_Y + p c I ; loss1 = (N1 + r I)/2r
        dot1 = 0.0
        for i in range(dax):
            for j in range(dax):
                pij = proj[i, j]
                for m in range(dim_y):
                    for mm in range(dim_y):
                        row = i * dim_y + m
                        col = j * dim_y + mm
                        nij = -p * r_mat[row, col]
                        if m == mm:
                            nij += pij
                        if row == col:
                            nij += p * c + r
                        m_ij = nij * inv2r
                        m1cum[row, col] += m_ij
                        dot1 += (m_ij * rho[col, row]).real
        losses1[t] = dot1

        # N2 = -0.5 tr_A proj ; loss2 = (N2 + r I)/2r
        dot2 = 0.0
        for i in range(dim_x):
            for j in range(dim_x):
                nij = -0.5 * (proj[i, j] + proj[dim_x + i, dim_x + j])
                if i == j:
                    nij += r
                m_ij = nij * inv2r
                m2cum[i, j] += m_ij
                dot2 += (m_ij * sig[j, i]).real
        losses2[t] = dot2

    return value_sum / rounds, losses1, losses2, m1cum, m2cum


def warmup():
    """Trigger JIT compilation on tiny inputs (no-op without numba)."""
    a = np.eye(4, dtype=np.complex128)
    b = np.eye(2, dtype=np.complex128) * 0.5
    feasibility_game_loop(a, b, 0.5, 3.0, 0.01, 2, 2, True)
    feasibility_game_loop(a, b, 0.5, 3.0, 0.01, 2, 2, False)
    two_register_game_loop(np.eye(4, dtype=np.complex128), 0.5, 3.0, 0.01, 2, 2, 1)
    jacobi_eigh(a)
