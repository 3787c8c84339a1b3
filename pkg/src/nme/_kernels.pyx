# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled grid kernels for real trigonometric polynomials.

Norm kernels return the sup of each derivative. By Bernstein's inequality
the true sup is at most ``gridmax / (1 - (pi K / M)^2 / 2)``, so only grid
local maxima above ``gridmax * (2 - 1/that factor)`` can hide a larger
peak; those are polished by Newton steps on the derivative.

Coefficient layout is ``[a_0, a_1..a_K, b_1..b_K]``; tables are
``cos_tab[k, m] = cos(k theta_m)`` and ``sin_tab[k, m] = sin(k theta_m)``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, cos, sin, sqrt

cnp.import_array()


def synthesize(const double[::1] coeffs, const double[:, ::1] cos_tab,
               const double[:, ::1] sin_tab):
    cdef Py_ssize_t K = cos_tab.shape[0] - 1
    cdef Py_ssize_t M = cos_tab.shape[1]
    cdef Py_ssize_t k, m
    cdef double a, b
    out = np.empty(M)
    cdef double[::1] o = out
    for m in range(M):
        o[m] = coeffs[0]
    for k in range(1, K + 1):
        a = coeffs[k]
        b = coeffs[K + k]
        for m in range(M):
            o[m] += a * cos_tab[k, m] + b * sin_tab[k, m]
    return out


def analyze(const double[::1] values, const double[:, ::1] cos_tab,
            const double[:, ::1] sin_tab):
    cdef Py_ssize_t K = cos_tab.shape[0] - 1
    cdef Py_ssize_t M = cos_tab.shape[1]
    cdef Py_ssize_t k, m
    cdef double sa, sb, v
    cdef double w = 2.0 / M
    out = np.empty(2 * K + 1)
    cdef double[::1] o = out
    sa = 0.0
    for m in range(M):
        sa += values[m]
    o[0] = sa / M
    for k in range(1, K + 1):
        sa = 0.0
        sb = 0.0
        for m in range(M):
            v = values[m]
            sa += v * cos_tab[k, m]
            sb += v * sin_tab[k, m]
        o[k] = sa * w
        o[K + k] = sb * w
    return out


cdef inline double _grid_factor(Py_ssize_t K, Py_ssize_t M) noexcept nogil:
    cdef double a = 3.141592653589793 * K / M
    return 1.0 - 0.5 * a * a


cdef double _polish(const double* alpha, const double* beta, Py_ssize_t K,
                    double theta, double h, double* t_out) noexcept nogil:
    # Newton on p'(theta) = 0 from a grid local max of |p|; returns |p| at
    # the polished point (recurrence value, stored in t_out), or -1 if the
    # iterate leaves the bracket
    cdef double t = theta, c1, s1, ck, sk, cn, p, d1, d2, step, kf
    cdef Py_ssize_t it, k
    for it in range(12):
        c1 = cos(t)
        s1 = sin(t)
        ck = 1.0
        sk = 0.0
        d1 = 0.0
        d2 = 0.0
        for k in range(1, K + 1):
            cn = ck * c1 - sk * s1
            sk = sk * c1 + ck * s1
            ck = cn
            kf = <double>k
            d1 += kf * (beta[k] * ck - alpha[k] * sk)
            d2 -= kf * kf * (alpha[k] * ck + beta[k] * sk)
        if d2 == 0.0:
            break
        step = d1 / d2
        t -= step
        if fabs(t - theta) > h:
            return -1.0
        if fabs(step) < 1e-8 * h:
            break
    c1 = cos(t)
    s1 = sin(t)
    ck = 1.0
    sk = 0.0
    p = alpha[0]
    for k in range(1, K + 1):
        cn = ck * c1 - sk * s1
        sk = sk * c1 + ck * s1
        ck = cn
        p += alpha[k] * ck + beta[k] * sk
    t_out[0] = t
    return fabs(p)


cdef double _eval_direct(const double* alpha, const double* beta, Py_ssize_t K,
                         double t) noexcept nogil:
    # direct cos/sin keep pure-mode peaks exact; the recurrence drifts by ulps
    cdef double p = alpha[0]
    cdef Py_ssize_t k
    for k in range(1, K + 1):
        p += alpha[k] * cos(k * t) + beta[k] * sin(k * t)
    return fabs(p)


cdef void _grid_derivatives(const double[::1] coeffs, const double[:, ::1] cos_tab,
                            const double[:, ::1] sin_tab, Py_ssize_t N,
                            double[:, ::1] work) noexcept nogil:
    # work has shape (N + 3, M): rows 0..N receive the derivatives on the
    # grid, the last two hold p = a cos + b sin and q = b cos - a sin for
    # the current mode
    cdef Py_ssize_t K = cos_tab.shape[0] - 1
    cdef Py_ssize_t M = cos_tab.shape[1]
    cdef Py_ssize_t k, m, j
    cdef double a, b, kp, w
    cdef double* p = &work[N + 1, 0]
    cdef double* q = &work[N + 2, 0]
    for m in range(M):
        work[0, m] = coeffs[0]
    for j in range(1, N + 1):
        for m in range(M):
            work[j, m] = 0.0
    for k in range(1, K + 1):
        a = coeffs[k]
        b = coeffs[K + k]
        if a == 0.0 and b == 0.0:
            continue
        for m in range(M):
            p[m] = a * cos_tab[k, m] + b * sin_tab[k, m]
        if N > 0:
            for m in range(M):
                q[m] = b * cos_tab[k, m] - a * sin_tab[k, m]
        kp = 1.0
        for j in range(N + 1):
            # d/dtheta maps (p, q) -> k (q, -p)
            w = kp if (j & 3) < 2 else -kp
            if j & 1:
                for m in range(M):
                    work[j, m] += w * q[m]
            else:
                for m in range(M):
                    work[j, m] += w * p[m]
            kp *= k


cdef void _norms_into(const double[::1] coeffs, const double[:, ::1] cos_tab,
                      const double[:, ::1] sin_tab, Py_ssize_t N,
                      double[:, ::1] work, double[:, ::1] ab,
                      double[::1] out) noexcept nogil:
    # ab has shape (2, K + 1) and holds the current derivative's coefficients
    cdef Py_ssize_t K = cos_tab.shape[0] - 1
    cdef Py_ssize_t M = cos_tab.shape[1]
    cdef Py_ssize_t k, m, j, mp, mn
    cdef double v, gmax, thr, vm, h, refined, tmp, pm, pp, p0, den, t0
    cdef double tp, best, best_t
    cdef double* alpha = &ab[0, 0]
    cdef double* beta = &ab[1, 0]
    _grid_derivatives(coeffs, cos_tab, sin_tab, N, work)
    alpha[0] = coeffs[0]
    beta[0] = 0.0
    for k in range(1, K + 1):
        alpha[k] = coeffs[k]
        beta[k] = coeffs[K + k]
    h = 6.283185307179586 / M
    thr = _grid_factor(K, M)
    thr = 2.0 - 1.0 / thr
    for j in range(N + 1):
        if j > 0:
            # (alpha, beta) -> k (beta, -alpha)
            alpha[0] = 0.0
            for k in range(1, K + 1):
                tmp = alpha[k]
                alpha[k] = k * beta[k]
                beta[k] = -k * tmp
        gmax = 0.0
        for m in range(M):
            if fabs(work[j, m]) > gmax:
                gmax = fabs(work[j, m])
        v = gmax
        best = -1.0
        best_t = 0.0
        if gmax > 0.0:
            for m in range(M):
                vm = fabs(work[j, m])
                if vm < gmax * thr:
                    continue
                mp = m - 1 if m > 0 else M - 1
                mn = m + 1 if m < M - 1 else 0
                if vm < fabs(work[j, mp]) or vm < fabs(work[j, mn]):
                    continue
                # parabolic vertex through the three grid values as start
                pm = work[j, mp]
                p0 = work[j, m]
                pp = work[j, mn]
                den = pm - 2.0 * p0 + pp
                t0 = h * m
                if den != 0.0 and fabs(0.5 * (pm - pp) / den) < 1.0:
                    t0 += h * 0.5 * (pm - pp) / den
                refined = _polish(alpha, beta, K, t0, 1.5 * h, &tp)
                if refined > best:
                    best = refined
                    best_t = tp
        if best >= 0.0:
            refined = _eval_direct(alpha, beta, K, best_t)
            if refined > v:
                v = refined
        if j > 0 and v < out[j - 1]:
            v = out[j - 1]
        out[j] = v


cdef int _box_check(const double[::1] coeffs, const double[:, ::1] cos_tab,
                    const double[:, ::1] sin_tab, Py_ssize_t N,
                    const double[::1] bound, double[:, ::1] work,
                    double[:, ::1] ab, double[::1] out) noexcept nogil:
    # 1 iff every level sup <= bound; polishes only levels the grid
    # max cannot decide
    cdef Py_ssize_t M = cos_tab.shape[1]
    cdef Py_ssize_t K = cos_tab.shape[0] - 1
    cdef Py_ssize_t j, m, k
    cdef double gmax, amp, kp, fac = _grid_factor(K, M)
    cdef bint undecided = False
    # |sum a_k cos + b_k sin| <= sum k^j sqrt(a_k^2 + b_k^2) decides most calls
    for j in range(N + 1):
        out[j] = fabs(coeffs[0]) if j == 0 else 0.0
    for k in range(1, K + 1):
        amp = sqrt(coeffs[k] * coeffs[k] + coeffs[K + k] * coeffs[K + k])
        kp = amp
        for j in range(N + 1):
            out[j] += kp
            kp *= k
    for j in range(N + 1):
        if out[j] > bound[j] * (1.0 - 1e-12):
            undecided = True
    if not undecided:
        return 1
    undecided = False
    _grid_derivatives(coeffs, cos_tab, sin_tab, N, work)
    for j in range(N + 1):
        gmax = 0.0
        for m in range(M):
            if fabs(work[j, m]) > gmax:
                gmax = fabs(work[j, m])
        if gmax > bound[j]:
            return 0
        if gmax > bound[j] * fac:
            undecided = True
    if not undecided:
        return 1
    _norms_into(coeffs, cos_tab, sin_tab, N, work, ab, out)
    for j in range(N + 1):
        if out[j] > bound[j]:
            return 0
    return 1


def level_norms(const double[::1] coeffs, const double[:, ::1] cos_tab,
                const double[:, ::1] sin_tab, Py_ssize_t N):
    out = np.empty(N + 1)
    work = np.empty((N + 3, cos_tab.shape[1]))
    ab = np.empty((2, cos_tab.shape[0]))
    _norms_into(coeffs, cos_tab, sin_tab, N, work, ab, out)
    return out


def level_norms_batch(const double[:, ::1] coeff_matrix,
                      const double[:, ::1] cos_tab,
                      const double[:, ::1] sin_tab, Py_ssize_t N):
    cdef Py_ssize_t B = coeff_matrix.shape[0]
    cdef Py_ssize_t i
    out = np.empty((B, N + 1))
    work = np.empty((N + 3, cos_tab.shape[1]))
    ab = np.empty((2, cos_tab.shape[0]))
    cdef double[:, ::1] o = out
    cdef double[:, ::1] wk = work
    cdef double[:, ::1] abv = ab
    with nogil:
        for i in range(B):
            _norms_into(coeff_matrix[i], cos_tab, sin_tab, N, wk, abv, o[i])
    return out


# continuation engine for f(x) = L x + mu P((L x)^2), L a Fourier multiplier

cdef void _synth_into(const double* c, Py_ssize_t K, const double[:, ::1] cos_tab,
                      const double[:, ::1] sin_tab, double* out, double* scratch) noexcept nogil:
    # folded: out[m] = a0 + C_m + S_m and out[M - m] = a0 + C_m - S_m;
    # scratch holds S on the half grid
    cdef Py_ssize_t M = cos_tab.shape[1]
    cdef Py_ssize_t H = M // 2
    cdef Py_ssize_t k, m
    cdef double a, b, v
    for m in range(H + 1):
        out[m] = c[0]
        scratch[m] = 0.0
    for k in range(1, K + 1):
        a = c[k]
        b = c[K + k]
        if a == 0.0 and b == 0.0:
            continue
        for m in range(H + 1):
            out[m] += a * cos_tab[k, m]
            scratch[m] += b * sin_tab[k, m]
    for m in range(1, M - H):
        v = out[m]
        out[M - m] = v - scratch[m]
        out[m] = v + scratch[m]
    if M % 2 == 0:
        out[H] += scratch[H]
    out[0] += scratch[0]


cdef void _analyze_into(const double* v, Py_ssize_t K, const double[:, ::1] cos_tab,
                        const double[:, ::1] sin_tab, double* out, double* scratch) noexcept nogil:
    # folded: even part e_m = v_m + v_{M-m} pairs with cos, odd part with sin
    cdef Py_ssize_t M = cos_tab.shape[1]
    cdef Py_ssize_t H = M // 2
    cdef Py_ssize_t k, m
    cdef double sa, sb
    cdef double w = 2.0 / M
    cdef double* e = scratch
    cdef double* o = scratch + H + 1
    sa = 0.0
    for m in range(M):
        sa += v[m]
    out[0] = sa / M
    e[0] = v[0]
    o[0] = 0.0
    for m in range(1, M - H):
        e[m] = v[m] + v[M - m]
        o[m] = v[m] - v[M - m]
    if M % 2 == 0:
        e[H] = v[H]
        o[H] = 0.0
    for k in range(1, K + 1):
        sa = 0.0
        sb = 0.0
        for m in range(H + 1):
            sa += e[m] * cos_tab[k, m]
            sb += o[m] * sin_tab[k, m]
        out[k] = sa * w
        out[K + k] = sb * w


cdef inline void _add_cos(double* col, Py_ssize_t K, Py_ssize_t m, double v) noexcept nogil:
    if m < 0:
        m = -m
    if m <= K:
        col[m] += v


cdef inline void _add_sin(double* col, Py_ssize_t K, Py_ssize_t m, double v) noexcept nogil:
    if m == 0:
        return
    if m < 0:
        m = -m
        v = -v
    if m <= K:
        col[K + m] += v


cdef void _galerkin_matrix(const double* g, Py_ssize_t K, double* G) noexcept nogil:
    # column-major G[i + n*j] = coefficient i of P(g * basis_j), exact
    # product-to-sum expansion for degree-K factors
    cdef Py_ssize_t n = 2 * K + 1
    cdef Py_ssize_t i, j, k
    cdef double al, be
    cdef double* col
    for i in range(n * n):
        G[i] = 0.0
    for j in range(K + 1):
        col = G + n * j
        for k in range(K + 1):
            al = g[k]
            be = g[K + k] if k > 0 else 0.0
            # g_k * cos(j): cos k cos j, sin k cos j
            _add_cos(col, K, k - j, 0.5 * al)
            _add_cos(col, K, k + j, 0.5 * al)
            _add_sin(col, K, k + j, 0.5 * be)
            _add_sin(col, K, k - j, 0.5 * be)
    for j in range(1, K + 1):
        col = G + n * (K + j)
        for k in range(K + 1):
            al = g[k]
            be = g[K + k] if k > 0 else 0.0
            # cos k sin j, sin k sin j
            _add_sin(col, K, j + k, 0.5 * al)
            _add_sin(col, K, j - k, 0.5 * al)
            _add_cos(col, K, k - j, 0.5 * be)
            _add_cos(col, K, k + j, -0.5 * be)


cdef int _lu_solve(double* G, Py_ssize_t n, double* rhs) noexcept nogil:
    # Gaussian elimination with partial pivoting on column-major G, in place;
    # multipliers are kept in column k so the updates run down contiguous columns
    cdef Py_ssize_t i, j, k, p
    cdef double best, tmp, g
    cdef double* colk
    cdef double* colj
    for k in range(n):
        colk = G + n * k
        p = k
        best = fabs(colk[k])
        for i in range(k + 1, n):
            if fabs(colk[i]) > best:
                best = fabs(colk[i])
                p = i
        if best == 0.0:
            return -1
        if p != k:
            for j in range(n):
                tmp = G[k + n * j]
                G[k + n * j] = G[p + n * j]
                G[p + n * j] = tmp
            tmp = rhs[k]
            rhs[k] = rhs[p]
            rhs[p] = tmp
        tmp = 1.0 / colk[k]
        for i in range(k + 1, n):
            colk[i] *= tmp
        for j in range(k + 1, n):
            colj = G + n * j
            g = colj[k]
            if g != 0.0:
                for i in range(k + 1, n):
                    colj[i] -= colk[i] * g
        g = rhs[k]
        if g != 0.0:
            for i in range(k + 1, n):
                rhs[i] -= colk[i] * g
    for i in range(n - 1, -1, -1):
        tmp = rhs[i]
        for j in range(i + 1, n):
            tmp -= G[i + n * j] * rhs[j]
        rhs[i] = tmp / G[i + n * i]
    return 0


cdef enum:
    # status codes returned by the engine and rejection causes
    ST_OK = 0
    ST_UNDERFLOW = 1
    ST_GUARD_EXIT = 2
    ST_MAX_STEPS = 3
    ST_TAME_VIOLATION = 4
    ST_SINGULAR = 5
    C_NONE = 0
    C_DEFECT = 1
    C_GUARD = 2

OK, UNDERFLOW, GUARD_EXIT, MAX_STEPS, TAME_VIOLATION, SINGULAR = range(6)
CAUSE_NONE, CAUSE_DEFECT, CAUSE_GUARD = range(3)


cdef class _TraceBuffer:
    cdef public object t, r, accepted, cause, defect, resid, norm, bound, box_ok
    cdef public Py_ssize_t size
    cdef Py_ssize_t cap, L
    # typed views on the arrays above, refreshed when they grow
    cdef double[::1] tv, rv
    cdef signed char[::1] av, cv, bv
    cdef double[:, ::1] dv, ev, nv, bd

    def __init__(self, Py_ssize_t L, Py_ssize_t cap=1024):
        self.L = L
        self.cap = cap
        self.size = 0
        self.t = np.empty(cap)
        self.r = np.empty(cap)
        self.accepted = np.empty(cap, dtype=np.int8)
        self.cause = np.empty(cap, dtype=np.int8)
        self.box_ok = np.empty(cap, dtype=np.int8)
        self.defect = np.empty((cap, L))
        self.resid = np.empty((cap, L))
        self.norm = np.empty((cap, L))
        self.bound = np.empty((cap, L))
        self._views()

    cdef void _views(self):
        self.tv = self.t
        self.rv = self.r
        self.av = self.accepted
        self.cv = self.cause
        self.bv = self.box_ok
        self.dv = self.defect
        self.ev = self.resid
        self.nv = self.norm
        self.bd = self.bound

    cdef void _grow(self):
        self.cap *= 2
        self.t = np.resize(self.t, self.cap)
        self.r = np.resize(self.r, self.cap)
        self.accepted = np.resize(self.accepted, self.cap)
        self.cause = np.resize(self.cause, self.cap)
        self.box_ok = np.resize(self.box_ok, self.cap)
        self.defect = np.resize(self.defect, (self.cap, self.L))
        self.resid = np.resize(self.resid, (self.cap, self.L))
        self.norm = np.resize(self.norm, (self.cap, self.L))
        self.bound = np.resize(self.bound, (self.cap, self.L))
        self._views()

    cdef void push(self, double t, double r, int acc, int cause, int box_ok,
                   const double* defect, const double* resid, const double* norm,
                   const double* s_mon, double scale):
        cdef Py_ssize_t i = self.size, j
        if i == self.cap:
            self._grow()
        self.tv[i] = t
        self.rv[i] = r
        self.av[i] = acc
        self.cv[i] = cause
        self.bv[i] = box_ok
        for j in range(self.L):
            self.dv[i, j] = defect[j]
            self.ev[i, j] = resid[j]
            self.nv[i, j] = norm[j]
            self.bd[i, j] = scale * s_mon[j]
        self.size = i + 1


def multiplier_quadratic_continuation(
        const double[::1] mult, double mu, const double[::1] y,
        const double[::1] s, const double[:, ::1] cos_tab,
        const double[:, ::1] sin_tab, Py_ssize_t N, Py_ssize_t top,
        double eps, double r0, double r_min, double growth,
        long max_attempts, double slack, double guard_floor):
    """Continuation loop for ``f(x) = L x + mu P((L x)^2)``.

    ``mult`` holds the multiplier of ``L`` per coefficient, ``s`` the tame
    box ``c_n |y|_{n+d}`` (``inf`` where exempt). The guard is
    ``min(1 + 2 mu L x) >= guard_floor``. Returns
    ``(status, t, x, fx, h_norms, trace_buffer)``.
    """
    cdef Py_ssize_t K = cos_tab.shape[0] - 1
    cdef Py_ssize_t M = cos_tab.shape[1]
    cdef Py_ssize_t n = 2 * K + 1
    cdef Py_ssize_t L = top + 1
    cdef Py_ssize_t i, j
    cdef long attempts = 0
    cdef int status = ST_OK, last_cause = C_NONE, accepted, box_ok
    cdef bint final, check_guard = mu != 0.0
    cdef double t = 0.0, r, r_trial = r0, t_new, gmin

    x_a = np.zeros(n)
    fx_a = np.zeros(n)
    h_a = np.zeros(n)
    xn_a = np.zeros(n)
    fn_a = np.zeros(n)
    tmp_a = np.zeros(n)
    lx_a = np.zeros(n)
    vals_a = np.zeros(M)
    fold_a = np.zeros(M + 2)
    G_a = np.zeros(n * n)
    work_a = np.empty((N + 3, M))
    ab_a = np.empty((2, K + 1))
    hn_a = np.zeros(N + 1)
    hb_a = np.zeros(N + 1)
    dn_a = np.zeros(L)
    rn_a = np.zeros(L)
    xnorm_a = np.zeros(L)
    nan_a = np.full(L, np.nan)
    s_mon_a = np.array(s[:L])
    cdef double[::1] x = x_a, fx = fx_a, h = h_a, xn = xn_a, fn = fn_a
    cdef double[::1] tmp = tmp_a, lx = lx_a, vals = vals_a, G = G_a, fold = fold_a
    cdef double[:, ::1] work = work_a, ab = ab_a
    cdef double[::1] hb = hb_a
    cdef double[::1] hn = hn_a, dn = dn_a, rn = rn_a, xnorm = xnorm_a
    cdef double[::1] nanv = nan_a, s_mon = s_mon_a
    buf = _TraceBuffer(L)
    cdef _TraceBuffer tb = buf

    # residual at t = 0 is |f(0)| = 0
    for j in range(L):
        rn[j] = 0.0
        xnorm[j] = 0.0

    while t < 1.0:
        # h = L^{-1} G(x)^{-1} y with g = 1 + 2 mu L x
        for i in range(n):
            lx[i] = 2.0 * mu * mult[i] * x[i]
        lx[0] += 1.0
        _galerkin_matrix(&lx[0], K, &G[0])
        for i in range(n):
            h[i] = y[i]
        if _lu_solve(&G[0], n, &h[0]) != 0:
            status = ST_SINGULAR
            break
        for i in range(n):
            h[i] = h[i] / mult[i]
        for j in range(N + 1):
            hb[j] = s[j] * (1.0 + slack)
        if not _box_check(h, cos_tab, sin_tab, N, hb, work, ab, hn):
            _norms_into(h, cos_tab, sin_tab, N, work, ab, hn)
            status = ST_TAME_VIOLATION
            break
        last_cause = C_NONE
        while True:
            attempts += 1
            if attempts > max_attempts:
                status = ST_MAX_STEPS
                break
            if r_trial < r_min:
                status = ST_GUARD_EXIT if last_cause == C_GUARD else ST_UNDERFLOW
                break
            final = r_trial >= 1.0 - t
            r = 1.0 - t if final else r_trial
            for i in range(n):
                xn[i] = x[i] + r * h[i]
                tmp[i] = mult[i] * xn[i]
            _synth_into(&tmp[0], K, cos_tab, sin_tab, &vals[0], &fold[0])
            if check_guard:
                gmin = 1.0 + 2.0 * mu * vals[0]
                for i in range(1, M):
                    if 1.0 + 2.0 * mu * vals[i] < gmin:
                        gmin = 1.0 + 2.0 * mu * vals[i]
                if not (gmin >= guard_floor):
                    last_cause = C_GUARD
                    tb.push(t, r, 0, C_GUARD, 1, &nanv[0], &rn[0], &xnorm[0], &s_mon[0], t)
                    r_trial = r / 2.0
                    continue
            # f(x_new) = L x_new + mu P((L x_new)^2)
            for i in range(M):
                vals[i] = vals[i] * vals[i]
            _analyze_into(&vals[0], K, cos_tab, sin_tab, &fn[0], &fold[0])
            for i in range(n):
                fn[i] = tmp[i] + mu * fn[i]
                tmp[i] = fn[i] - fx[i] - r * y[i]
            _norms_into(tmp, cos_tab, sin_tab, top, work, ab, dn)
            accepted = 1
            for j in range(L):
                if not (dn[j] <= r * eps):
                    accepted = 0
            if accepted:
                t_new = 1.0 if final else t + r
                for i in range(n):
                    x[i] = xn[i]
                    fx[i] = fn[i]
                    tmp[i] = fn[i] - t_new * y[i]
                _norms_into(tmp, cos_tab, sin_tab, top, work, ab, rn)
                _norms_into(x, cos_tab, sin_tab, top, work, ab, xnorm)
                box_ok = 1
                for j in range(L):
                    if xnorm[j] > t_new * s_mon[j] * (1.0 + slack):
                        box_ok = 0
                tb.push(t, r, 1, C_NONE, box_ok, &dn[0], &rn[0], &xnorm[0], &s_mon[0], t_new)
                t = t_new
                r_trial = r * growth
                break
            last_cause = C_DEFECT
            tb.push(t, r, 0, C_DEFECT, 1, &dn[0], &rn[0], &xnorm[0], &s_mon[0], t)
            r_trial = r / 2.0
        if status != ST_OK:
            break
    return status, t, x_a, fx_a, hn_a, buf
